import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from obnoxious_voting import forge
from obnoxious_voting.model import (
    AsymmetryViolation,
    DimensionMismatch,
    Grouping,
    IndexOutOfRange,
    MetricInstance,
    ModelError,
    NegativeDistance,
    OrdinalProfile,
    PointId,
    PointKind,
    TieRule,
    TriangleViolation,
    derive_profile,
    is_consistent,
    optimal_alternative,
    social_welfare,
    validate_matrix,
    validate_metric,
    welfare_vector,
)

from conftest import euclidean_instances


def one_agent_two_alts(dist3: np.ndarray) -> MetricInstance:
    return MetricInstance(1, 2, dist3, Grouping.single(1))


# ----------------------------------------------------------- validation


def test_equilateral_is_metric():
    d = np.ones((3, 3)) - np.eye(3)
    assert validate_metric(one_agent_two_alts(d)).ok


def test_triangle_violation_reports_slack():
    d = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], float)
    result = validate_metric(one_agent_two_alts(d))
    assert not result
    assert isinstance(result.error, TriangleViolation)
    assert result.error.slack == pytest.approx(1.0)
    with pytest.raises(TriangleViolation):
        result.raise_if_invalid()


def test_line_embedding_is_metric():
    inst = MetricInstance.from_line([0.0], [0.5, 1.0], Grouping.single(1))
    assert validate_metric(inst).ok
    assert inst.dist[1, 2] == 0.5


def test_negative_and_asymmetric_rejected():
    d = np.array([[0, -1, 0], [-1, 0, 0], [0, 0, 0]], float)
    assert isinstance(validate_matrix(d).error, NegativeDistance)
    d = np.array([[0, 1, 1], [2, 0, 1], [1, 1, 0]], float)
    assert isinstance(validate_matrix(d).error, AsymmetryViolation)
    d = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 0]], float)
    assert isinstance(validate_matrix(d).error, AsymmetryViolation)


def test_violation_found_among_duplicate_rows():
    # two co-located agents plus a bad triangle on later points
    d = np.array(
        [
            [0, 0, 1, 1],
            [0, 0, 1, 1],
            [1, 1, 0, 3],
            [1, 1, 3, 0],
        ],
        float,
    )
    err = validate_matrix(d).error
    assert isinstance(err, TriangleViolation)
    assert {err.x, err.y} == {2, 3}
    assert err.slack == pytest.approx(1.0)


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        MetricInstance(1, 2, np.zeros((2, 2)), Grouping.single(1))
    with pytest.raises(DimensionMismatch):
        MetricInstance(2, 1, np.zeros((3, 3)), Grouping.single(1))
    assert isinstance(validate_matrix(np.zeros((2, 3))).error, DimensionMismatch)


def test_grouping_rejects_empty_groups():
    with pytest.raises(ModelError):
        Grouping((0, 0, 2), 3)
    with pytest.raises(ModelError):
        Grouping((0, 5), 2)
    g = Grouping.from_sizes([2, 1])
    assert g.assignment == (0, 0, 1)
    assert g.members(0) == (0, 1)
    assert g.sizes() == (2, 1)


@given(euclidean_instances())
def test_generated_instances_are_metrics(inst):
    assert validate_metric(inst).ok


def test_instances_are_immutable():
    inst = forge.gen_random_euclidean(4, 3, 2, 2, 0)
    with pytest.raises(ValueError):
        inst.dist[0, 1] = 5.0


def test_point_lookup():
    inst = MetricInstance.from_line([0.0, 1.0], [3.0], Grouping.single(2))
    assert inst.d(PointId(PointKind.AGENT, 1), PointId(PointKind.ALTERNATIVE, 0)) == 2.0
    with pytest.raises(IndexOutOfRange):
        inst.row(PointId(PointKind.ALTERNATIVE, 1))


def test_from_agent_alt_completion_is_metric():
    rng = np.random.default_rng(3)
    pts = rng.random((7, 2))
    alt_alt = np.linalg.norm(pts[4:, None] - pts[None, 4:], axis=2)
    agent_alt = np.linalg.norm(pts[:4, None] - pts[None, 4:], axis=2)
    inst = MetricInstance.from_agent_alt(agent_alt, alt_alt, Grouping.single(4))
    assert validate_metric(inst).ok
    assert np.allclose(inst.agent_alt, agent_alt)


# -------------------------------------------------------------- rankings


def test_farther_alternative_ranked_first():
    inst = MetricInstance.from_line([0.0], [0.0, 2.0], Grouping.single(1))
    assert derive_profile(inst).rankings == ((1, 0),)


def test_equidistant_tie_goes_to_index_order():
    inst = MetricInstance.from_line([1.0], [0.0, 2.0], Grouping.single(1))
    assert derive_profile(inst).rankings == ((0, 1),)
    assert derive_profile(inst, TieRule(priority=(1, 0))).rankings == ((1, 0),)


def test_equidistant_agents_follow_tie_rule_only():
    profile, witness = forge.gen_ordinal_general(2, 4)
    # the last group's agents sit at 1/2 from everything
    last = witness.grouping.members(witness.k - 1)
    mid = [i for i in last if np.allclose(witness.agent_alt[i], 0.5)]
    assert mid
    assert all(derive_profile(witness).rankings[i] == (0, 1, 2) for i in mid)
    ref = derive_profile(witness, TieRule(reference=profile))
    assert ref == profile
    assert is_consistent(profile, witness)


def test_near_ties_cluster_within_tolerance():
    inst = MetricInstance.from_line([0.0], [1.0, -1.0 - 1e-12], Grouping.single(1))
    assert derive_profile(inst).rankings == ((0, 1),)


@given(euclidean_instances())
def test_derived_profile_is_consistent_permutation(inst):
    profile = derive_profile(inst)
    assert all(sorted(r) == list(range(inst.m)) for r in profile.rankings)
    assert is_consistent(profile, inst)


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0]), min_size=3, max_size=3), st.permutations([0, 1, 2]))
def test_every_tie_pattern_gives_a_permutation(levels, priority):
    # one agent, three alternatives on a star: distances chosen with repeats
    n, m = 1, 3
    d = np.zeros((4, 4))
    d[0, 1:] = d[1:, 0] = levels
    for a, b in itertools.combinations(range(1, 4), 2):
        d[a, b] = d[b, a] = levels[a - 1] + levels[b - 1]
    inst = MetricInstance(n, m, d, Grouping.single(1))
    profile = derive_profile(inst, TieRule(priority=tuple(priority)))
    assert sorted(profile.rankings[0]) == [0, 1, 2]
    assert is_consistent(profile, inst)


def test_profile_validation():
    with pytest.raises(ModelError):
        OrdinalProfile.single_group([(0, 0)])
    with pytest.raises(DimensionMismatch):
        OrdinalProfile(2, 2, ((0, 1),), Grouping.single(2))


# --------------------------------------------------------------- welfare


def test_colocated_agents_have_zero_welfare():
    inst = MetricInstance.from_line([2.0, 2.0], [2.0, 5.0], Grouping.single(2))
    assert social_welfare(inst, 0) == 0.0


def test_two_camp_welfare():
    # a at 0, b at 2; two agents at 1 and two at 0
    inst = MetricInstance.from_line([1.0, 1.0, 0.0, 0.0], [0.0, 2.0], Grouping.single(4))
    assert welfare_vector(inst) == [2.0, 6.0]
    assert optimal_alternative(inst) == (1, 6.0)


def test_base_case_welfare_per_unit_mass():
    q = 8
    _, witness = forge.gen_line_ordinal(forge.BaseCase(), q)
    # three groups of unit mass scaled by q agents each
    assert social_welfare(witness, 0) / q == pytest.approx(3 / 8)
    assert social_welfare(witness, 1) / q == pytest.approx(21 / 8)


def test_single_alternative_is_optimal():
    inst = MetricInstance.from_line([0.0, 4.0], [1.0], Grouping.single(2))
    assert optimal_alternative(inst) == (0, 4.0)


def test_welfare_index_checked():
    inst = MetricInstance.from_line([0.0], [1.0], Grouping.single(1))
    with pytest.raises(IndexOutOfRange):
        social_welfare(inst, 1)


@given(euclidean_instances())
def test_welfare_properties(inst):
    sw = welfare_vector(inst)
    brute = [sum(inst.dist[i, inst.n + x] for i in range(inst.n)) for x in range(inst.m)]
    assert np.allclose(sw, brute)
    for x in range(inst.m):
        assert sw[x] >= 0
        assert (sw[x] == 0) == bool(np.all(inst.agent_alt[:, x] == 0))
    best, value = optimal_alternative(inst)
    assert value == max(sw) and sw[best] == value
    assert best == min(x for x in range(inst.m) if sw[x] == value)


@given(euclidean_instances(), st.sampled_from([0.5, 3.0]))
def test_scaling_preserves_rankings(inst, c):
    assert derive_profile(inst.scaled(c)) == derive_profile(inst)


@given(euclidean_instances(), st.data())
def test_permutation_relabels_profile(inst, data):
    perm = data.draw(st.permutations(list(range(inst.m))))
    moved = inst.permute_alternatives(perm)
    for x in range(inst.m):
        assert social_welfare(moved, perm[x]) == pytest.approx(social_welfare(inst, x))
    assert derive_profile(moved, TieRule(priority=tuple(perm))) == derive_profile(inst).permute_alternatives(perm)
