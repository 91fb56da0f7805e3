import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from obnoxious_voting import forge
from obnoxious_voting.distortion import (
    BoundViolation,
    DegenerateWelfare,
    InvalidGrid,
    Method,
    SearchSpaceTooLarge,
    adversarial_distortion,
    discrete_adversary,
    distortion_on_metric,
    mechanism_distortion_bound_check,
)
from obnoxious_voting.mechanisms import MechanismOutcome, max_weight_of_optimal, plurality_veto
from obnoxious_voting.model import (
    Grouping,
    MetricInstance,
    OrdinalProfile,
    TieRule,
    derive_profile,
    optimal_alternative,
    validate_metric,
)
from obnoxious_voting.serialization import from_json

from conftest import euclidean_instances, profiles

TWO_CAMPS = OrdinalProfile.single_group([(0, 1), (0, 1), (1, 0), (1, 0)])


def two_camp_metric():
    return MetricInstance.from_line([1.0, 1.0, 0.0, 0.0], [0.0, 2.0], Grouping.single(4))


# ---------------------------------------------------------------- exact


def test_optimal_winner_has_distortion_one():
    inst = forge.gen_random_euclidean(6, 3, 2, 2, 5)
    best, _ = optimal_alternative(inst)
    assert distortion_on_metric(inst, best).distortion == 1.0


def test_two_camp_metric_gives_three():
    rep = distortion_on_metric(two_camp_metric(), 0)
    assert rep.distortion == 3.0
    assert rep.method is Method.EXACT_METRIC
    assert (rep.winner_welfare, rep.best_welfare) == (2.0, 6.0)


def test_line_ordinal_chain_step_two():
    # welfare scan of the generated witness: (2l+1)/8 and (14l+7)/8 per unit mass
    q = 8
    _, witness = forge.gen_line_ordinal(forge.ChainStep(2), q)
    rep = distortion_on_metric(witness, 0)
    assert rep.winner_welfare == pytest.approx(q * 5 / 8)
    assert rep.best_welfare == pytest.approx(q * 35 / 8)
    assert rep.distortion == 7.0


def test_zero_welfare_conventions():
    colocated = MetricInstance.from_line([0.0, 0.0], [0.0, 0.0], Grouping.single(2))
    assert distortion_on_metric(colocated, 0).distortion == 1.0
    with pytest.raises(DegenerateWelfare):
        distortion_on_metric(colocated, 0, strict=True)
    inst = MetricInstance.from_line([0.0, 0.0], [0.0, 1.0], Grouping.single(2))
    rep = distortion_on_metric(inst, 0)
    assert math.isinf(rep.distortion) and rep.infinite


@given(euclidean_instances())
def test_distortion_at_least_one(inst):
    for w in range(inst.m):
        assert distortion_on_metric(inst, w).distortion >= 1.0


@given(euclidean_instances())
def test_distortion_is_scale_free(inst):
    for w in range(inst.m):
        base = distortion_on_metric(inst, w).distortion
        for c in (0.5, 3.0):
            other = distortion_on_metric(inst.scaled(c), w).distortion
            assert other == base or abs(other - base) <= 1e-9 * max(1.0, base)


# ------------------------------------------------------------- LP adversary


def test_single_alternative():
    profile = OrdinalProfile.single_group([(0,), (0,)])
    assert adversarial_distortion(profile, 0).distortion == 1.0


def test_two_camp_profile_is_three_with_line_witness():
    rep = adversarial_distortion(TWO_CAMPS, 0)
    assert rep.distortion == pytest.approx(3.0, abs=1e-6)
    assert rep.best_alt == 1
    w = rep.witness.agent_alt
    scale = w[0, 0]
    expected = np.array([[1, 1], [1, 1], [0, 2], [0, 2]], float)
    assert np.allclose(w / scale, expected, atol=1e-7)


def test_winner_ranked_last_by_everyone_is_infinite():
    profile = OrdinalProfile.single_group([(0, 1)])
    rep = adversarial_distortion(profile, 1)
    assert rep.infinite
    assert rep.witness is not None
    assert validate_metric(rep.witness).ok
    assert rep.witness.agent_alt[0, 1] == pytest.approx(0.0, abs=1e-9)


def test_pinned_distances_never_raise_the_value():
    profile, _ = forge.gen_ordinal_general(2, 4)
    free = adversarial_distortion(profile, 0).distortion
    pinned = adversarial_distortion(profile, 0, pinned={(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
    assert pinned.distortion <= free + 1e-7
    assert pinned.distortion == pytest.approx(7.0, abs=1e-6)
    d = pinned.witness.dist[profile.n:, profile.n:]
    assert np.allclose(d[np.triu_indices(3, 1)], d[0, 1])


@settings(max_examples=40)
@given(profiles(n_max=4, m_max=3, k_max=2))
def test_lp_witness_is_consistent_metric(profile):
    for w in range(profile.m):
        rep = adversarial_distortion(profile, w)
        assert rep.distortion >= 1.0
        if rep.witness is None:
            continue
        assert validate_metric(rep.witness, 1e-7).ok
        assert derive_profile(rep.witness, TieRule(reference=profile), tol=1e-7) == profile
        if not rep.infinite:
            ratio = rep.best_welfare / rep.winner_welfare
            assert ratio == pytest.approx(rep.distortion, rel=1e-6)


@settings(max_examples=40)
@given(euclidean_instances(n_max=4, m_max=3, k_max=2))
def test_lp_dominates_every_consistent_metric(inst):
    profile = derive_profile(inst)
    for w in range(inst.m):
        exact = distortion_on_metric(inst, w).distortion
        assert adversarial_distortion(profile, w).distortion >= exact - 1e-6


def test_veto_winner_within_three_on_random_profiles():
    for profile in itertools.islice(forge.random_profile_stream(7, 6, 4), 60):
        winner, _ = plurality_veto(profile.rankings)
        assert adversarial_distortion(profile, winner).distortion <= 3 + 1e-6


# ------------------------------------------------------- discrete oracle


def all_two_by_two():
    for combo in itertools.product([(0, 1), (1, 0)], repeat=2):
        yield OrdinalProfile.single_group(combo)


def test_lp_dominates_grid_on_two_by_two():
    for profile in all_two_by_two():
        for w in range(2):
            brute = discrete_adversary(profile, w, (0, 0.5, 1, 2))
            lp = adversarial_distortion(profile, w)
            assert lp.distortion >= brute.distortion - 1e-6


def test_grid_reaches_lp_on_two_camp_pattern():
    profile = OrdinalProfile.single_group([(0, 1), (1, 0)])
    brute = discrete_adversary(profile, 0, (0, 0.5, 1, 2))
    lp = adversarial_distortion(profile, 0)
    assert brute.distortion == pytest.approx(lp.distortion, abs=1e-6) == pytest.approx(3.0)


def test_single_agent_grid_search():
    profile = OrdinalProfile.single_group([(0, 1)])
    brute = discrete_adversary(profile, 1, (0, 1, 2))
    w = brute.witness.agent_alt
    assert w[0, 0] >= w[0, 1]
    assert adversarial_distortion(profile, 1).distortion >= brute.distortion
    assert brute.method is Method.DISCRETE_BRUTE_FORCE


def test_unanimous_pair_stays_within_three():
    profile = OrdinalProfile.single_group([(0, 1), (0, 1)])
    brute = discrete_adversary(profile, 0, (0, 0.5, 1, 2))
    assert 1.0 <= brute.distortion <= 3.0
    assert adversarial_distortion(profile, 0).distortion <= 3 + 1e-6


def test_grid_errors():
    profile = OrdinalProfile.single_group([(0, 1)])
    with pytest.raises(InvalidGrid):
        discrete_adversary(profile, 0, [])
    with pytest.raises(SearchSpaceTooLarge):
        discrete_adversary(OrdinalProfile.single_group([(0, 1, 2)] * 4), 0, (0, 1, 2), cap=1000)


# ----------------------------------------------------------- bound check


def test_mwo_bound_check_passes():
    source = forge.random_euclidean_stream(3)
    rep = mechanism_distortion_bound_check(
        max_weight_of_optimal, source, lambda inst: 2 * min(inst.m, inst.k) - 1, 300
    )
    assert rep.trials == 300
    assert rep.min_slack >= 0
    assert rep.worst_instance is not None


def test_constant_mechanism_violates_bound_one():
    def constant(inst):
        return MechanismOutcome((0,), 0, {0: frozenset({0})}, {0: inst.n})

    source = forge.random_euclidean_stream(5, m_max=4)
    with pytest.raises(BoundViolation) as info:
        mechanism_distortion_bound_check(constant, source, 1.0, 100)
    err = info.value
    assert err.distortion > 1.0 and err.winner == 0
    restored = from_json(err.serialized)
    assert np.allclose(restored.dist, err.instance.dist)
