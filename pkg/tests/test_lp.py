import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from obnoxious_voting.distortion import adversarial_lp
from obnoxious_voting.lp import (
    TAU_LP,
    LinearProgram,
    LpError,
    NumericalFailure,
    Relation,
    Status,
    check_solution,
    solve,
)
from obnoxious_voting.model import OrdinalProfile


def lp(objective, rows):
    prog = LinearProgram(np.asarray(objective, float))
    for coeffs, rel, rhs in rows:
        prog.add(coeffs, rel, rhs)
    return prog


def test_bounded_maximum():
    sol = solve(lp([1], [([1], "<=", 5)]))
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(5)


def test_unbounded():
    assert solve(lp([1], [([1], ">=", 1)])).status is Status.UNBOUNDED


def test_infeasible():
    sol = solve(lp([1, 1], [([1, 1], "<=", 1), ([1, 0], ">=", 2)]))
    assert sol.status is Status.INFEASIBLE


def test_equality_and_negative_rhs():
    # max x - y, x + y = 4, x - y <= 2, -x <= -1
    sol = solve(lp([1, -1], [([1, 1], "=", 4), ([1, -1], "<=", 2), ([-1, 0], "<=", -1)]))
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(2)
    assert check_solution(lp([1, -1], [([1, 1], "=", 4), ([1, -1], "<=", 2), ([-1, 0], "<=", -1)]), sol).ok()


def test_degenerate_cycling_example_terminates():
    # Beale's example cycles under the textbook largest-coefficient rule
    prog = lp(
        [0.75, -150, 0.02, -6],
        [
            ([0.25, -60, -0.04, 9], "<=", 0),
            ([0.5, -90, -0.02, 3], "<=", 0),
            ([0, 0, 1, 0], "<=", 1),
        ],
    )
    sol = solve(prog)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(0.05)


def test_iteration_cap_raises_with_basis():
    prog = lp([1, 1], [([1, 0], "<=", 1), ([0, 1], "<=", 1)])
    with pytest.raises(NumericalFailure) as info:
        solve(prog, max_iter=1)
    assert len(info.value.basis) == 2


def test_bad_constraint_rejected():
    prog = LinearProgram(np.zeros(2))
    with pytest.raises(LpError):
        prog.add([1.0], "<=", 1)
    with pytest.raises(LpError):
        prog.add([1.0, 1.0], "<=", float("inf"))


def test_dump_is_stable():
    prog = lp([1, 0], [({0: 1.0}, "<=", 2)])
    text = prog.dump()
    assert text == prog.dump()
    assert "c0: +1 x0 <= 2" in text


@st.composite
def random_lps(draw):
    n = draw(st.integers(1, 5))
    rows = draw(st.integers(1, 6))
    coef = st.integers(-4, 4).map(float)
    c = [draw(coef) for _ in range(n)]
    cons = []
    for _ in range(rows):
        a = [draw(coef) for _ in range(n)]
        rel = draw(st.sampled_from(["<=", "=", ">="]))
        cons.append((a, rel, float(draw(st.integers(-5, 8)))))
    return c, cons


def scipy_solve(c, cons):
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for a, rel, b in cons:
        if rel == "<=":
            a_ub.append(a); b_ub.append(b)
        elif rel == ">=":
            a_ub.append([-v for v in a]); b_ub.append(-b)
        else:
            a_eq.append(a); b_eq.append(b)
    return linprog(
        -np.asarray(c),
        A_ub=a_ub or None, b_ub=b_ub or None,
        A_eq=a_eq or None, b_eq=b_eq or None,
        bounds=[(0, None)] * len(c), method="highs",
    )


@settings(max_examples=200)
@given(random_lps())
def test_agrees_with_scipy(case):
    c, cons = case
    ref = scipy_solve(c, cons)
    if ref.status not in (0, 2, 3):
        return
    prog = lp(c, cons)
    sol = solve(prog)
    expected = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}[ref.status]
    assert sol.status is expected
    if expected is Status.OPTIMAL:
        assert sol.objective_value == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)
        assert check_solution(prog, sol).ok()


@settings(max_examples=100)
@given(random_lps(), st.lists(st.floats(0, 5), min_size=5, max_size=5))
def test_weak_duality_spot_check(case, point):
    c, cons = case
    prog = lp(c, cons)
    sol = solve(prog)
    if sol.status is not Status.OPTIMAL:
        return
    x = np.asarray(point[: len(c)])
    feasible = check_solution(prog, type(sol)(Status.OPTIMAL, x, float(prog.objective @ x), 0))
    if feasible.max_violation <= TAU_LP:
        assert prog.objective @ x <= sol.objective_value + TAU_LP


@given(random_lps())
def test_deterministic(case):
    c, cons = case
    a, b = solve(lp(c, cons)), solve(lp(c, cons))
    assert a.status is b.status and a.basis == b.basis and a.iterations == b.iterations
    assert np.array_equal(a.values, b.values)


def two_camp_profile():
    return OrdinalProfile.single_group([(0, 1), (0, 1), (1, 0), (1, 0)])


def two_camp_point(pairs):
    # agents at 1,1,0,0 and a at 0, b at 2 on a line, halved so SW(a) = 1
    coords = np.array([1, 1, 0, 0, 0, 2], float) / 2
    return np.array([abs(coords[p] - coords[q]) for p, q in pairs.pairs])


def test_hand_built_witness_is_feasible_with_value_three():
    prog, pairs = adversarial_lp(two_camp_profile(), winner=0, target=1)
    x = two_camp_point(pairs)
    res = check_solution(prog, type(solve(prog))(Status.OPTIMAL, x, 3.0, 0))
    assert res.max_violation <= TAU_LP
    assert res.objective == pytest.approx(3.0)


def test_perturbed_point_is_flagged():
    prog, pairs = adversarial_lp(two_camp_profile(), winner=0, target=1)
    x = two_camp_point(pairs)
    x[pairs(0, 4)] += 1e-3  # breaks normalization and triangles
    res = check_solution(prog, type(solve(prog))(Status.OPTIMAL, x, float(prog.objective @ x), 0))
    assert res.max_violation > TAU_LP


def test_adversarial_lp_audit_on_optimum():
    prog, _ = adversarial_lp(two_camp_profile(), winner=0, target=1)
    sol = solve(prog)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(3.0, abs=1e-9)
    res = check_solution(prog, sol)
    assert res.ok() and res.duality_gap <= TAU_LP
