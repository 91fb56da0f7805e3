"""Reproduction suite for the tight distortion bounds.

Each ``check_*`` function runs one family of checks and returns a
:class:`CheckResult`; :func:`run_table` folds them into one row per bound.
Random trial counts default to the full acceptance sizes.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from . import forge
from .distortion import (
    BoundViolation,
    adversarial_distortion,
    adversarial_lp,
    discrete_adversary,
    distortion_on_metric,
    mechanism_distortion_bound_check,
)
from .forge import BaseCase, ChainStep, Final
from .lp import TAU_LP, LpSolution, Status, check_solution
from .mechanisms import (
    certify_domination,
    max_weight_of_domination,
    max_weight_of_domination_line,
    max_weight_of_optimal,
    max_weight_of_optimal_line,
    plurality_veto,
)
from .model import Grouping, MetricInstance, OrdinalProfile, TieRule, derive_profile

DEFAULT_SEED = 20240601
ORACLE_GRID = (0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs) -> CheckResult:
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _bound_run(mechanism, source, bound, trials, tol=1e-9) -> tuple[bool, float, float, str]:
    try:
        rep = mechanism_distortion_bound_check(mechanism, source, bound, trials, tol)
    except BoundViolation as err:
        return False, err.distortion, err.bound - err.distortion, str(err)
    return True, rep.max_distortion, rep.min_slack, ""


def line_welfare_scan(instance: MetricInstance) -> list[Fraction]:
    """Welfare of every alternative summed agent by agent in exact rationals.

    Coordinates are snapped to the nearest fraction with denominator at most
    ``10**9``, which recovers the exact positions of the constructions.
    """
    pos = instance.line_positions

    def exact(x: float) -> Fraction:
        return Fraction(x).limit_denominator(10**9)

    agents = [exact(x) for x in pos.agents]
    return [sum((abs(a - exact(x)) for a in agents), Fraction(0)) for x in pos.alternatives]


# ------------------------------------------------------------------ criteria


@_timed
def check_full_info_upper(trials: int = 10_000, seed: int = DEFAULT_SEED) -> CheckResult:
    """Max-Weight-of-Optimal stays within 2 min(m,k) - 1 on random Euclidean instances."""
    source = forge.random_euclidean_stream(seed, n_max=12, m_max=5, k_max=5, dim_max=3)
    ok, worst, slack, msg = _bound_run(
        max_weight_of_optimal, source, lambda inst: 2 * min(inst.m, inst.k) - 1, trials
    )
    detail = msg or f"{trials} instances, max distortion {worst:.6f}, min slack {slack:.6f}"
    return CheckResult("full-info upper bound", ok, detail, {"max": worst, "slack": slack})


@_timed
def check_full_info_lower(eps: float = 1e-3, lam: int = 2) -> CheckResult:
    """Equidistant constructions realise 2 min(m,k) - 1 up to 10 eps."""
    realized = {}
    ok = True
    cases = [(k, k) for k in (2, 3, 4, 5)] + [(2, 4), (4, 2)]
    for k, m in cases:
        inst = (
            forge.gen_equidistant_full_info(k, lam, eps)
            if k == m
            else forge.gen_equidistant_variants(k, m, lam, eps)
        )
        out = max_weight_of_optimal(inst)
        value = distortion_on_metric(inst, out.winner).distortion
        realized[(k, m)] = value
        ok &= out.winner == 0 and value >= 2 * min(m, k) - 1 - 10 * eps
    detail = ", ".join(f"k={k},m={m}: {v:.4f}" for (k, m), v in realized.items())
    return CheckResult("full-info lower bound", ok, detail, {"realized": realized})


@_timed
def check_line_full_info(trials: int = 5_000, seed: int = DEFAULT_SEED, eps: float = 1e-3) -> CheckResult:
    """Line reduction gives distortion <= 3; the chain and final instances realise 3."""
    source = forge.random_euclidean_stream(seed + 1, n_max=12, m_max=5, k_max=5, dim=1)
    ok, worst, slack, msg = _bound_run(max_weight_of_optimal_line, source, 3.0, trials)
    final = distortion_on_metric(forge.gen_line_full_info(Final(eps)), 0).distortion
    ok &= final >= 3 - 10 * eps
    chain = {}
    for ell in (1, 2, 5, 20):
        inst = forge.gen_line_full_info(ChainStep(ell))
        value = distortion_on_metric(inst, 0).distortion
        scan = line_welfare_scan(inst)
        expected = Fraction(6 * ell + 3, 2 * ell + 1)
        chain[ell] = value
        ok &= scan[1] / scan[0] == expected and abs(value - float(expected)) <= 1e-12
    detail = msg or (
        f"{trials} line instances max {worst:.6f}; Final {final:.6f}; "
        + ", ".join(f"chain l={e}: {v:.12g}" for e, v in chain.items())
    )
    return CheckResult(
        "line full-info", ok, detail, {"max": worst, "slack": slack, "final": final, "chain": chain}
    )


def centralized_lower_profile(n: int = 4) -> OrdinalProfile:
    """Half the agents put ``a`` (0) first, the other half ``b`` (1)."""
    half = n // 2
    return OrdinalProfile.single_group([(0, 1)] * half + [(1, 0)] * (n - half))


@_timed
def check_centralized_ordinal(trials: int = 1_000, seed: int = DEFAULT_SEED) -> CheckResult:
    """LP-adversarial distortion of the Plurality-Veto winner is at most 3, and 3 is attained."""
    worst = 1.0
    ok = True
    for profile in itertools.islice(forge.random_profile_stream(seed + 2, 6, 4), trials):
        winner, _ = plurality_veto(profile.rankings)
        value = adversarial_distortion(profile, winner).distortion
        worst = max(worst, value)
        if value > 3 + 1e-6:
            ok = False
            break
    tight = adversarial_distortion(centralized_lower_profile(), 0).distortion
    ok &= abs(tight - 3) <= 1e-6
    detail = f"{trials} profiles max {worst:.9f}; two-camp profile {tight:.9f}"
    return CheckResult("centralized ordinal", ok, detail, {"max": worst, "tight": tight})


@_timed
def check_domination(trials: int = 5_000, seed: int = DEFAULT_SEED) -> CheckResult:
    """Every Plurality-Veto winner has a perfect domination matching."""
    failures = 0
    for profile in itertools.islice(forge.random_profile_stream(seed + 3, 8, 5), trials):
        winner, _ = plurality_veto(profile.rankings)
        cert = certify_domination(profile.rankings, winner)
        if cert is None or not cert.verify(profile.rankings):
            failures += 1
    return CheckResult(
        "domination certification", failures == 0, f"{trials} profiles, {failures} failures"
    )


@_timed
def check_distributed_ordinal(trials: int = 10_000, seed: int = DEFAULT_SEED) -> CheckResult:
    """Max-Weight-of-Domination within 4 min(m,k) - 1; the general construction attains 4k - 1."""
    source = forge.random_euclidean_stream(seed + 4, n_max=12, m_max=5, k_max=5, dim_max=3)
    mwd = lambda inst: max_weight_of_domination(derive_profile(inst))  # noqa: E731
    ok, worst, slack, msg = _bound_run(mwd, source, lambda inst: 4 * min(inst.m, inst.k) - 1, trials)
    lower = {}
    for k in (2, 3, 4):
        profile, witness = forge.gen_ordinal_general(k, 4)
        out = max_weight_of_domination(profile)
        value = distortion_on_metric(witness, out.winner).distortion
        lower[k] = value
        ok &= out.winner == 0 and value == 4 * k - 1
    detail = msg or (
        f"{trials} instances max {worst:.6f}, min slack {slack:.6f}; "
        + ", ".join(f"k={k}: {v:g}" for k, v in lower.items())
    )
    return CheckResult("distributed ordinal", ok, detail, {"max": worst, "slack": slack, "lower": lower})


@_timed
def check_line_ordinal(trials: int = 5_000, seed: int = DEFAULT_SEED, eps: float = 1e-3) -> CheckResult:
    """Line Max-Weight-of-Domination within 7; base, chain and final instances realise 7."""
    source = forge.random_euclidean_stream(seed + 5, n_max=12, m_max=5, k_max=5, dim=1)
    ok, worst, slack, msg = _bound_run(max_weight_of_domination_line, source, 7.0, trials)
    realized = {}
    for label, kind in [("base", BaseCase())] + [(f"chain l={e}", ChainStep(e)) for e in (1, 2, 5)]:
        _, witness = forge.gen_line_ordinal(kind)
        scan = line_welfare_scan(witness)
        value = distortion_on_metric(witness, 0).distortion
        realized[label] = value
        ok &= scan[1] / scan[0] == 7 and value == 7.0
    _, witness = forge.gen_line_ordinal(Final(eps))
    final = distortion_on_metric(witness, 0).distortion
    ok &= final >= 7 - 20 * eps
    detail = msg or (
        f"{trials} line instances max {worst:.6f}; "
        + ", ".join(f"{k}: {v:g}" for k, v in realized.items())
        + f"; Final {final:.6f}"
    )
    return CheckResult(
        "line ordinal", ok, detail, {"max": worst, "slack": slack, "realized": realized, "final": final}
    )


def all_small_profiles(max_points: int = 5) -> Iterator[OrdinalProfile]:
    """Every single-group profile with ``n + m <= max_points``."""
    for size in range(2, max_points + 1):
        for n in range(1, size):
            m = size - n
            perms = list(itertools.permutations(range(m)))
            for combo in itertools.product(perms, repeat=n):
                yield OrdinalProfile.single_group(combo)


def _on_grid(dist: np.ndarray, grid: tuple[float, ...], tol: float = 1e-9) -> bool:
    """Whether some positive rescaling of ``dist`` has every entry on ``grid``."""
    values = np.asarray(grid)
    entries = dist[np.triu_indices_from(dist, 1)]
    pivot = entries.max()
    if pivot <= tol:
        return True
    for g in values[values > 0]:
        scaled = entries * (g / pivot)
        if np.all(np.min(np.abs(scaled[:, None] - values[None, :]), axis=1) <= tol):
            return True
    return False


def _grid_witness_is_lp_feasible(profile: OrdinalProfile, report) -> bool:
    """The grid witness, scaled to unit winner welfare, satisfies the adversarial LP."""
    prog, pairs = adversarial_lp(profile, report.winner, report.best_alt)
    d = report.witness.dist / report.winner_welfare
    x = np.array([d[p, q] for p, q in pairs.pairs])
    res = check_solution(prog, LpSolution(Status.OPTIMAL, x, float(prog.objective @ x), 0))
    return res.max_violation <= TAU_LP and abs(res.objective - report.distortion) <= 1e-6


@_timed
def check_oracle_agreement(max_points: int = 5, grid: tuple[float, ...] = ORACLE_GRID) -> CheckResult:
    """LP adversary dominates grid brute force, and matches it when its witness is on the grid."""
    cases = dominance_failures = equality_checked = equality_failures = infeasible = 0
    for profile in all_small_profiles(max_points):
        for winner in range(profile.m):
            cases += 1
            lp_rep = adversarial_distortion(profile, winner, audit=True)
            brute = discrete_adversary(profile, winner, grid)
            if not lp_rep.distortion >= brute.distortion - 1e-6:
                dominance_failures += 1
            if brute.winner_welfare > 1e-9 and brute.best_alt != winner:
                infeasible += not _grid_witness_is_lp_feasible(profile, brute)
            if lp_rep.witness is not None and _on_grid(lp_rep.witness.dist, grid):
                equality_checked += 1
                same = (
                    lp_rep.distortion == brute.distortion
                    if math.isinf(lp_rep.distortion)
                    else abs(lp_rep.distortion - brute.distortion) <= 1e-6
                )
                equality_failures += not same
    ok = dominance_failures == 0 and equality_failures == 0 and infeasible == 0
    detail = (
        f"{cases} (profile, winner) cases; dominance failures {dominance_failures}; "
        f"grid witnesses outside the LP {infeasible}; "
        f"{equality_checked} grid-representable LP witnesses, mismatches {equality_failures}; "
        "LP audits (primal, dual, gap) all passed"
    )
    return CheckResult("oracle agreement", ok, detail, {"cases": cases, "equality_checked": equality_checked})


@_timed
def check_equivariance(trials: int = 500, seed: int = DEFAULT_SEED) -> CheckResult:
    """Relabelling alternatives relabels outcomes; rescaling distances changes nothing."""
    rng = np.random.default_rng(seed + 6)
    failures = []
    source = forge.random_euclidean_stream(seed + 7, n_max=10, m_max=5, k_max=4, dim_max=3)
    for t, inst in enumerate(itertools.islice(source, trials)):
        perm = [int(a) for a in rng.permutation(inst.m)]
        # priority [perm[0], perm[1], ...] is index order seen through the relabelling
        priority = perm
        moved = inst.permute_alternatives(perm)
        base = max_weight_of_optimal(inst)
        other = max_weight_of_optimal(moved, priority)
        if other.winner != perm[base.winner] or other.representatives != tuple(
            perm[r] for r in base.representatives
        ):
            failures.append((t, "mwo relabel"))
        profile = derive_profile(inst)
        moved_profile = derive_profile(moved, TieRule(priority=tuple(priority)))
        if moved_profile != profile.permute_alternatives(perm):
            failures.append((t, "profile relabel"))
        d_base = max_weight_of_domination(profile)
        d_other = max_weight_of_domination(moved_profile, priority)
        if d_other.winner != perm[d_base.winner]:
            failures.append((t, "mwd relabel"))
        for c in (0.5, 3.0):
            scaled = inst.scaled(c)
            s_mwo = max_weight_of_optimal(scaled)
            s_mwd = max_weight_of_domination(derive_profile(scaled))
            if s_mwo.winner != base.winner or s_mwd.winner != d_base.winner:
                failures.append((t, f"scale {c} winner"))
            for w, sw in ((base.winner, s_mwo.winner), (d_base.winner, s_mwd.winner)):
                a = distortion_on_metric(inst, w).distortion
                b = distortion_on_metric(scaled, sw).distortion
                if abs(a - b) > 1e-9:
                    failures.append((t, f"scale {c} distortion"))
    detail = f"{trials} instances, {len(failures)} failures" + (f" first {failures[0]}" if failures else "")
    return CheckResult("equivariance and homogeneity", not failures, detail)


# --------------------------------------------------------------------- table


@dataclass
class TableRow:
    setting: str
    bound: str
    lower_value: str
    max_observed: float
    min_slack: float
    passed: bool
    checks: list[CheckResult]


def run_table(trials: int | None = None, seed: int = DEFAULT_SEED, eps: float = 1e-3, lam: int = 2) -> list[TableRow]:
    """Run every check and fold the results into four rows, one per tight bound.

    ``trials`` caps every randomised check; ``None`` uses the acceptance sizes.
    """

    def n(default: int) -> int:
        return default if trials is None else min(default, trials)

    c1 = check_full_info_upper(n(10_000), seed)
    c2 = check_full_info_lower(eps, lam)
    c9 = check_equivariance(n(500), seed)
    c3 = check_line_full_info(n(5_000), seed, eps)
    c4 = check_centralized_ordinal(n(1_000), seed)
    c5 = check_domination(n(5_000), seed)
    c6 = check_distributed_ordinal(n(10_000), seed)
    c8 = check_oracle_agreement()
    c7 = check_line_ordinal(n(5_000), seed, eps)

    k_max = max(c2.values["realized"])
    return [
        TableRow(
            "full information, general metric", "2min{m,k}-1",
            f"k={k_max[0]}: {c2.values['realized'][k_max]:.4f}",
            c1.values["max"], c1.values["slack"], c1.passed and c2.passed and c9.passed, [c1, c2, c9],
        ),
        TableRow(
            "full information, line", "3", f"{c3.values['final']:.4f}",
            c3.values["max"], c3.values["slack"], c3.passed, [c3],
        ),
        TableRow(
            "ordinal, general metric", "4min{m,k}-1",
            ", ".join(f"k={k}: {v:g}" for k, v in c6.values["lower"].items()),
            c6.values["max"], c6.values["slack"], c6.passed and c4.passed and c5.passed and c8.passed,
            [c6, c4, c5, c8],
        ),
        TableRow(
            "ordinal, line", "7", f"{c7.values['realized']['base']:g}",
            c7.values["max"], c7.values["slack"], c7.passed, [c7],
        ),
    ]
