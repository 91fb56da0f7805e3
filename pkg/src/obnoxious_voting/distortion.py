"""Distortion of outcomes: exact on a known metric, or worst case over all
metrics consistent with an ordinal profile.

The worst case is computed by linear programming (one LP per competing
alternative) and cross-checked by exhaustive search over distance grids.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np
from numpy.typing import NDArray

from . import lp as lpcore
from .mechanisms import MechanismOutcome
from .model import (
    TAU_METRIC,
    MetricInstance,
    OrdinalProfile,
    TieRule,
    optimal_alternative,
    social_welfare,
)

INF = math.inf


class Method(str, Enum):
    EXACT_METRIC = "exact"
    LP_ADVERSARY = "lp"
    DISCRETE_BRUTE_FORCE = "discrete"


class DegenerateWelfare(ValueError):
    pass


class SearchSpaceTooLarge(ValueError):
    pass


class InvalidGrid(SearchSpaceTooLarge):
    pass


class BoundViolation(AssertionError):
    def __init__(self, instance: MetricInstance, distortion: float, bound: float, winner: int):
        super().__init__(f"distortion {distortion:.12g} exceeds bound {bound:.12g}")
        self.instance = instance
        self.distortion = distortion
        self.bound = bound
        self.winner = winner

    @property
    def serialized(self) -> dict:
        from .serialization import instance_to_json

        return instance_to_json(self.instance)


@dataclass(frozen=True)
class DistortionReport:
    winner: int
    winner_welfare: float
    best_alt: int
    best_welfare: float
    distortion: float
    method: Method
    witness: MetricInstance | None = None
    tie_rule: str = "index"

    @property
    def infinite(self) -> bool:
        return math.isinf(self.distortion)


def _ratio(best: float, winner: float, tol: float = TAU_METRIC) -> float:
    if winner <= tol:
        return 1.0 if best <= tol else INF
    return max(1.0, best / winner)


def distortion_on_metric(
    instance: MetricInstance, winner: int, strict: bool = False
) -> DistortionReport:
    """Optimal welfare over the winner's welfare on a fully known metric.

    If every alternative has zero welfare the distortion is 1, or
    :class:`DegenerateWelfare` is raised when ``strict``.
    """
    best_alt, best = optimal_alternative(instance)
    mine = social_welfare(instance, winner)
    if strict and best <= TAU_METRIC:
        raise DegenerateWelfare("every alternative has zero welfare")
    return DistortionReport(winner, mine, best_alt, best, _ratio(best, mine), Method.EXACT_METRIC)


# ---------------------------------------------------------------- LP adversary


class PairIndex:
    """Variable numbering for the unordered pairs of ``size`` points."""

    def __init__(self, size: int):
        self.size = size
        self.pairs = list(itertools.combinations(range(size), 2))
        self._index = {pq: j for j, pq in enumerate(self.pairs)}

    def __call__(self, p: int, q: int) -> int:
        return self._index[(p, q) if p < q else (q, p)]

    def __len__(self) -> int:
        return len(self.pairs)

    def matrix(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        dist = np.zeros((self.size, self.size))
        for (p, q), v in zip(self.pairs, values):
            dist[p, q] = dist[q, p] = max(0.0, float(v))
        return dist


def adversarial_lp(
    profile: OrdinalProfile,
    winner: int,
    target: int,
    pinned: Mapping[tuple[int, int], float] | None = None,
    winner_welfare: float = 1.0,
    target_welfare: float | None = None,
) -> tuple[lpcore.LinearProgram, PairIndex]:
    """LP maximising ``SW(target)`` over consistent metrics with ``SW(winner)`` fixed.

    ``pinned`` fixes alternative-alternative distances up to the common scale
    (Charnes-Cooper: an extra scale variable multiplies the pinned values).
    """
    n, m = profile.n, profile.m
    pairs = PairIndex(n + m)
    n_vars = len(pairs) + (1 if pinned else 0)
    objective = np.zeros(n_vars)
    for i in range(n):
        objective[pairs(i, n + target)] += 1.0
    names = [f"d{p}_{q}" for p, q in pairs.pairs] + (["scale"] if pinned else [])
    prog = lpcore.LinearProgram(objective, names=names)

    for (p, q), j in zip(pairs.pairs, range(len(pairs))):
        for r in range(n + m):
            if r != p and r != q:
                prog.add({j: 1.0, pairs(p, r): -1.0, pairs(r, q): -1.0}, "<=", 0.0)
    for i, ranking in enumerate(profile.rankings):
        for above, below in zip(ranking, ranking[1:]):
            prog.add({pairs(i, n + below): 1.0, pairs(i, n + above): -1.0}, "<=", 0.0)
    prog.add({pairs(i, n + winner): 1.0 for i in range(n)}, "=", winner_welfare)
    if target_welfare is not None:
        prog.add(objective, "=", target_welfare)
    if pinned:
        scale = n_vars - 1
        for (a, b), value in sorted(pinned.items()):
            prog.add({pairs(n + a, n + b): 1.0, scale: -float(value)}, "=", 0.0)
    return prog, pairs


def _zero_welfare_witness(
    profile: OrdinalProfile, winner: int, target: int, pinned
) -> NDArray[np.float64] | None:
    """A consistent metric with ``SW(winner) = 0`` and ``SW(target) = 1``, if any."""
    prog, pairs = adversarial_lp(profile, winner, target, pinned, 0.0, 1.0)
    sol = lpcore.solve(prog)
    if sol.status is not lpcore.Status.OPTIMAL:
        return None
    return pairs.matrix(sol.values[: len(pairs)])


def adversarial_distortion(
    profile: OrdinalProfile,
    winner: int,
    pinned: Mapping[tuple[int, int], float] | None = None,
    audit: bool = True,
) -> DistortionReport:
    """Worst-case distortion of ``winner`` over every metric consistent with ``profile``.

    The witness metric carries the profile itself as its tie rule, so
    re-deriving rankings from it reproduces ``profile``.
    """
    n, m = profile.n, profile.m
    if not 0 <= winner < m:
        raise IndexError(f"winner {winner} out of range")
    best_value, best_alt, best_dist = 1.0, winner, None
    for target in range(m):
        if target == winner:
            continue
        prog, pairs = adversarial_lp(profile, winner, target, pinned)
        sol = lpcore.solve(prog)
        if sol.status is lpcore.Status.INFEASIBLE:
            raise lpcore.NumericalFailure("adversarial LP reported infeasible", sol.basis)
        if audit and sol.status is lpcore.Status.OPTIMAL:
            res = lpcore.check_solution(prog, sol)
            if not res.ok():
                raise lpcore.NumericalFailure(f"audit failed: {res}", sol.basis)
        if sol.status is lpcore.Status.UNBOUNDED:
            best_value, best_alt = INF, target
            best_dist = _zero_welfare_witness(profile, winner, target, pinned)
            break
        if sol.objective_value > best_value + TAU_METRIC or best_dist is None:
            if sol.objective_value > best_value + TAU_METRIC:
                best_value, best_alt = sol.objective_value, target
            best_dist = pairs.matrix(sol.values[: len(pairs)])

    witness = None
    if best_dist is not None:
        witness = MetricInstance(n, m, best_dist, profile.grouping)
    winner_welfare = social_welfare(witness, winner) if witness is not None else 1.0
    best_welfare = social_welfare(witness, best_alt) if witness is not None else 1.0
    return DistortionReport(
        winner,
        winner_welfare,
        best_alt,
        best_welfare,
        max(1.0, best_value),
        Method.LP_ADVERSARY,
        witness,
        TieRule(reference=profile).name,
    )


# ------------------------------------------------------- discrete brute force

DEFAULT_SEARCH_CAP = 10**8
_CHUNK = 1 << 18


def _check_grid(grid) -> tuple[float, ...]:
    values = tuple(sorted({float(v) for v in grid}))
    if not values:
        raise InvalidGrid("value grid is empty")
    if values[0] < 0 or not all(math.isfinite(v) for v in values):
        raise InvalidGrid("grid values must be finite and nonnegative")
    return values


@lru_cache(maxsize=16)
def grid_metrics(size: int, grid: tuple[float, ...]) -> NDArray[np.int8]:
    """Every metric on ``size`` labelled points with all distances drawn from ``grid``.

    Rows are grid-index vectors over the unordered pairs in
    ``itertools.combinations`` order.
    """
    pairs = PairIndex(size)
    e = len(pairs)
    g = len(grid)
    values = np.asarray(grid)
    triangles = [
        (j, pairs(p, r), pairs(r, q))
        for j, (p, q) in enumerate(pairs.pairs)
        for r in range(size)
        if r not in (p, q)
    ]
    total = g**e
    powers = g ** np.arange(e, dtype=np.int64)
    keep = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        digits = ((idx[:, None] // powers[None, :]) % g).astype(np.int8)
        d = values[digits]
        ok = np.ones(len(idx), dtype=bool)
        for j, a, b in triangles:
            ok &= d[:, j] <= d[:, a] + d[:, b] + TAU_METRIC
        keep.append(digits[ok])
    out = np.concatenate(keep) if keep else np.zeros((0, e), dtype=np.int8)
    out.setflags(write=False)
    return out


def discrete_adversary(
    profile: OrdinalProfile,
    winner: int,
    value_grid: Iterable[float],
    cap: int = DEFAULT_SEARCH_CAP,
) -> DistortionReport:
    """Exhaustive worst case over metrics whose distances all lie on ``value_grid``."""
    grid = _check_grid(value_grid)
    n, m = profile.n, profile.m
    size = n + m
    pairs = PairIndex(size)
    if len(grid) ** len(pairs) > cap:
        raise SearchSpaceTooLarge(
            f"{len(grid)}^{len(pairs)} candidate matrices exceed the cap of {cap}"
        )
    metrics = grid_metrics(size, grid)
    values = np.asarray(grid)
    cols = np.array([[pairs(i, n + a) for a in range(m)] for i in range(n)])
    d = values[metrics[:, cols]]  # (rows, n, m)
    ok = np.ones(len(metrics), dtype=bool)
    for i, ranking in enumerate(profile.rankings):
        for above, below in zip(ranking, ranking[1:]):
            ok &= d[:, i, above] >= d[:, i, below] - TAU_METRIC
    d = d[ok]
    rows = np.nonzero(ok)[0]
    sw = d.sum(axis=1)  # (rows, m)
    mine = sw[:, winner]
    best = sw.max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(
            mine > TAU_METRIC, best / np.where(mine > TAU_METRIC, mine, 1.0),
            np.where(best > TAU_METRIC, INF, 1.0),
        )
    pick = int(np.argmax(ratio))
    witness = MetricInstance(n, m, pairs.matrix(values[metrics[rows[pick]]]), profile.grouping)
    best_alt = int(np.argmax(sw[pick]))
    return DistortionReport(
        winner,
        float(mine[pick]),
        best_alt,
        float(sw[pick, best_alt]),
        max(1.0, float(ratio[pick])),
        Method.DISCRETE_BRUTE_FORCE,
        witness,
        TieRule(reference=profile).name,
    )


# -------------------------------------------------------------- bound checks


@dataclass(frozen=True)
class BoundCheckReport:
    trials: int
    max_distortion: float
    worst_instance: MetricInstance | None
    min_slack: float


def mechanism_distortion_bound_check(
    mechanism: Callable[[MetricInstance], MechanismOutcome],
    instance_source: Iterable[MetricInstance],
    bound: float | Callable[[MetricInstance], float],
    trials: int,
    tol: float = TAU_METRIC,
) -> BoundCheckReport:
    """Run ``mechanism`` on ``trials`` instances, measuring distortion on the true metric.

    Raises :class:`BoundViolation` on the first instance exceeding ``bound + tol``.
    """
    worst, worst_instance, min_slack = 1.0, None, INF
    count = 0
    for instance in itertools.islice(instance_source, trials):
        winner = mechanism(instance).winner
        value = distortion_on_metric(instance, winner).distortion
        limit = bound(instance) if callable(bound) else bound
        if value > limit + tol:
            raise BoundViolation(instance, value, limit, winner)
        count += 1
        min_slack = min(min_slack, limit - value)
        if worst_instance is None or value > worst:
            worst, worst_instance = value, instance
    return BoundCheckReport(count, worst, worst_instance, min_slack)
