"""Core domain types: groupings, metric instances, ordinal profiles.

Point indexing convention used everywhere: agents occupy rows ``0..n-1`` of a
distance matrix and alternatives occupy rows ``n..n+m-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

TAU_METRIC = 1e-9


class ModelError(ValueError):
    """Base class for malformed instances and profiles."""


class DimensionMismatch(ModelError):
    pass


class NegativeDistance(ModelError):
    pass


class AsymmetryViolation(ModelError):
    pass


class TriangleViolation(ModelError):
    def __init__(self, x: int, y: int, z: int, slack: float):
        super().__init__(f"d({x},{y}) exceeds d({x},{z}) + d({z},{y}) by {slack:.6g}")
        self.x, self.y, self.z, self.slack = x, y, z, slack


class IndexOutOfRange(ModelError, IndexError):
    pass


class NoMetric(ModelError):
    """Raised when a welfare query is made on an ordinal-only instance."""


class PointKind(Enum):
    AGENT = "agent"
    ALTERNATIVE = "alternative"


class PointId(NamedTuple):
    kind: PointKind
    index: int


@dataclass(frozen=True)
class Grouping:
    assignment: tuple[int, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(g) for g in self.assignment))
        if self.k < 1:
            raise ModelError("a grouping needs at least one group")
        seen = set(self.assignment)
        bad = [g for g in seen if not 0 <= g < self.k]
        if bad:
            raise ModelError(f"group indices {sorted(bad)} outside [0, {self.k})")
        if len(seen) != self.k:
            empty = sorted(set(range(self.k)) - seen)
            raise ModelError(f"groups {empty} are empty")

    @classmethod
    def single(cls, n: int) -> Grouping:
        return cls((0,) * n, 1)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> Grouping:
        """Consecutive agents fill group 0, then group 1, and so on."""
        assignment = [g for g, size in enumerate(sizes) for _ in range(size)]
        return cls(tuple(assignment), len(sizes))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def members(self, g: int) -> tuple[int, ...]:
        return tuple(i for i, h in enumerate(self.assignment) if h == g)

    def sizes(self) -> tuple[int, ...]:
        counts = [0] * self.k
        for g in self.assignment:
            counts[g] += 1
        return tuple(counts)


@dataclass(frozen=True)
class LinePositions:
    agents: tuple[float, ...]
    alternatives: tuple[float, ...]


def _frozen(array) -> NDArray[np.float64]:
    out = np.array(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """Agents and alternatives with a full pairwise distance matrix.

    ``dist`` is ``(n+m) x (n+m)``; construction only checks shapes, call
    :func:`validate_metric` for the metric axioms.
    """

    n: int
    m: int
    dist: NDArray[np.float64]
    grouping: Grouping
    line_positions: LinePositions | None = None

    def __post_init__(self):
        object.__setattr__(self, "dist", _frozen(self.dist))
        size = self.n + self.m
        if self.dist.shape != (size, size):
            raise DimensionMismatch(
                f"distance matrix has shape {self.dist.shape}, expected {(size, size)}"
            )
        if self.grouping.n != self.n:
            raise DimensionMismatch(
                f"grouping covers {self.grouping.n} agents, instance has {self.n}"
            )
        if self.m < 1:
            raise ModelError("an instance needs at least one alternative")

    @property
    def k(self) -> int:
        return self.grouping.k

    @property
    def agent_alt(self) -> NDArray[np.float64]:
        """The ``n x m`` block of agent-to-alternative distances."""
        return self.dist[: self.n, self.n :]

    def row(self, point: PointId) -> int:
        if point.kind is PointKind.AGENT:
            if not 0 <= point.index < self.n:
                raise IndexOutOfRange(f"agent {point.index} out of range")
            return point.index
        if not 0 <= point.index < self.m:
            raise IndexOutOfRange(f"alternative {point.index} out of range")
        return self.n + point.index

    def d(self, p: PointId, q: PointId) -> float:
        return float(self.dist[self.row(p), self.row(q)])

    def scaled(self, c: float) -> MetricInstance:
        line = None
        if self.line_positions is not None:
            line = LinePositions(
                tuple(c * x for x in self.line_positions.agents),
                tuple(c * x for x in self.line_positions.alternatives),
            )
        return MetricInstance(self.n, self.m, self.dist * c, self.grouping, line)

    def permute_alternatives(self, perm: Sequence[int]) -> MetricInstance:
        """Relabel alternative ``a`` as ``perm[a]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.m)):
            raise ModelError("not a permutation of the alternatives")
        inverse = [0] * self.m
        for a, b in enumerate(perm):
            inverse[b] = a
        order = list(range(self.n)) + [self.n + a for a in inverse]
        line = None
        if self.line_positions is not None:
            alts = self.line_positions.alternatives
            line = LinePositions(self.line_positions.agents, tuple(alts[a] for a in inverse))
        return MetricInstance(
            self.n, self.m, self.dist[np.ix_(order, order)], self.grouping, line
        )

    @classmethod
    def from_line(
        cls,
        agents: Sequence[float],
        alternatives: Sequence[float],
        grouping: Grouping | None = None,
    ) -> MetricInstance:
        pos = np.concatenate([np.asarray(agents, float), np.asarray(alternatives, float)])
        dist = np.abs(pos[:, None] - pos[None, :])
        grouping = grouping or Grouping.single(len(agents))
        line = LinePositions(tuple(map(float, agents)), tuple(map(float, alternatives)))
        return cls(len(agents), len(alternatives), dist, grouping, line)

    @classmethod
    def from_points(
        cls,
        agents: NDArray[np.float64],
        alternatives: NDArray[np.float64],
        grouping: Grouping | None = None,
    ) -> MetricInstance:
        """Euclidean instance; one-dimensional inputs keep their line positions."""
        agents = np.asarray(agents, float)
        alternatives = np.asarray(alternatives, float)
        if agents.ndim == 1:
            agents = agents[:, None]
        if alternatives.ndim == 1:
            alternatives = alternatives[:, None]
        pts = np.vstack([agents, alternatives])
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        grouping = grouping or Grouping.single(len(agents))
        line = None
        if pts.shape[1] == 1:
            line = LinePositions(
                tuple(agents[:, 0].tolist()), tuple(alternatives[:, 0].tolist())
            )
        return cls(len(agents), len(alternatives), dist, grouping, line)

    @classmethod
    def from_agent_alt(
        cls,
        agent_alt: NDArray[np.float64],
        alt_alt: NDArray[np.float64],
        grouping: Grouping | None = None,
    ) -> MetricInstance:
        """Complete agent-agent distances as ``max_x |d(i,x) - d(j,x)|``.

        This completion is a metric whenever the given agent-alternative and
        alternative-alternative distances are mutually consistent, and it puts
        agents with identical distance profiles at distance 0.
        """
        agent_alt = np.asarray(agent_alt, float)
        alt_alt = np.asarray(alt_alt, float)
        n, m = agent_alt.shape
        agent_agent = np.abs(agent_alt[:, None, :] - agent_alt[None, :, :]).max(axis=-1)
        dist = np.block([[agent_agent, agent_alt], [agent_alt.T, alt_alt]])
        return cls(n, m, dist, grouping or Grouping.single(n))


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    error: ModelError | None = None

    def raise_if_invalid(self) -> None:
        if self.error is not None:
            raise self.error

    def __bool__(self) -> bool:
        return self.ok


def validate_matrix(dist: NDArray[np.float64], tol: float = TAU_METRIC) -> ValidationResult:
    dist = np.asarray(dist, float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        return ValidationResult(False, DimensionMismatch(f"matrix shape {dist.shape}"))
    if not np.all(np.isfinite(dist)):
        return ValidationResult(False, NegativeDistance("non-finite distance"))
    neg = np.argwhere(dist < -tol)
    if len(neg):
        p, q = neg[0]
        return ValidationResult(
            False, NegativeDistance(f"d({p},{q}) = {dist[p, q]:.6g} is negative")
        )
    diag = np.abs(np.diag(dist))
    if np.any(diag > tol):
        p = int(np.argmax(diag))
        return ValidationResult(False, AsymmetryViolation(f"d({p},{p}) = {dist[p, p]:.6g}"))
    asym = np.argwhere(np.abs(dist - dist.T) > tol)
    if len(asym):
        p, q = asym[0]
        return ValidationResult(
            False,
            AsymmetryViolation(f"d({p},{q}) = {dist[p, q]:.6g} but d({q},{p}) = {dist[q, p]:.6g}"),
        )
    # points with identical rows are co-located (zero diagonal), so triangles
    # only need checking among distinct rows
    _, keep = np.unique(dist, axis=0, return_index=True)
    keep = np.sort(keep)
    sub = dist[np.ix_(keep, keep)]
    # one slice per intermediate point z keeps memory at O(P^2)
    for z in range(len(keep)):
        slack = sub - (sub[:, z][:, None] + sub[z, :][None, :])
        if slack.max() > tol:
            x, y = np.unravel_index(int(np.argmax(slack)), slack.shape)
            return ValidationResult(
                False,
                TriangleViolation(int(keep[x]), int(keep[y]), int(keep[z]), float(slack[x, y])),
            )
    return ValidationResult(True)


def validate_metric(instance: MetricInstance, tol: float = TAU_METRIC) -> ValidationResult:
    """Check symmetry, nonnegativity and every triangle inequality within ``tol``."""
    size = instance.n + instance.m
    if instance.dist.shape != (size, size):
        return ValidationResult(False, DimensionMismatch(f"expected {(size, size)}"))
    return validate_matrix(instance.dist, tol)


@dataclass(frozen=True, eq=False)
class OrdinalProfile:
    """Per-agent strict rankings, farthest alternative first."""

    n: int
    m: int
    rankings: tuple[tuple[int, ...], ...]
    grouping: Grouping
    positions: NDArray[np.int64] = field(init=False, repr=False)

    def __post_init__(self):
        rankings = tuple(tuple(int(a) for a in r) for r in self.rankings)
        object.__setattr__(self, "rankings", rankings)
        if len(rankings) != self.n:
            raise DimensionMismatch(f"{len(rankings)} rankings for {self.n} agents")
        if self.grouping.n != self.n:
            raise DimensionMismatch("grouping size differs from agent count")
        if self.m < 1:
            raise ModelError("a profile needs at least one alternative")
        full = list(range(self.m))
        for i, r in enumerate(rankings):
            if sorted(r) != full:
                raise ModelError(f"ranking of agent {i} is not a permutation of 0..{self.m - 1}")
        pos = np.empty((self.n, self.m), dtype=np.int64)
        for i, r in enumerate(rankings):
            pos[i, list(r)] = np.arange(self.m)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def single_group(cls, rankings: Sequence[Sequence[int]]) -> OrdinalProfile:
        rankings = [tuple(r) for r in rankings]
        return cls(len(rankings), len(rankings[0]), tuple(rankings), Grouping.single(len(rankings)))

    def __eq__(self, other):
        if not isinstance(other, OrdinalProfile):
            return NotImplemented
        return (
            self.rankings == other.rankings
            and self.m == other.m
            and self.grouping == other.grouping
        )

    def __hash__(self):
        return hash((self.rankings, self.m, self.grouping))

    @property
    def k(self) -> int:
        return self.grouping.k

    def top(self, i: int) -> int:
        return self.rankings[i][0]

    def group_rankings(self, g: int) -> list[tuple[int, ...]]:
        return [self.rankings[i] for i in self.grouping.members(g)]

    def permute_alternatives(self, perm: Sequence[int]) -> OrdinalProfile:
        return OrdinalProfile(
            self.n, self.m, tuple(tuple(perm[a] for a in r) for r in self.rankings), self.grouping
        )


@dataclass(frozen=True, eq=False)
class TieRule:
    """How equidistant alternatives are ordered when deriving rankings.

    With ``reference`` set, ties follow that profile's rankings agent by agent.
    Otherwise ``priority`` lists alternatives from "treated as farthest" down;
    the default is plain index order.
    """

    priority: tuple[int, ...] | None = None
    reference: OrdinalProfile | None = None

    @property
    def name(self) -> str:
        if self.reference is not None:
            return "reference"
        if self.priority is not None:
            return "priority:" + ",".join(map(str, self.priority))
        return "index"

    def keys(self, agent: int, m: int) -> list[int]:
        if self.reference is not None:
            return [int(p) for p in self.reference.positions[agent]]
        if self.priority is not None:
            rank = {a: r for r, a in enumerate(self.priority)}
            return [rank[a] for a in range(m)]
        return list(range(m))


INDEX_ORDER = TieRule()


def derive_profile(
    instance: MetricInstance, tie_rule: TieRule = INDEX_ORDER, tol: float = TAU_METRIC
) -> OrdinalProfile:
    """Rank alternatives by decreasing distance for every agent.

    Distances within ``tol`` of the first member of a run are treated as
    equal and ordered by ``tie_rule``.
    """
    d = instance.agent_alt
    rankings = []
    for i in range(instance.n):
        keys = tie_rule.keys(i, instance.m)
        order = sorted(range(instance.m), key=lambda a: (-d[i, a], keys[a]))
        ranking: list[int] = []
        start = 0
        while start < len(order):
            lead = d[i, order[start]]
            stop = start + 1
            while stop < len(order) and lead - d[i, order[stop]] <= tol:
                stop += 1
            ranking.extend(sorted(order[start:stop], key=lambda a: keys[a]))
            start = stop
        rankings.append(tuple(ranking))
    return OrdinalProfile(instance.n, instance.m, tuple(rankings), instance.grouping)


def is_consistent(profile: OrdinalProfile, instance: MetricInstance, tol: float = TAU_METRIC) -> bool:
    """True iff ``x`` ranked above ``y`` implies ``d(i,x) >= d(i,y) - tol`` for every agent."""
    if (profile.n, profile.m) != (instance.n, instance.m):
        return False
    d = instance.agent_alt
    for i, r in enumerate(profile.rankings):
        ordered = d[i, list(r)]
        if np.any(np.diff(ordered) > tol):
            return False
    return True


def social_welfare(instance: MetricInstance, alt: int) -> float:
    """Total distance of all agents from ``alt``."""
    if not 0 <= alt < instance.m:
        raise IndexOutOfRange(f"alternative {alt} out of range 0..{instance.m - 1}")
    return float(math.fsum(instance.agent_alt[:, alt]))


def welfare_vector(instance: MetricInstance) -> list[float]:
    return [social_welfare(instance, a) for a in range(instance.m)]


def optimal_alternative(instance: MetricInstance) -> tuple[int, float]:
    """Welfare-maximising alternative, lowest index among exact ties."""
    welfare = welfare_vector(instance)
    best = max(welfare)
    alt = welfare.index(best)
    return alt, best

