"""Generators for the lower-bound constructions and for random test instances.

All constructions label the alternative the mechanism is meant to be fooled
into electing as index 0, so lowest-index tie-breaking lands on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator

import numpy as np

from .model import (
    Grouping,
    MetricInstance,
    ModelError,
    OrdinalProfile,
    validate_metric,
)


class ParamOutOfRange(ModelError):
    pass


class NonIntegralFraction(ParamOutOfRange):
    pass


class Family(str, Enum):
    EQUIDISTANT_FULL_INFO = "equidistant"
    ORDINAL_GENERAL = "ordinal-general"
    LINE_FULL_INFO_CHAIN = "line-full-info-chain"
    LINE_ORDINAL_CHAIN = "line-ordinal-chain"
    LINE_FINAL_3 = "line-final-3"
    LINE_FINAL_7 = "line-final-7"
    RANDOM_EUCLIDEAN = "random-euclidean"
    RANDOM_LINE = "random-line"


@dataclass(frozen=True)
class GeneratorSpec:
    family: Family
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChainStep:
    ell: int


@dataclass(frozen=True)
class BaseCase:
    pass


@dataclass(frozen=True)
class Final:
    eps: float


def _checked(instance: MetricInstance) -> MetricInstance:
    validate_metric(instance).raise_if_invalid()
    return instance


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParamOutOfRange(message)


# ------------------------------------------------------------ full information


def _equidistant_blocks(
    blocks: int, copies: int, lam: int, eps: float, dummies: int = 0
) -> MetricInstance:
    """Core of the equidistant construction with ``blocks`` alternatives in play.

    Alternative 0 plays the role of the alternative every mechanism is pushed
    towards. Blocks ``1..blocks-1`` hold agents next to alternative 0 whose
    unique farthest alternative is ``j``; the last block holds agents roughly
    halfway from everything, farthest from alternative 0. Each block is
    repeated ``copies`` times as separate groups of ``lam`` agents.
    """
    m = blocks + dummies
    # perturbation shrinks with blocks^2 so the loss against 2*blocks-1 stays O(eps)
    delta = eps / blocks**2
    rows = []
    for j in range(1, blocks):
        row = np.full(m, 1.0 - delta)
        row[0] = delta
        row[j] = 1.0
        rows.append(row)
    half = np.full(m, 0.5)
    half[0] = 0.5 + delta
    rows.append(half)
    agent_alt = np.vstack([row for row in rows for _ in range(copies) for _ in range(lam)])
    alt_alt = np.ones((m, m)) - np.eye(m)
    sizes = [lam] * (blocks * copies)
    return _checked(MetricInstance.from_agent_alt(agent_alt, alt_alt, Grouping.from_sizes(sizes)))


def gen_equidistant_full_info(k: int, lam: int, eps: float) -> MetricInstance:
    """``k`` groups of ``lam`` agents, ``k`` alternatives pairwise at distance 1.

    Every group-unanimous mechanism elects alternative 0, whose welfare is
    about ``lam/2`` against ``(k - 1/2) * lam`` for the others.
    """
    _require(k >= 2, "k must be at least 2")
    _require(lam >= 1, "lambda must be at least 1")
    _require(0 < eps < 1 / 8, "eps must lie in (0, 1/8)")
    return _equidistant_blocks(k, 1, lam, eps)


def gen_equidistant_variants(k: int, m: int, lam: int, eps: float) -> MetricInstance:
    """Equidistant construction for ``m != k``.

    With ``m > k`` the extra alternatives are unused dummies; with ``m < k``
    (``k`` a multiple of ``m``) each alternative represents ``k/m`` groups.
    """
    _require(m >= 2 and k >= 2, "k and m must be at least 2")
    _require(lam >= 1, "lambda must be at least 1")
    _require(0 < eps < 1 / 8, "eps must lie in (0, 1/8)")
    if m >= k:
        return _equidistant_blocks(k, 1, lam, eps, dummies=m - k)
    _require(k % m == 0, f"k={k} is not a multiple of m={m}")
    return _equidistant_blocks(m, k // m, lam, eps)


def gen_line_full_info(kind: ChainStep | Final) -> MetricInstance:
    """Single-agent groups on a line with alternatives at 0 and 1.

    ``ChainStep(l)``: ``l`` groups at ``(2l+1)/(4l)`` and ``l+1`` groups at 0.
    ``Final(eps)``: one group at ``1/2 + eps`` and one at 0.
    """
    if isinstance(kind, ChainStep):
        ell = kind.ell
        _require(isinstance(ell, int) and ell >= 1, "ell must be a positive integer")
        x = (2 * ell + 1) / (4 * ell)
        agents = [x] * ell + [0.0] * (ell + 1)
    elif isinstance(kind, Final):
        _require(0 < kind.eps < 1 / 8, "eps must lie in (0, 1/8)")
        agents = [0.5 + kind.eps, 0.0]
    else:
        raise ParamOutOfRange(f"unsupported kind {kind!r}")
    grouping = Grouping(tuple(range(len(agents))), len(agents))
    return _checked(MetricInstance.from_line(agents, [0.0, 1.0], grouping))


# ------------------------------------------------------------------- ordinal


def gen_ordinal_general(k: int, lam: int) -> tuple[OrdinalProfile, MetricInstance]:
    """Ordinal construction with ``k+1`` equidistant alternatives ``a, b, x_1..x_{k-1}``.

    Labels: ``a`` = 0, ``b`` = 1, ``x_j`` = ``j + 1``. Groups ``1..k-1`` rank
    their own ``x_j`` first but sit on ``a``; in the last group half the agents
    put ``a`` on top while sitting halfway from everything, the other half sit
    on ``a`` and put ``b`` on top. The ``a``-first agents come first within the
    group so Plurality-Veto in index order elects ``a``.
    """
    _require(k >= 2, "k must be at least 2")
    _require(lam >= 2 and lam % 2 == 0, "lambda must be an even integer >= 2")
    m = k + 1
    a, b = 0, 1
    rankings, rows = [], []

    def tail(first: int) -> list[int]:
        return [first] + [x for x in range(m) if x not in (first, a)] + [a]

    on_a = np.ones(m)
    on_a[a] = 0.0
    for j in range(1, k):
        for _ in range(lam):
            rankings.append(tuple(tail(j + 1)))
            rows.append(on_a)
    for _ in range(lam // 2):
        rankings.append(tuple(range(m)))
        rows.append(np.full(m, 0.5))
    for _ in range(lam // 2):
        rankings.append(tuple(tail(b)))
        rows.append(on_a)
    grouping = Grouping.from_sizes([lam] * k)
    alt_alt = np.ones((m, m)) - np.eye(m)
    witness = _checked(MetricInstance.from_agent_alt(np.vstack(rows), alt_alt, grouping))
    profile = OrdinalProfile(len(rankings), m, tuple(rankings), grouping)
    return profile, witness


def _count(q: int, fraction: Fraction | float) -> int:
    exact = q * Fraction(fraction).limit_denominator(10**9)
    if exact.denominator != 1:
        raise NonIntegralFraction(f"q={q} cannot realise the fraction {fraction} in whole agents")
    return int(exact)


def default_resolution(kind: ChainStep | BaseCase | Final) -> int:
    """Smallest group size that realises the construction's fraction exactly."""
    if isinstance(kind, BaseCase):
        return 4
    if isinstance(kind, ChainStep):
        return Fraction(2 * kind.ell + 1, 4 * kind.ell).denominator
    return (Fraction(1, 2) + Fraction(kind.eps).limit_denominator(10**9)).denominator


def gen_line_ordinal(
    kind: ChainStep | BaseCase | Final, q: int | None = None
) -> tuple[OrdinalProfile, MetricInstance]:
    """Two-alternative line instances for the ordinal lower bound.

    Each group has ``q`` agents. In a group where a fraction ``f`` prefers
    alternative 0, those agents sit at 1/2 (equidistant, ranking 0 first by
    explicit choice) and the rest sit at 0. ``BaseCase`` is ``ChainStep(1)``.
    """
    if isinstance(kind, BaseCase):
        fractions, copies = [Fraction(3, 4), Fraction(0)], [1, 2]
    elif isinstance(kind, ChainStep):
        ell = kind.ell
        _require(isinstance(ell, int) and ell >= 1, "ell must be a positive integer")
        fractions, copies = [Fraction(2 * ell + 1, 4 * ell), Fraction(0)], [ell, ell + 1]
    elif isinstance(kind, Final):
        _require(0 < kind.eps < 1 / 8, "eps must lie in (0, 1/8)")
        eps = Fraction(kind.eps).limit_denominator(10**9)
        fractions, copies = [Fraction(1, 2) + eps, Fraction(0)], [1, 1]
    else:
        raise ParamOutOfRange(f"unsupported kind {kind!r}")
    q = default_resolution(kind) if q is None else q
    _require(isinstance(q, int) and q >= 1, "q must be a positive integer")

    positions, rankings, sizes = [], [], []
    for frac, c in zip(fractions, copies):
        prefer_zero = _count(q, frac)
        for _ in range(c):
            positions += [0.5] * prefer_zero + [0.0] * (q - prefer_zero)
            rankings += [(0, 1)] * prefer_zero + [(1, 0)] * (q - prefer_zero)
            sizes.append(q)
    grouping = Grouping.from_sizes(sizes)
    witness = _checked(MetricInstance.from_line(positions, [0.0, 1.0], grouping))
    profile = OrdinalProfile(len(rankings), 2, tuple(rankings), grouping)
    return profile, witness


# -------------------------------------------------------------------- random


def random_grouping(n: int, k: int, rng: np.random.Generator) -> Grouping:
    """Balanced random partition: sizes differ by at most one, none empty."""
    order = rng.permutation(n)
    assignment = [0] * n
    for slot, agent in enumerate(order):
        assignment[int(agent)] = slot % k
    return Grouping(tuple(assignment), k)


def gen_random_euclidean(n: int, m: int, k: int, dim: int, seed: int) -> MetricInstance:
    """Uniform points in the unit cube; ``dim == 1`` keeps line positions."""
    _require(n >= k >= 1, "need n >= k >= 1")
    _require(m >= 1, "need m >= 1")
    _require(dim in (1, 2, 3), "dim must be 1, 2 or 3")
    rng = np.random.default_rng(seed)
    agents = rng.random((n, dim))
    alternatives = rng.random((m, dim))
    grouping = random_grouping(n, k, rng)
    return MetricInstance.from_points(agents, alternatives, grouping)


def gen_random_line(n: int, m: int, k: int, seed: int) -> MetricInstance:
    return gen_random_euclidean(n, m, k, 1, seed)


def gen_random_profile(n: int, m: int, k: int, seed: int) -> OrdinalProfile:
    _require(n >= k >= 1 and m >= 1, "need n >= k >= 1 and m >= 1")
    rng = np.random.default_rng(seed)
    rankings = tuple(tuple(int(a) for a in rng.permutation(m)) for _ in range(n))
    return OrdinalProfile(n, m, rankings, random_grouping(n, k, rng))


def random_euclidean_stream(
    seed: int,
    n_max: int = 12,
    m_max: int = 5,
    k_max: int = 5,
    dim_max: int = 3,
    dim: int | None = None,
) -> Iterator[MetricInstance]:
    """Endless seeded stream of random instances with sizes drawn per draw."""
    rng = np.random.default_rng(seed)
    while True:
        m = int(rng.integers(1, m_max + 1))
        k = int(rng.integers(1, k_max + 1))
        n = int(rng.integers(k, max(k, n_max) + 1))
        d = dim if dim is not None else int(rng.integers(1, dim_max + 1))
        yield gen_random_euclidean(n, m, k, d, int(rng.integers(2**31)))


def random_profile_stream(
    seed: int, n_max: int = 6, m_max: int = 4, k: int = 1, m_min: int = 1
) -> Iterator[OrdinalProfile]:
    rng = np.random.default_rng(seed)
    while True:
        m = int(rng.integers(m_min, m_max + 1))
        n = int(rng.integers(k, n_max + 1))
        yield gen_random_profile(n, m, k, int(rng.integers(2**31)))


# ------------------------------------------------------- generator dispatch


@dataclass(frozen=True)
class Construction:
    """A generated instance together with what it is built to demonstrate."""

    instance: MetricInstance
    profile: OrdinalProfile | None
    target: int | None
    closed_form: float | None
    spec: GeneratorSpec


def _kind(params: dict, family: Family) -> ChainStep | BaseCase | Final:
    if family in (Family.LINE_FINAL_3, Family.LINE_FINAL_7):
        return Final(float(params.get("eps", 1e-3)))
    kind = params.get("kind", "chain-step")
    if kind == "base-case":
        return BaseCase()
    if kind == "final":
        return Final(float(params.get("eps", 1e-3)))
    if kind == "chain-step":
        return ChainStep(int(params.get("ell", 1)))
    raise ParamOutOfRange(f"unknown kind {kind!r}")


def build(spec: GeneratorSpec) -> Construction:
    """Dispatch a :class:`GeneratorSpec` to its generator."""
    p = spec.params
    fam = spec.family
    if fam is Family.EQUIDISTANT_FULL_INFO:
        k, lam, eps = int(p.get("k", 3)), int(p.get("lambda", 2)), float(p.get("eps", 1e-3))
        m = int(p.get("m", k))
        inst = gen_equidistant_variants(k, m, lam, eps) if m != k else gen_equidistant_full_info(k, lam, eps)
        return Construction(inst, None, 0, 2 * min(m, k) - 1, spec)
    if fam is Family.ORDINAL_GENERAL:
        k, lam = int(p.get("k", 2)), int(p.get("lambda", 4))
        profile, inst = gen_ordinal_general(k, lam)
        return Construction(inst, profile, 0, 4 * k - 1, spec)
    if fam in (Family.LINE_FULL_INFO_CHAIN, Family.LINE_FINAL_3):
        kind = _kind(p, fam)
        if isinstance(kind, BaseCase):
            kind = ChainStep(1)
        return Construction(gen_line_full_info(kind), None, 0, 3.0, spec)
    if fam in (Family.LINE_ORDINAL_CHAIN, Family.LINE_FINAL_7):
        kind = _kind(p, fam)
        q = p.get("q")
        profile, inst = gen_line_ordinal(kind, None if q is None else int(q))
        return Construction(inst, profile, 0, 7.0, spec)
    if fam is Family.RANDOM_EUCLIDEAN:
        inst = gen_random_euclidean(
            int(p.get("n", 8)), int(p.get("m", 3)), int(p.get("k", 2)),
            int(p.get("dim", 2)), int(p.get("seed", 0)),
        )
        return Construction(inst, None, None, None, spec)
    if fam is Family.RANDOM_LINE:
        inst = gen_random_line(
            int(p.get("n", 8)), int(p.get("m", 3)), int(p.get("k", 2)), int(p.get("seed", 0))
        )
        return Construction(inst, None, None, None, spec)
    raise ParamOutOfRange(f"unknown family {fam!r}")
