"""Two-step distributed mechanisms for obnoxious alternatives.

Every mechanism picks one representative per group, then declares the
representative carrying the most agents the winner. Ties anywhere are broken
by an alternative priority order (lowest index first unless told otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .matching import hopcroft_karp
from .model import (
    INDEX_ORDER,
    TAU_METRIC,
    Grouping,
    MetricInstance,
    ModelError,
    OrdinalProfile,
    TieRule,
    derive_profile,
)

Ranking = Sequence[int]


class EmptyGroup(ModelError):
    pass


class NotALineInstance(ModelError):
    pass


class NotCoLocated(ModelError):
    pass


class UncertifiedRepresentative(RuntimeError):
    """A plugged-in subroutine returned a winner without a perfect domination matching."""


@dataclass(frozen=True)
class VetoTrace:
    initial_scores: tuple[int, ...]
    veto_sequence: tuple[tuple[int, int], ...]
    elimination_order: tuple[int, ...]


@dataclass(frozen=True)
class DominationCertificate:
    """Perfect matching of a group's agents witnessing domination by ``winner``.

    ``matching[i] = j`` pairs local agent ``i`` with local agent ``j``;
    ``agents`` maps local positions back to global agent ids.
    """

    winner: int
    matching: tuple[int, ...]
    agents: tuple[int, ...] = ()

    def verify(self, rankings: Sequence[Ranking]) -> bool:
        n = len(rankings)
        if sorted(self.matching) != list(range(n)):
            return False
        for i, j in enumerate(self.matching):
            r = list(rankings[i])
            if r.index(self.winner) > r.index(rankings[j][0]):
                return False
        return True


@dataclass(frozen=True)
class MechanismOutcome:
    representatives: tuple[int, ...]
    winner: int
    rep_groups: Mapping[int, frozenset[int]]
    rep_weights: Mapping[int, int]
    certificates: tuple[DominationCertificate | None, ...] | None = None
    veto_traces: tuple[VetoTrace | None, ...] | None = None

    @property
    def represented(self) -> frozenset[int]:
        return frozenset(x for x, gs in self.rep_groups.items() if gs)

    def relabel(self, labels: Sequence[int]) -> MechanismOutcome:
        """Map alternative indices through ``labels`` (e.g. undo a line reduction)."""
        certs = None
        if self.certificates is not None:
            certs = tuple(
                None if c is None else DominationCertificate(labels[c.winner], c.matching, c.agents)
                for c in self.certificates
            )
        traces = None
        if self.veto_traces is not None:
            traces = tuple(
                None
                if t is None
                else VetoTrace(
                    t.initial_scores,
                    tuple((i, labels[a]) for i, a in t.veto_sequence),
                    tuple(labels[a] for a in t.elimination_order),
                )
                for t in self.veto_traces
            )
        return MechanismOutcome(
            tuple(labels[r] for r in self.representatives),
            labels[self.winner],
            {labels[x]: g for x, g in self.rep_groups.items()},
            {labels[x]: w for x, w in self.rep_weights.items()},
            certs,
            traces,
        )


def _priority_rank(m: int, priority: Sequence[int] | None) -> list[int]:
    if priority is None:
        return list(range(m))
    rank = [0] * m
    for r, a in enumerate(priority):
        rank[a] = r
    return rank


def _argmax(values: Sequence[float], rank: Sequence[int], tol: float = TAU_METRIC) -> int:
    """Index of the maximum; near-ties (relative ``tol``) go to the best priority rank."""
    best = max(values)
    cutoff = best - tol * max(1.0, abs(best))
    tied = [a for a, v in enumerate(values) if v >= cutoff]
    return min(tied, key=lambda a: rank[a])


def _second_step(
    representatives: Sequence[int], grouping: Grouping, m: int, rank: Sequence[int]
) -> tuple[int, dict[int, frozenset[int]], dict[int, int]]:
    sizes = grouping.sizes()
    groups: dict[int, set[int]] = {}
    for g, r in enumerate(representatives):
        groups.setdefault(r, set()).add(g)
    weights = {x: sum(sizes[g] for g in gs) for x, gs in groups.items()}
    tally = [weights.get(x, 0) for x in range(m)]
    winner = _argmax(tally, rank, tol=0.0)
    return winner, {x: frozenset(gs) for x, gs in groups.items()}, weights


def max_weight_of_optimal(
    instance: MetricInstance, priority: Sequence[int] | None = None
) -> MechanismOutcome:
    """Full-information mechanism: each group sends its welfare-maximising alternative."""
    rank = _priority_rank(instance.m, priority)
    d = instance.agent_alt
    reps = []
    for g in range(instance.k):
        members = list(instance.grouping.members(g))
        totals = d[members].sum(axis=0)
        reps.append(_argmax(totals.tolist(), rank))
    winner, groups, weights = _second_step(reps, instance.grouping, instance.m, rank)
    return MechanismOutcome(tuple(reps), winner, groups, weights)


def plurality_veto(
    rankings: Sequence[Ranking], agent_order: Sequence[int] | None = None
) -> tuple[int, VetoTrace]:
    """Plurality-Veto on one group, rankings listed farthest alternative first.

    Scores start at plurality counts of each agent's top; agents then veto, in
    ``agent_order``, their lowest-ranked alternative that still has positive
    score. The alternative hit by the final veto wins.
    """
    if not rankings:
        raise EmptyGroup("plurality-veto needs at least one agent")
    m = len(rankings[0])
    order = list(range(len(rankings))) if agent_order is None else list(agent_order)
    if sorted(order) != list(range(len(rankings))):
        raise ModelError("agent_order must be a permutation of the group's agents")
    scores = [0] * m
    for r in rankings:
        scores[r[0]] += 1
    initial = tuple(scores)
    eliminated = [a for a in range(m) if scores[a] == 0]
    vetoes = []
    last = rankings[0][0]
    for i in order:
        target = next(a for a in reversed(rankings[i]) if scores[a] > 0)
        scores[target] -= 1
        vetoes.append((i, target))
        if scores[target] == 0:
            eliminated.append(target)
        last = target
    return last, VetoTrace(initial, tuple(vetoes), tuple(eliminated))


def domination_graph(rankings: Sequence[Ranking], candidate: int) -> list[list[int]]:
    """Edge ``i -> j`` iff agent ``i`` ranks ``candidate`` weakly above ``top(j)``."""
    tops = [r[0] for r in rankings]
    adjacency = []
    for r in rankings:
        pos = {a: p for p, a in enumerate(r)}
        mine = pos[candidate]
        adjacency.append([j for j, t in enumerate(tops) if mine <= pos[t]])
    return adjacency


def certify_domination(
    rankings: Sequence[Ranking], candidate: int, agents: Sequence[int] = ()
) -> DominationCertificate | None:
    """Perfect matching in ``candidate``'s domination graph, or None if there is none."""
    adjacency = domination_graph(rankings, candidate)
    match = hopcroft_karp(adjacency, len(rankings))
    if any(j < 0 for j in match):
        return None
    return DominationCertificate(candidate, tuple(match), tuple(agents))


Subroutine = Callable[[Sequence[Ranking], Sequence[int]], tuple[int, "VetoTrace | None"]]


def max_weight_of_domination(
    profile: OrdinalProfile,
    priority: Sequence[int] | None = None,
    subroutine: Subroutine = plurality_veto,
) -> MechanismOutcome:
    """Ordinal mechanism: each group sends a domination-certified alternative.

    The subroutine defaults to Plurality-Veto with agents voting in index
    order. Its answer is always re-certified; an uncertified pick raises
    :class:`UncertifiedRepresentative`.
    """
    rank = _priority_rank(profile.m, priority)
    reps, certs, traces = [], [], []
    for g in range(profile.k):
        members = profile.grouping.members(g)
        rankings = [profile.rankings[i] for i in members]
        rep, trace = subroutine(rankings, range(len(members)))
        cert = certify_domination(rankings, rep, members)
        if cert is None:
            raise UncertifiedRepresentative(f"group {g}: alternative {rep} is not dominating")
        reps.append(rep)
        certs.append(cert)
        traces.append(trace)
    winner, groups, weights = _second_step(reps, profile.grouping, profile.m, rank)
    return MechanismOutcome(tuple(reps), winner, groups, weights, tuple(certs), tuple(traces))


@dataclass(frozen=True)
class LineReduction:
    instance: MetricInstance
    kept: tuple[int, ...]

    def lift(self, outcome: MechanismOutcome) -> MechanismOutcome:
        return outcome.relabel(self.kept)


def reduce_line_instance(instance: MetricInstance) -> LineReduction:
    """Keep only the leftmost and rightmost alternatives (coordinate ties -> lower index)."""
    if instance.line_positions is None:
        raise NotALineInstance("instance carries no line positions")
    alts = instance.line_positions.alternatives
    left = min(range(instance.m), key=lambda a: (alts[a], a))
    right = min(range(instance.m), key=lambda a: (-alts[a], a))
    kept = tuple(sorted({left, right}))
    rows = list(range(instance.n)) + [instance.n + a for a in kept]
    reduced = MetricInstance(
        instance.n,
        len(kept),
        instance.dist[np.ix_(rows, rows)],
        instance.grouping,
        type(instance.line_positions)(
            instance.line_positions.agents, tuple(alts[a] for a in kept)
        ),
    )
    return LineReduction(reduced, kept)


def _reduced_priority(priority: Sequence[int] | None, kept: Sequence[int]) -> list[int] | None:
    if priority is None:
        return None
    local = {a: i for i, a in enumerate(kept)}
    return [local[a] for a in priority if a in local]


def max_weight_of_optimal_line(
    instance: MetricInstance, priority: Sequence[int] | None = None
) -> MechanismOutcome:
    red = reduce_line_instance(instance)
    return red.lift(max_weight_of_optimal(red.instance, _reduced_priority(priority, red.kept)))


def max_weight_of_domination_line(
    instance: MetricInstance,
    tie_rule: TieRule = INDEX_ORDER,
    priority: Sequence[int] | None = None,
) -> MechanismOutcome:
    """Ordinal line mechanism; only the ranking over the two extreme alternatives is used."""
    red = reduce_line_instance(instance)
    if tie_rule.priority is not None:
        tie_rule = TieRule(priority=tuple(_reduced_priority(tie_rule.priority, red.kept)))
    elif tie_rule.reference is not None:
        local = {a: i for i, a in enumerate(red.kept)}
        ref = tie_rule.reference
        restricted = tuple(tuple(local[a] for a in r if a in local) for r in ref.rankings)
        tie_rule = TieRule(reference=OrdinalProfile(ref.n, len(red.kept), restricted, ref.grouping))
    profile = derive_profile(red.instance, tie_rule)
    outcome = max_weight_of_domination(profile, _reduced_priority(priority, red.kept))
    return red.lift(outcome)


def centralized_veto(profile: OrdinalProfile) -> MechanismOutcome:
    """Plurality-Veto over all agents at once, ignoring the grouping."""
    rep, trace = plurality_veto(profile.rankings)
    cert = certify_domination(profile.rankings, rep, range(profile.n))
    single = Grouping.single(profile.n)
    winner, groups, weights = _second_step([rep], single, profile.m, list(range(profile.m)))
    return MechanismOutcome((rep,), winner, groups, weights, (cert,), (trace,))


# Mechanisms as functions of a metric instance; ordinal ones only look at derived rankings.
MetricMechanism = Callable[[MetricInstance], MechanismOutcome]

MECHANISMS: dict[str, MetricMechanism] = {
    "mwo": max_weight_of_optimal,
    "mwd": lambda inst: max_weight_of_domination(derive_profile(inst)),
    "veto": lambda inst: centralized_veto(derive_profile(inst)),
    "mwo-line": max_weight_of_optimal_line,
    "mwd-line": max_weight_of_domination_line,
}

ORDINAL_MECHANISMS: dict[str, Callable[[OrdinalProfile], MechanismOutcome]] = {
    "mwd": max_weight_of_domination,
    "veto": centralized_veto,
}


def is_group_unanimous_on(mechanism: MetricMechanism, instance: MetricInstance) -> bool:
    """Whether ``mechanism`` sends the farthest alternative for a co-located group.

    Instances whose farthest alternative is not unique are vacuously accepted.
    """
    if instance.k != 1:
        raise NotCoLocated("expected a single group")
    agents = instance.dist[: instance.n, : instance.n]
    if np.any(agents > TAU_METRIC):
        raise NotCoLocated("agents are not all at the same point")
    d = instance.agent_alt[0]
    far = float(d.max())
    farthest = [a for a in range(instance.m) if d[a] >= far - TAU_METRIC]
    if len(farthest) > 1:
        return True
    return mechanism(instance).representatives[0] == farthest[0]
