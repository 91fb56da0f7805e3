"""JSON and CSV forms of instances, profiles, outcomes and reports.

An instance document has ``n``, ``m``, ``k``, ``groups`` and exactly one of
``dist`` (row-major ``(n+m)^2`` list), ``line_positions`` (``agents`` and
``alternatives`` coordinate lists) or ``rankings`` (ordinal only). Extra keys
such as ``meta`` are carried along and ignored.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .distortion import DistortionReport
from .mechanisms import MechanismOutcome
from .model import Grouping, MetricInstance, ModelError, OrdinalProfile

_BODY_KEYS = ("dist", "line_positions", "rankings")


class SchemaError(ModelError):
    pass


def instance_to_json(instance: MetricInstance, prefer_line: bool = True) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "n": instance.n,
        "m": instance.m,
        "k": instance.k,
        "groups": list(instance.grouping.assignment),
    }
    if prefer_line and instance.line_positions is not None:
        doc["line_positions"] = {
            "agents": list(instance.line_positions.agents),
            "alternatives": list(instance.line_positions.alternatives),
        }
    else:
        doc["dist"] = [float(v) for v in instance.dist.ravel()]
    return doc


def profile_to_json(profile: OrdinalProfile) -> dict[str, Any]:
    return {
        "n": profile.n,
        "m": profile.m,
        "k": profile.k,
        "groups": list(profile.grouping.assignment),
        "rankings": [list(r) for r in profile.rankings],
    }


def _int(doc: dict, key: str) -> int:
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise SchemaError(f"field {key!r} must be a nonnegative integer")
    return value


def from_json(doc: dict[str, Any]) -> MetricInstance | OrdinalProfile:
    """Parse an instance document into a metric instance or an ordinal profile."""
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    n, m, k = _int(doc, "n"), _int(doc, "m"), _int(doc, "k")
    groups = doc.get("groups")
    if not isinstance(groups, list) or len(groups) != n:
        raise SchemaError(f"'groups' must be a list of {n} group indices")
    grouping = Grouping(tuple(groups), k)
    present = [key for key in _BODY_KEYS if key in doc]
    if len(present) != 1:
        raise SchemaError(f"expected exactly one of {_BODY_KEYS}, found {present}")
    body = doc[present[0]]
    if present[0] == "rankings":
        return OrdinalProfile(n, m, tuple(tuple(r) for r in body), grouping)
    if present[0] == "line_positions":
        try:
            agents, alts = body["agents"], body["alternatives"]
        except (TypeError, KeyError) as err:
            raise SchemaError("line_positions needs 'agents' and 'alternatives'") from err
        if len(agents) != n or len(alts) != m:
            raise SchemaError("line_positions sizes disagree with n and m")
        return MetricInstance.from_line(agents, alts, grouping)
    flat = np.asarray(body, dtype=float)
    if flat.shape != ((n + m) ** 2,):
        raise SchemaError(f"'dist' must hold {(n + m) ** 2} numbers")
    return MetricInstance(n, m, flat.reshape(n + m, n + m), grouping)


def _number(x: float) -> float | None:
    return None if math.isinf(x) else float(x)


def outcome_to_json(outcome: MechanismOutcome) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "representatives": list(outcome.representatives),
        "winner": outcome.winner,
        "rep_weights": {str(x): w for x, w in sorted(outcome.rep_weights.items())},
    }
    if outcome.veto_traces is not None:
        doc["veto_traces"] = [
            None
            if t is None
            else {
                "initial_scores": list(t.initial_scores),
                "veto_sequence": [list(v) for v in t.veto_sequence],
                "elimination_order": list(t.elimination_order),
            }
            for t in outcome.veto_traces
        ]
    if outcome.certificates is not None:
        doc["certificates"] = [
            None if c is None else {"winner": c.winner, "matching": list(c.matching), "agents": list(c.agents)}
            for c in outcome.certificates
        ]
    return doc


def report_to_json(report: DistortionReport) -> dict[str, Any]:
    doc = {
        "winner": report.winner,
        "winner_welfare": report.winner_welfare,
        "best_alt": report.best_alt,
        "best_welfare": report.best_welfare,
        "distortion": _number(report.distortion),
        "infinite": report.infinite,
        "method": report.method.value,
        "tie_rule": report.tie_rule,
    }
    if report.witness is not None:
        doc["witness"] = instance_to_json(report.witness, prefer_line=False)
    return doc


CSV_HEADER = ("instance_id", "mechanism", "m", "k", "n", "distortion", "bound", "slack")


def csv_row(
    instance_id: str, mechanism: str, n: int, m: int, k: int, distortion: float, bound: float | None
) -> tuple:
    slack = "" if bound is None else bound - distortion
    return (instance_id, mechanism, m, k, n, distortion, "" if bound is None else bound, slack)


def read_document(path: str | Path) -> dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)


def load(path: str | Path) -> MetricInstance | OrdinalProfile:
    return from_json(read_document(path))


def dump(doc: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
