"""Command-line front end: ``obnox generate|run|distort|table|validate``.

Exit codes: 0 success, 2 bad parameters or data, 3 file IO, 4 input does not
fit the mechanism's information model, 5 bound violated or table check
failed, 6 LP failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import forge, reproduce
from .distortion import (
    DEFAULT_SEARCH_CAP,
    DistortionReport,
    Method,
    SearchSpaceTooLarge,
    adversarial_distortion,
    discrete_adversary,
    distortion_on_metric,
)
from .lp import TAU_LP, LpError, NumericalFailure
from .mechanisms import (
    MechanismOutcome,
    NotALineInstance,
    centralized_veto,
    max_weight_of_domination,
    max_weight_of_domination_line,
    max_weight_of_optimal,
    max_weight_of_optimal_line,
)
from .model import (
    TAU_METRIC,
    MetricInstance,
    ModelError,
    OrdinalProfile,
    TieRule,
    derive_profile,
    is_consistent,
    validate_metric,
)
from .serialization import (
    CSV_HEADER,
    csv_row,
    dump,
    from_json,
    instance_to_json,
    outcome_to_json,
    profile_to_json,
    read_document,
    report_to_json,
)

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_MODEL, EXIT_BOUND, EXIT_LP = 0, 2, 3, 4, 5, 6

MECHANISM_NAMES = ("mwo", "mwd", "veto", "mwo-line", "mwd-line")
ORDINAL_NAMES = ("mwd", "veto")

FAMILY_ALIASES = {
    "equidistant": forge.Family.EQUIDISTANT_FULL_INFO,
    "ordinal-general": forge.Family.ORDINAL_GENERAL,
    "line-full-info": forge.Family.LINE_FULL_INFO_CHAIN,
    "line-ordinal": forge.Family.LINE_ORDINAL_CHAIN,
    "random-euclidean": forge.Family.RANDOM_EUCLIDEAN,
    "random-line": forge.Family.RANDOM_LINE,
}

PARAM_FLAGS = ("k", "m", "n", "lambda", "eps", "ell", "kind", "q", "dim", "seed")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers


def _read_json(path: str) -> Any:
    try:
        return read_document(path)
    except OSError as err:
        raise CliError(EXIT_IO, f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise CliError(EXIT_IO, f"{path} is not valid JSON: {err}") from err


def _load(path: str) -> MetricInstance | OrdinalProfile:
    doc = _read_json(path)
    try:
        return from_json(doc)
    except (ModelError, TypeError, ValueError) as err:
        raise CliError(EXIT_PARAM, f"{path}: {err}") from err


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as err:
        raise CliError(EXIT_IO, f"cannot write {out}: {err}") from err


def _json_text(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x: float | None) -> str:
    if x is None:
        return "-"
    return "inf" if math.isinf(x) else f"{x:.6g}"


def parse_tie_rule(text: str | None) -> TieRule:
    """``index``, ``priority:2,0,1`` or ``reference:PROFILE.json``."""
    if text is None or text == "index":
        return TieRule()
    kind, _, rest = text.partition(":")
    if kind == "priority":
        try:
            return TieRule(priority=tuple(int(a) for a in rest.split(",")))
        except ValueError as err:
            raise CliError(EXIT_PARAM, f"bad priority list {rest!r}") from err
    if kind == "reference":
        ref = _load(rest)
        if not isinstance(ref, OrdinalProfile):
            raise CliError(EXIT_PARAM, "reference tie rule needs a rankings file")
        return TieRule(reference=ref)
    raise CliError(EXIT_PARAM, f"unknown tie rule {text!r}")


def _check_tie_rule(rule: TieRule, m: int, n: int) -> None:
    if rule.priority is not None and sorted(rule.priority) != list(range(m)):
        raise CliError(EXIT_PARAM, f"priority must be a permutation of 0..{m - 1}")
    if rule.reference is not None and (rule.reference.n, rule.reference.m) != (n, m):
        raise CliError(EXIT_PARAM, "reference profile size does not match the instance")


def _priority(rule: TieRule) -> list[int] | None:
    return None if rule.priority is None else list(rule.priority)


def run_mechanism(
    data: MetricInstance | OrdinalProfile, mechanism: str, tie_rule: TieRule = TieRule()
) -> MechanismOutcome:
    """Dispatch by name, enforcing each mechanism's information model."""
    if mechanism not in MECHANISM_NAMES:
        raise CliError(EXIT_PARAM, f"unknown mechanism {mechanism!r}")
    _check_tie_rule(tie_rule, data.m, data.n)
    priority = _priority(tie_rule)
    if isinstance(data, OrdinalProfile):
        if mechanism == "mwd":
            return max_weight_of_domination(data, priority)
        if mechanism == "veto":
            return centralized_veto(data)
        raise CliError(EXIT_MODEL, f"{mechanism} needs a metric, got rankings only")
    try:
        if mechanism == "mwo":
            return max_weight_of_optimal(data, priority)
        if mechanism == "mwo-line":
            return max_weight_of_optimal_line(data, priority)
        if mechanism == "mwd-line":
            return max_weight_of_domination_line(data, tie_rule, priority)
    except NotALineInstance as err:
        raise CliError(EXIT_MODEL, f"{mechanism}: {err}") from err
    profile = derive_profile(data, tie_rule)
    if mechanism == "mwd":
        return max_weight_of_domination(profile, priority)
    return centralized_veto(profile)


def evaluate(
    data: MetricInstance | OrdinalProfile,
    mechanism: str,
    mode: str,
    tie_rule: TieRule = TieRule(),
    grid: Sequence[float] = reproduce.ORACLE_GRID,
    cap: int = DEFAULT_SEARCH_CAP,
) -> DistortionReport:
    if mode == Method.EXACT_METRIC.value:
        if not isinstance(data, MetricInstance):
            raise CliError(EXIT_MODEL, "exact mode needs a metric instance")
        winner = run_mechanism(data, mechanism, tie_rule).winner
        return distortion_on_metric(data, winner)
    if mechanism not in ORDINAL_NAMES:
        raise CliError(EXIT_MODEL, f"{mode} mode needs an ordinal mechanism, not {mechanism}")
    if isinstance(data, MetricInstance):
        _check_tie_rule(tie_rule, data.m, data.n)
        data = derive_profile(data, tie_rule)
    winner = run_mechanism(data, mechanism, tie_rule).winner
    if mode == Method.LP_ADVERSARY.value:
        try:
            return adversarial_distortion(data, winner, audit=True)
        except (NumericalFailure, LpError) as err:
            raise CliError(EXIT_LP, f"LP failure: {err}") from err
    if mode == Method.DISCRETE_BRUTE_FORCE.value:
        try:
            return discrete_adversary(data, winner, grid, cap)
        except SearchSpaceTooLarge as err:
            raise CliError(EXIT_PARAM, f"SearchSpaceTooLarge: {err}") from err
    raise CliError(EXIT_PARAM, f"unknown mode {mode!r}")


# ----------------------------------------------------------------- commands


def _generator_params(args: argparse.Namespace) -> dict[str, Any]:
    params: dict[str, Any] = {}
    if args.params:
        loaded = _read_json(args.params)
        if not isinstance(loaded, dict):
            raise CliError(EXIT_PARAM, "params file must hold a JSON object")
        unknown = set(loaded) - set(PARAM_FLAGS) - {"family"}
        if unknown:
            raise CliError(EXIT_PARAM, f"unknown parameters {sorted(unknown)}")
        params.update(loaded)
    for key in PARAM_FLAGS:
        value = getattr(args, key.replace("lambda", "lam"))
        if value is not None:
            params[key] = value
    return params


def _family(name: str | None) -> forge.Family:
    if name is None:
        raise CliError(EXIT_PARAM, "--family is required")
    if name in FAMILY_ALIASES:
        return FAMILY_ALIASES[name]
    try:
        return forge.Family(name)
    except ValueError as err:
        choices = ", ".join(FAMILY_ALIASES)
        raise CliError(EXIT_PARAM, f"unknown family {name!r} (choose from {choices})") from err


def cmd_generate(args: argparse.Namespace) -> int:
    params = _generator_params(args)
    family = _family(args.family or params.pop("family", None))
    params.pop("family", None)
    try:
        built = forge.build(forge.GeneratorSpec(family, params))
    except (ModelError, TypeError, ValueError) as err:
        raise CliError(EXIT_PARAM, f"bad generator parameters: {err}") from err
    inst = built.instance
    doc = instance_to_json(inst)
    doc["meta"] = {"family": family.value, "params": params}
    ratio = None if built.target is None else distortion_on_metric(inst, built.target).distortion
    summary: dict[str, Any] = {
        "family": family.value,
        "n": inst.n,
        "m": inst.m,
        "k": inst.k,
        "target": built.target,
        "ratio": ratio,
        "closed_form": built.closed_form,
    }
    if args.out:
        dump_path = Path(args.out)
        try:
            dump(doc, dump_path)
            if built.profile is not None:
                profile_path = dump_path.with_name(dump_path.stem + ".profile.json")
                dump(profile_to_json(built.profile), profile_path)
                summary["profile"] = str(profile_path)
        except OSError as err:
            raise CliError(EXIT_IO, f"cannot write {args.out}: {err}") from err
        summary["instance"] = str(dump_path)
    else:
        sys.stdout.write(_json_text(doc))
    if args.format == "json":
        text = _json_text(summary)
    elif args.format == "csv":
        text = _csv_text(list(summary), [list(summary.values())])
    else:
        text = f"{family.value}: n={inst.n} m={inst.m} k={inst.k}"
        if ratio is not None:
            text += f" ratio {_fmt(ratio)} (closed form {_fmt(built.closed_form)})"
        text += "\n"
    (sys.stdout if args.out else sys.stderr).write(text)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    data = _load(args.instance)
    outcome = run_mechanism(data, args.mechanism, parse_tie_rule(args.tie_rule))
    if args.format == "json":
        text = _json_text({"mechanism": args.mechanism, **outcome_to_json(outcome)})
    elif args.format == "csv":
        text = _csv_text(
            ("mechanism", "winner", "representatives"),
            [(args.mechanism, outcome.winner, " ".join(map(str, outcome.representatives)))],
        )
    else:
        reps = " ".join(map(str, outcome.representatives))
        text = f"{args.mechanism}: winner {outcome.winner} (representatives {reps})\n"
    _write(text, args.out)
    return EXIT_OK


def cmd_distort(args: argparse.Namespace) -> int:
    data = _load(args.instance)
    grid = tuple(float(v) for v in args.grid.split(",")) if args.grid else reproduce.ORACLE_GRID
    report = evaluate(data, args.mechanism, args.mode, parse_tie_rule(args.tie_rule), grid, args.cap)
    if args.format == "json":
        doc = {"mechanism": args.mechanism, **report_to_json(report)}
        if args.assert_bound is not None:
            doc["bound"] = args.assert_bound
        text = _json_text(doc)
    elif args.format == "csv":
        row = csv_row(Path(args.instance).stem, args.mechanism, data.n, data.m, data.k,
                      report.distortion, args.assert_bound)
        text = _csv_text(CSV_HEADER, [row])
    else:
        text = (
            f"{args.mechanism} ({report.method.value}): winner {report.winner}, "
            f"best {report.best_alt}, distortion {_fmt(report.distortion)}\n"
        )
    _write(text, args.out)
    if args.assert_bound is not None:
        tol = TAU_METRIC if args.mode == Method.EXACT_METRIC.value else TAU_LP
        if report.distortion > args.assert_bound + tol:
            raise CliError(
                EXIT_BOUND,
                f"bound violated: distortion {_fmt(report.distortion)} > {args.assert_bound}",
            )
    return EXIT_OK


def cmd_table(args: argparse.Namespace) -> int:
    options = {"eps": 1e-3, "lambda": 2, "seed": args.seed, "trials": args.trials}
    if args.params:
        loaded = _read_json(args.params)
        if not isinstance(loaded, dict) or set(loaded) - set(options):
            raise CliError(EXIT_PARAM, f"params file may only set {sorted(options)}")
        options.update(loaded)
    try:
        rows = reproduce.run_table(
            trials=None if options["trials"] is None else int(options["trials"]),
            seed=int(options["seed"]),
            eps=float(options["eps"]),
            lam=int(options["lambda"]),
        )
    except (ModelError, TypeError, ValueError) as err:
        raise CliError(EXIT_PARAM, f"bad table parameters: {err}") from err
    records = [
        {
            "setting": r.setting,
            "bound": r.bound,
            "lower_bound_instance": r.lower_value,
            "max_observed": r.max_observed,
            "min_slack": r.min_slack,
            "passed": r.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in r.checks],
        }
        for r in rows
    ]
    if args.format == "json":
        text = _json_text(records)
    elif args.format == "csv":
        header = ("setting", "bound", "lower_bound_instance", "max_observed", "min_slack", "passed")
        text = _csv_text(header, [[rec[h] for h in header] for rec in records])
    else:
        lines = [f"{'setting':34} {'bound':12} {'lower-bound instance':28} {'max seen':>9} {'min slack':>9}  ok"]
        for r in rows:
            lines.append(
                f"{r.setting:34} {r.bound:12} {r.lower_value:28} {r.max_observed:9.4f} "
                f"{r.min_slack:9.4f}  {'yes' if r.passed else 'NO'}"
            )
            lines.extend(f"    {c.line()}" for c in r.checks)
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    failing = [r for r in rows if not r.passed]
    if failing:
        raise CliError(EXIT_BOUND, "failing rows: " + "; ".join(r.setting for r in failing))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    data = _load(args.instance)
    if isinstance(data, MetricInstance):
        result = validate_metric(data)
        if not result:
            raise CliError(EXIT_PARAM, f"invalid metric, {type(result.error).__name__}: {result.error}")
        message = f"metric instance n={data.n} m={data.m} k={data.k}: valid"
    else:
        message = f"ordinal profile n={data.n} m={data.m} k={data.k}: valid"
    if args.profile:
        profile = _load(args.profile)
        if not isinstance(data, MetricInstance) or not isinstance(profile, OrdinalProfile):
            raise CliError(EXIT_PARAM, "--profile needs a metric instance and a rankings file")
        if not is_consistent(profile, data):
            raise CliError(EXIT_PARAM, "profile is not consistent with the metric")
        message += "; profile consistent"
    if args.format == "json":
        _write(_json_text({"valid": True, "message": message}), args.out)
    else:
        _write(message + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obnox", description="Distributed voting over obnoxious alternatives: mechanisms and distortion."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, default_format: str) -> None:
        p.add_argument("--format", choices=("json", "csv", "text"), default=default_format)
        p.add_argument("--out", help="write the report here instead of stdout")

    gen = sub.add_parser("generate", help="build a lower-bound or random instance")
    common(gen, "text")
    gen.add_argument("--family", help=", ".join(FAMILY_ALIASES))
    gen.add_argument("--params", help="JSON file with generator parameters")
    gen.add_argument("--k", type=int)
    gen.add_argument("--m", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--lambda", dest="lam", type=int)
    gen.add_argument("--eps", type=float)
    gen.add_argument("--ell", type=int)
    gen.add_argument("--kind", choices=("chain-step", "base-case", "final"))
    gen.add_argument("--q", type=int, help="agents per group for line-ordinal")
    gen.add_argument("--dim", type=int)
    gen.add_argument("--seed", type=int)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run a mechanism on an instance or profile")
    common(run, "json")
    run.add_argument("instance")
    run.add_argument("--mechanism", choices=MECHANISM_NAMES, default="mwo")
    run.add_argument("--tie-rule", help="index, priority:A,B,... or reference:PROFILE")
    run.set_defaults(func=cmd_run)

    dis = sub.add_parser("distort", help="distortion of a mechanism's winner")
    common(dis, "json")
    dis.add_argument("instance")
    dis.add_argument("--mechanism", choices=MECHANISM_NAMES, default="mwo")
    dis.add_argument("--mode", choices=[m.value for m in Method], default="exact")
    dis.add_argument("--tie-rule", help="index, priority:A,B,... or reference:PROFILE")
    dis.add_argument("--assert-bound", type=float)
    dis.add_argument("--grid", help="comma-separated distance grid for discrete mode")
    dis.add_argument("--cap", type=int, default=DEFAULT_SEARCH_CAP)
    dis.set_defaults(func=cmd_distort)

    tab = sub.add_parser("table", help="reproduce the four tight bounds")
    common(tab, "text")
    tab.add_argument("--trials", type=int, help="cap on randomised trials per check")
    tab.add_argument("--seed", type=int, default=reproduce.DEFAULT_SEED)
    tab.add_argument("--params", help="JSON file overriding eps, lambda, seed or trials")
    tab.set_defaults(func=cmd_table)

    val = sub.add_parser("validate", help="check an instance file")
    common(val, "text")
    val.add_argument("instance")
    val.add_argument("--profile", help="also check this profile is consistent with the metric")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except ModelError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
