"""Command-line front end.

Subcommands: ``synth`` (find a certified run), ``check`` (evaluate a
stored run against a formula), ``build`` (timed-system statistics and
DOT), ``oracle`` (exhaustive reference synthesis), and ``dump-ilp``
(annotated model text).  Exit codes: 0 when a run was found or the check
holds, 1 for a negative answer, 2 for usage or input errors.

Rendered output never includes timing measurements, so repeated runs on
identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import encode, ilp, synth, tdes
from .logic import Formula, evaluate, format_formula, parse

# ValueError covers the format, validation, and parse error families;
# internal invariant violations (RuntimeError at large) traceback loudly.
_INPUT_ERRORS = (
    ValueError,
    OSError,
    tdes.StateCapError,
    synth.OracleBudgetError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ticksynth",
        description=(
            "Synthesize and check runs of timed discrete-event systems "
            "against tick-counting temporal specifications."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_system(p: argparse.ArgumentParser) -> None:
        p.add_argument("--system", required=True, help="system JSON document")

    def add_formula(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--formula", help="formula text")
        group.add_argument("--formula-file", help="file holding formula text")

    def add_cap(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--state-cap",
            type=int,
            default=tdes.DEFAULT_STATE_CAP,
            help="abort when the reachable timed state count passes this",
        )

    p_synth = sub.add_parser("synth", help="search the horizon range for a run")
    add_system(p_synth)
    add_formula(p_synth)
    p_synth.add_argument("--hmin", type=int, default=1)
    p_synth.add_argument("--hmax", type=int, required=True)
    p_synth.add_argument(
        "--mode", choices=list(encode.MODES), default=encode.COMPACT
    )
    p_synth.add_argument(
        "--format", choices=["text", "json", "dot"], default="text"
    )
    add_cap(p_synth)

    p_check = sub.add_parser("check", help="evaluate a stored run")
    add_system(p_check)
    add_formula(p_check)
    p_check.add_argument("--fragment", required=True, help="run JSON document")
    p_check.add_argument("--format", choices=["text", "json"], default="text")

    p_build = sub.add_parser("build", help="construct the timed system")
    add_system(p_build)
    p_build.add_argument(
        "--format", choices=["text", "json", "dot"], default="text"
    )
    p_build.add_argument(
        "--untimed-dot",
        action="store_true",
        help="emit DOT of the untimed activity automaton instead",
    )
    add_cap(p_build)

    p_oracle = sub.add_parser("oracle", help="exhaustive reference synthesis")
    add_system(p_oracle)
    add_formula(p_oracle)
    p_oracle.add_argument("--hmin", type=int, default=1)
    p_oracle.add_argument("--hmax", type=int, required=True)
    p_oracle.add_argument(
        "--budget", type=int, default=synth.DEFAULT_ORACLE_BUDGET
    )
    p_oracle.add_argument("--format", choices=["text", "json"], default="text")
    add_cap(p_oracle)

    p_dump = sub.add_parser("dump-ilp", help="print the feasibility model")
    add_system(p_dump)
    add_formula(p_dump)
    p_dump.add_argument("--horizon", type=int, required=True)
    p_dump.add_argument(
        "--mode", choices=list(encode.MODES), default=encode.COMPACT
    )
    add_cap(p_dump)

    return parser


def _formula_from_args(args: argparse.Namespace) -> Formula:
    if args.formula is not None:
        return parse(args.formula)
    with open(args.formula_file, encoding="utf-8") as handle:
        return parse(handle.read().strip())


def _load_valid_system(path: str) -> tdes.UntimedDes:
    system = tdes.load_system(path)
    problems = [d for d in tdes.validate(system) if d.severity == "error"]
    if problems:
        raise tdes.InvalidSystemError(
            f"{path}: " + "; ".join(d.message for d in problems)
        )
    return system


def _result_payload(result: synth.SynthesisResult) -> dict:
    payload: dict = {
        "found": result.found,
        "horizon": result.horizon,
        "horizon_max": result.horizon_max,
        "mode_used": result.mode_used,
        "stats": {
            "variables": result.statistics.variables,
            "constraints": result.statistics.constraints,
            "nodes": result.statistics.nodes,
        },
    }
    if result.fragment is not None:
        payload["fragment"] = tdes.fragment_to_json(result.fragment)
    return payload


def _print_result_text(result: synth.SynthesisResult) -> None:
    print(f"found: {'yes' if result.found else 'no'}")
    if result.found:
        print(f"horizon: {result.horizon}")
        print(f"mode: {result.mode_used}")
        print("events: " + " ".join(result.fragment.events))
        print("trajectory: " + " ".join(result.fragment.activities()))
    else:
        print(f"horizon-max: {result.horizon_max}")
    stats = result.statistics
    print(f"variables: {stats.variables}")
    print(f"constraints: {stats.constraints}")
    print(f"nodes: {stats.nodes}")


def _cmd_synth(args: argparse.Namespace) -> int:
    system = _load_valid_system(args.system)
    formula = _formula_from_args(args)
    request = synth.SynthesisRequest(
        system=system,
        formula=formula,
        horizon_min=args.hmin,
        horizon_max=args.hmax,
        mode=args.mode,
        state_cap=args.state_cap,
    )
    result = synth.synthesize(request)
    if args.format == "json":
        print(json.dumps(_result_payload(result), indent=2, sort_keys=True))
    elif args.format == "dot":
        graph = tdes.build_tdes(system, args.state_cap)
        print(tdes.tdes_to_dot(graph, highlight=result.fragment), end="")
    else:
        _print_result_text(result)
    return 0 if result.found else 1


def _cmd_check(args: argparse.Namespace) -> int:
    system = _load_valid_system(args.system)
    formula = _formula_from_args(args)
    fragment = tdes.load_fragment(args.fragment, system)
    holds = evaluate(fragment, formula, 0, system.labeling, system.atoms)
    if args.format == "json":
        payload = {
            "holds": holds,
            "horizon": fragment.horizon,
            "formula": format_formula(formula),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"result: {'true' if holds else 'false'}")
        print(f"horizon: {fragment.horizon}")
    return 0 if holds else 1


def _cmd_build(args: argparse.Namespace) -> int:
    system = _load_valid_system(args.system)
    if args.untimed_dot:
        print(tdes.untimed_to_dot(system), end="")
        return 0
    graph = tdes.build_tdes(system, args.state_cap)
    tick_edges = sum(1 for (_, ev) in graph.transitions if ev == tdes.TICK)
    if args.format == "dot":
        print(tdes.tdes_to_dot(graph), end="")
    elif args.format == "json":
        payload = {
            "activity_states": len(system.states),
            "events": len(system.events),
            "timed_states": graph.n,
            "timed_transitions": len(graph.transitions),
            "tick_transitions": tick_edges,
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"activity states: {len(system.states)}")
        print(f"events: {len(system.events)}")
        print(f"timed states: {graph.n}")
        print(f"timed transitions: {len(graph.transitions)}")
        print(f"tick transitions: {tick_edges}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    system = _load_valid_system(args.system)
    formula = _formula_from_args(args)
    request = synth.SynthesisRequest(
        system=system,
        formula=formula,
        horizon_min=args.hmin,
        horizon_max=args.hmax,
        state_cap=args.state_cap,
    )
    result = synth.oracle_synthesize(request, budget=args.budget)
    if args.format == "json":
        print(json.dumps(_result_payload(result), indent=2, sort_keys=True))
    else:
        _print_result_text(result)
    return 0 if result.found else 1


def _cmd_dump(args: argparse.Namespace) -> int:
    system = _load_valid_system(args.system)
    formula = _formula_from_args(args)
    graph = tdes.build_tdes(system, args.state_cap)
    enc = encode.build_encoding(graph, formula, args.horizon, args.mode)
    print(ilp.dump(enc.model), end="")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "check": _cmd_check,
    "build": _cmd_build,
    "oracle": _cmd_oracle,
    "dump-ilp": _cmd_dump,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
