"""Command line entry point.

Exit statuses: 0 success, 1 unreadable/invalid input or unknown name,
2 step budget exhausted, 3 skipflow reached a method the baseline did not,
4 fuzzing found a violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional

from .baseline import analyze_baseline
from .dot import to_dot
from .ir import MethodRef, Program
from .lattice import from_json, render, to_json
from .metrics import Metrics, compute_metrics
from .oracle.fuzz import run_fuzz
from .pvpg import Graph, build_method_pvpg
from .solver import BASELINE, SKIPFLOW, AnalysisError, AnalysisResult, BudgetExceeded, SolverConfig, analyze
from .text import SfirError, load_program

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CONTAINMENT, EXIT_FUZZ = 0, 1, 2, 3, 4
ENV_PREFIX = "SKIPFLOW_"

log = logging.getLogger("skipflow")


class UsageError(Exception):
    pass


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    v = _env(name)
    return int(v) if v not in (None, "") else default


def _env_flag(name: str) -> bool:
    return _env(name, "").lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=_env_flag("JSON"), help="emit JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("inputs", nargs="+", type=Path, metavar="FILE.sfir")
    analysis.add_argument("--root", action="append", default=None, metavar="Owner.name",
                          help="analysis root (repeatable; default: the roots declared in the file)")
    analysis.add_argument("--seed-params", choices=["none", "types", "any"], default=_env("SEED_PARAMS", "none"),
                          help="what root parameters start out holding")
    analysis.add_argument("--budget", type=int, default=_env_int("BUDGET", None), metavar="STEPS",
                          help="abort after this many solver steps")

    p = argparse.ArgumentParser(prog="skipflow", description="Predicated points-to analysis for .sfir programs.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common, analysis], help="analyze programs and report reachable methods")
    a.add_argument("--mode", choices=[SKIPFLOW, BASELINE, "both"], default=_env("MODE", SKIPFLOW))
    a.add_argument("--states", action="store_true", help="also list every flow with its value state")
    a.add_argument("--timing", action="store_true", help="include wall-clock seconds in the report")
    a.add_argument("--dot", default=_env("DOT"), metavar="METHOD|all", help="also write a DOT graph")
    a.add_argument("-o", "--output", type=Path, help="DOT output file (default: stdout)")

    c = sub.add_parser("compare", parents=[common, analysis], help="run both analyses and diff reachable methods")
    c.add_argument("--timing", action="store_true")

    d = sub.add_parser("dot", parents=[common, analysis], help="export method graphs as DOT")
    d.add_argument("--mode", choices=[SKIPFLOW, BASELINE], default=_env("MODE", SKIPFLOW))
    d.add_argument("--dot", default=_env("DOT", "all"), metavar="METHOD|all", help="which method to draw")
    d.add_argument("--no-analysis", action="store_true", help="draw the graphs before solving")
    d.add_argument("-o", "--output", type=Path, help="output file (default: stdout)")

    f = sub.add_parser("fuzz", parents=[common], help="differential soundness check on generated programs")
    f.add_argument("--fuzz-n", type=int, default=_env_int("FUZZ_N", 100), metavar="N")
    f.add_argument("--fuzz-seed", type=int, default=_env_int("FUZZ_SEED", 0), metavar="SEED")
    f.add_argument("--interp-seeds", type=int, default=3, metavar="K", help="interpreter runs per program")
    f.add_argument("--out", type=Path, default=Path("fuzz-failures"), help="where failing cases are written")
    f.add_argument("--fault", choices=["no-predicate"], default=_env("FAULT"), help=argparse.SUPPRESS)
    return p


# -- helpers


def _parse_ref(text: str) -> MethodRef:
    owner, sep, name = text.partition(".")
    if not sep or not owner or not name:
        raise UsageError(f"expected Owner.name, got {text!r}")
    return MethodRef(owner, name)


def _roots(args, program: Program) -> list[MethodRef]:
    raw = args.root
    if raw is None and _env("ROOT"):
        raw = _env("ROOT").split(",")
    roots = [_parse_ref(r) for r in raw] if raw else list(program.roots)
    for r in roots:
        if not program.has_method(r):
            raise UsageError(f"unknown root method {r}")
    if not roots:
        raise UsageError("no root method: declare one with 'root' or pass --root")
    return roots


def _config(args, mode: str) -> SolverConfig:
    return SolverConfig(mode=mode, seed_params=args.seed_params, max_steps=args.budget)


def _run(program: Program, args, mode: str) -> tuple[AnalysisResult, float]:
    roots = _roots(args, program)
    t0 = time.perf_counter()
    fn = analyze if mode == SKIPFLOW else analyze_baseline
    res = fn(program, roots, _config(args, mode))
    return res, time.perf_counter() - t0


def _flow_rows(res: AnalysisResult) -> list[dict]:
    rows = []
    for f in res.graph.flows:
        rows.append({
            "method": str(f.method) if f.method else None,
            "origin": list(f.origin),
            "kind": f.kind.value,
            "label": f.label(),
            "enabled": res.is_enabled(f),
            "state": to_json(res.state(f)),
        })
    rows.sort(key=lambda r: (r["method"] or "", json.dumps(r["origin"])))
    return rows


def _run_report(path: Path, res: AnalysisResult, seconds: float, args) -> dict:
    m = compute_metrics(res, seconds if getattr(args, "timing", False) else None)
    out = {
        "file": str(path),
        "mode": res.mode,
        "reachable": res.reachable_sorted(),
        "metrics": m.to_dict(),
    }
    if getattr(args, "states", False):
        out["flows"] = _flow_rows(res)
    return out


def _print_run(rep: dict, res: AnalysisResult, out) -> None:
    print(f"# {rep['file']} ({rep['mode']})", file=out)
    print(f"reachable ({len(rep['reachable'])}):", file=out)
    for r in rep["reachable"]:
        print(f"  {r}", file=out)
    counters = " ".join(f"{k}={rep['metrics'][k]}" for k in Metrics.COUNTERS)
    print(f"metrics: {counters}", file=out)
    if "seconds" in rep["metrics"]:
        print(f"seconds: {rep['metrics']['seconds']:.4f}", file=out)
    if "flows" in rep:
        print("flows:", file=out)
        for f in rep["flows"]:
            where = f["method"] or "global"
            flag = "" if f["enabled"] else "  (disabled)"
            state = render(from_json(f["state"]))
            print(f"  {where} {tuple(f['origin'])} {f['label']}: {state}{flag}", file=out)


def _select_methods(graph: Graph, which: str) -> list[MethodRef]:
    if which == "all":
        return sorted(graph.fragments, key=str)
    ref = _parse_ref(which)
    if ref not in graph.fragments:
        raise UsageError(f"method {ref} has no graph (unknown or never reached)")
    return [ref]


def _write(text: str, path: Optional[Path], out) -> None:
    if path is None:
        out.write(text)
    else:
        path.write_text(text)


# -- commands


def cmd_analyze(args, out) -> int:
    modes = [SKIPFLOW, BASELINE] if args.mode == "both" else [args.mode]
    reports = []
    for path in args.inputs:
        program = load_program(path)
        for mode in modes:
            res, secs = _run(program, args, mode)
            rep = _run_report(path, res, secs, args)
            reports.append(rep)
            if not args.json:
                _print_run(rep, res, out)
            if args.dot:
                methods = _select_methods(res.graph, args.dot)
                _write(to_dot(res.graph, methods, res), args.output, out)
    if args.json:
        print(json.dumps(reports if len(reports) > 1 else reports[0], indent=2, sort_keys=True), file=out)
    return EXIT_OK


def cmd_compare(args, out) -> int:
    status = EXIT_OK
    reports = []
    for path in args.inputs:
        program = load_program(path)
        sf, t_sf = _run(program, args, SKIPFLOW)
        bl, t_bl = _run(program, args, BASELINE)
        timing = getattr(args, "timing", False)
        contained = sf.reachable <= bl.reachable
        rep = {
            "file": str(path),
            "skipflow": compute_metrics(sf, t_sf if timing else None).to_dict(),
            "baseline": compute_metrics(bl, t_bl if timing else None).to_dict(),
            "only_baseline": sorted(str(m) for m in bl.reachable - sf.reachable),
            "only_skipflow": sorted(str(m) for m in sf.reachable - bl.reachable),
            "contained": contained,
        }
        reports.append(rep)
        if not contained:
            status = EXIT_CONTAINMENT
        if not args.json:
            print(f"# {path}", file=out)
            print(f"{'metric':<20}{'skipflow':>10}{'baseline':>10}", file=out)
            for k in Metrics.COUNTERS:
                print(f"{k:<20}{rep['skipflow'][k]:>10}{rep['baseline'][k]:>10}", file=out)
            print(f"only reachable under baseline ({len(rep['only_baseline'])}):", file=out)
            for m in rep["only_baseline"]:
                print(f"  {m}", file=out)
            if not contained:
                print(f"CONTAINMENT VIOLATED: {rep['only_skipflow']}", file=out)
    if args.json:
        print(json.dumps(reports if len(reports) > 1 else reports[0], indent=2, sort_keys=True), file=out)
    return status


def cmd_dot(args, out) -> int:
    for path in args.inputs:
        program = load_program(path)
        if args.no_analysis:
            graph = Graph()
            for ref in _roots(args, program) if args.dot == "all" else [_parse_ref(args.dot)]:
                if not program.has_method(ref):
                    raise UsageError(f"unknown method {ref}")
                build_method_pvpg(program.method(ref), program, graph)
            text = to_dot(graph, _select_methods(graph, args.dot))
        else:
            res, _ = _run(program, args, args.mode)
            text = to_dot(res.graph, _select_methods(res.graph, args.dot), res)
        _write(text, args.output, out)
    return EXIT_OK


def cmd_fuzz(args, out) -> int:
    if args.fuzz_n <= 0:
        report_dict = {"jobs": 0, "traces": 0, "partial_traces": 0, "failures": []}
        print(json.dumps(report_dict, sort_keys=True) if args.json else "0 programs checked", file=out)
        return EXIT_OK
    config = SolverConfig(fault=args.fault)
    report = run_fuzz(
        args.fuzz_n,
        first_seed=args.fuzz_seed,
        interp_seeds=tuple(range(args.interp_seeds)),
        out_dir=args.out,
        config=config,
        stop_after=10,
    )
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True), file=out)
    else:
        print(f"{report.jobs} programs, {report.traces} traces ({report.partial} partial), "
              f"{len(report.failures)} failing", file=out)
        for fail in report.failures:
            print(f"  seed {fail.seed}: {fail.problems[0]}" + (f" (+{len(fail.problems) - 1} more)" if len(fail.problems) > 1 else ""), file=out)
        if report.failures:
            print(f"failing cases written to {args.out}", file=out)
    return EXIT_OK if report.ok else EXIT_FUZZ


COMMANDS = {"analyze": cmd_analyze, "compare": cmd_compare, "dot": cmd_dot, "fuzz": cmd_fuzz}


def main(argv: Optional[list[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=err)
    for p in getattr(args, "inputs", []):
        if not p.exists():
            print(f"error: no such file: {p}", file=err)
            return EXIT_INPUT
    try:
        return COMMANDS[args.command](args, out)
    except SfirError as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    except BudgetExceeded as e:
        print(f"error: {e}", file=err)
        return EXIT_BUDGET
    except (UsageError, AnalysisError) as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
