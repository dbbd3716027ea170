"""Differential runs: generated programs, concrete traces, both analyses."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..baseline import analyze_baseline
from ..solver import AnalysisError, SolverConfig, analyze
from ..text import format_program
from .check import check_subsumption
from .gen import gen_program
from .interp import interpret

log = logging.getLogger(__name__)


def size_for(seed: int) -> int:
    """Default size schedule: cycles through 1..12 so small programs stay common."""
    return 1 + seed % 12


@dataclass
class Failure:
    seed: int
    size: int
    problems: list[str]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "size": self.size, "violations": self.problems}


@dataclass
class FuzzReport:
    jobs: int = 0
    traces: int = 0
    partial: int = 0
    failures: list[Failure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "jobs": self.jobs,
            "traces": self.traces,
            "partial_traces": self.partial,
            "failures": [f.to_dict() for f in self.failures],
        }


def check_program(program, interp_seeds=(0, 1, 2), config: Optional[SolverConfig] = None, step_limit: int = 100_000):
    """All subsumption and containment problems for one program, as strings."""
    config = config or SolverConfig()
    problems: list[str] = []
    try:
        sf = analyze(program, config=config)
        bl = analyze_baseline(program, config=config)
    except AnalysisError as e:
        return [f"analysis failed: {e}"], 0, 0
    if not sf.reachable <= bl.reachable:
        extra = sorted(str(m) for m in sf.reachable - bl.reachable)
        problems.append(f"containment: reachable only under skipflow: {extra}")
    partial = 0
    for s in interp_seeds:
        trace = interpret(program, seed=s, step_limit=step_limit)
        partial += trace.partial
        for res in (sf, bl):
            for v in check_subsumption(trace, res):
                problems.append(f"{res.mode} seed={s}: {v}")
    return problems, len(interp_seeds), partial


def run_fuzz(
    n: int,
    first_seed: int = 0,
    interp_seeds=(0, 1, 2),
    out_dir: Optional[Path] = None,
    config: Optional[SolverConfig] = None,
    stop_after: Optional[int] = None,
) -> FuzzReport:
    """Check ``n`` generated programs; failing ones are written to ``out_dir``."""
    report = FuzzReport()
    for seed in range(first_seed, first_seed + n):
        size = size_for(seed)
        program = gen_program(seed, size)
        problems, traces, partial = check_program(program, interp_seeds, config)
        report.jobs += 1
        report.traces += traces
        report.partial += partial
        if problems:
            log.info("seed %d: %d problems", seed, len(problems))
            fail = Failure(seed, size, problems)
            report.failures.append(fail)
            if out_dir is not None:
                persist(out_dir, program, fail)
            if stop_after is not None and len(report.failures) >= stop_after:
                break
    return report


def persist(out_dir: Path, program, fail: Failure) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = out_dir / f"fuzz_{fail.seed}"
    stem.with_suffix(".sfir").write_text(format_program(program))
    stem.with_suffix(".json").write_text(json.dumps(fail.to_dict(), indent=2, sort_keys=True) + "\n")
