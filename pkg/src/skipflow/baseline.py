"""The predicate-free comparison analysis.

It runs the same engine with three switches: every flow of a reached method
is enabled as soon as the method is built, primitive values collapse to
``ANY`` (so primitive comparisons filter nothing), and instanceof and null
checks still narrow type sets.  Methods are still built lazily when linked.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence

from .ir import MethodRef, Program
from .solver import BASELINE, AnalysisResult, Solver, SolverConfig


def analyze_baseline(
    program: Program,
    roots: Optional[Sequence[MethodRef]] = None,
    config: Optional[SolverConfig] = None,
) -> AnalysisResult:
    config = dataclasses.replace(config or SolverConfig(), mode=BASELINE)
    return Solver(program, config).run(list(roots if roots is not None else program.roots))
