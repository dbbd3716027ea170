"""Predicated points-to analysis over a small SSA object language.

Value propagation inside a method is gated by predicates: a flow only
propagates once the branch or call that guards it is known to be feasible.
Methods become reachable when a feasible call site links them.
"""

from importlib import resources

from .baseline import analyze_baseline
from .ir import IRError, MethodRef, Program, resolve, subtype_of, validate
from .lattice import ANY, EMPTY, CondOp, Prim, Types, compare_filter, instanceof_filter, join, leq, types
from .metrics import Metrics, compute_metrics
from .pvpg import FlowKind, Graph, build_method_pvpg
from .solver import AnalysisError, AnalysisResult, BudgetExceeded, SolverConfig, analyze
from .text import SfirError, SourceFile, format_program, load_program, parse_program, print_program

__version__ = "0.1.0"

CORPORA = ("jdk_onexit", "sunflow_display", "loop_counter")


def corpus_path(name: str):
    """Path of a bundled ``.sfir`` corpus file."""
    return resources.files(__package__).joinpath("corpus", f"{name}.sfir")


def load_corpus(name: str) -> Program:
    return parse_program(SourceFile(corpus_path(name).read_text(), f"{name}.sfir"))


__all__ = [
    "ANY", "EMPTY", "CORPORA", "AnalysisError", "AnalysisResult", "BudgetExceeded", "CondOp", "FlowKind",
    "Graph", "IRError", "Metrics", "MethodRef", "Prim", "Program", "SfirError", "SolverConfig", "SourceFile",
    "Types", "analyze", "analyze_baseline", "build_method_pvpg", "compare_filter", "compute_metrics",
    "corpus_path", "format_program", "instanceof_filter", "join", "leq", "load_corpus", "load_program",
    "parse_program", "print_program", "resolve", "subtype_of", "types", "validate",
]
