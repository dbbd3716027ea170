"""Compare a concrete trace with an analysis result."""

from __future__ import annotations

from dataclasses import dataclass

from ..lattice import leq, render
from ..solver import AnalysisResult
from .interp import ENTERED, Trace, abstract


@dataclass(frozen=True)
class Violation:
    kind: str  # reachability, missing-flow, disabled, value, missing-callee
    key: tuple
    detail: str

    def __str__(self) -> str:
        method, origin = self.key
        where = str(method) if method is not None else "global"
        return f"{self.kind} at {where} {origin}: {self.detail}"


def _sort_key(item):
    (method, origin), _ = item
    return (str(method), repr(origin))


def check_subsumption(trace: Trace, result: AnalysisResult) -> list[Violation]:
    """Everything the trace saw must be covered by the result."""
    out: list[Violation] = []
    for m in sorted(trace.executed_methods, key=str):
        if m not in result.reachable:
            out.append(Violation("reachability", (m, ()), f"{m} ran but is not reachable"))
    by_key = result.graph.by_key
    for key, values in sorted(trace.observations.items(), key=_sort_key):
        method = key[0]
        if method is not None and method not in result.reachable:
            continue  # already reported
        f = by_key.get(key)
        if f is None:
            out.append(Violation("missing-flow", key, "no flow for an executed location"))
            continue
        if not result.is_enabled(f):
            out.append(Violation("disabled", key, f"{f.label()} executed but disabled"))
            continue
        vs = result.state(f)
        for v in sorted((v for v in values if v is not ENTERED), key=repr):
            if not leq(abstract(v), vs):
                out.append(Violation("value", key, f"observed {v} not covered by {render(vs)}"))
    for key, callees in sorted(trace.call_targets.items(), key=_sort_key):
        f = by_key.get(key)
        if f is None:
            continue  # reported above
        linked = result.linked.get(f.id, frozenset())
        for c in sorted(callees - linked, key=str):
            out.append(Violation("missing-callee", key, f"{c} called but not linked"))
    return out
