"""Counters summarising an analysis result."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .lattice import EMPTY
from .solver import AnalysisResult


@dataclass
class Metrics:
    reachable_methods: int
    type_checks: int
    null_checks: int
    primitive_checks: int
    polycalls: int
    mode: str = "skipflow"
    steps: int = 0
    flows: int = 0
    enabled_flows: int = 0
    growth_events: int = 0
    seconds: Optional[float] = None

    COUNTERS = ("reachable_methods", "type_checks", "null_checks", "primitive_checks", "polycalls")

    def counters(self) -> dict:
        return {k: getattr(self, k) for k in self.COUNTERS}

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["seconds"] is None:
            del d["seconds"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _live(result: AnalysisResult, f) -> bool:
    return result.is_enabled(f) and result.state(f) is not EMPTY


def compute_metrics(result: AnalysisResult, seconds: Optional[float] = None) -> Metrics:
    """Count the checks that survive the analysis and the call sites it could not devirtualize.

    A check survives when the filters at the end of both branches are live,
    i.e. neither branch was shown to be dead.
    """
    checks = {"type": 0, "null": 0, "primitive": 0}
    for ref in result.reachable:
        frag = result.graph.fragments[ref]
        for site in frag.if_sites:
            if _live(result, site.then_pred) and _live(result, site.else_pred):
                checks[site.category] += 1
    polycalls = sum(
        1 for fid, targets in result.linked.items()
        if len(targets) >= 2 and fid in result.enabled
    )
    return Metrics(
        reachable_methods=len(result.reachable),
        type_checks=checks["type"],
        null_checks=checks["null"],
        primitive_checks=checks["primitive"],
        polycalls=polycalls,
        mode=result.mode,
        steps=result.steps,
        flows=len(result.graph.flows),
        enabled_flows=len(result.enabled),
        growth_events=sum(result.growth.values()),
        seconds=seconds,
    )
