"""Graphviz export of method graphs.

Use edges are solid, predicate edges dashed and observe edges dotted.
Enabled flows are filled red, disabled ones grey.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .lattice import render
from .pvpg import EdgeKind, Flow, FlowKind, Graph
from .solver import AnalysisResult

_STYLE = {EdgeKind.USE: "solid", EdgeKind.PRED: "dashed", EdgeKind.OBS: "dotted"}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(
    graph: Graph,
    methods: Optional[Iterable] = None,
    result: Optional[AnalysisResult] = None,
    name: str = "pvpg",
) -> str:
    """Render the flows of ``methods`` (all fragments if None).

    Without a result every flow except pred_on is drawn disabled.  Flows of
    other methods that touch the selection (callee parameters, field flows)
    are drawn too so linked edges have both ends.
    """
    refs = list(graph.fragments) if methods is None else list(methods)
    chosen: dict[int, Flow] = {}
    for ref in refs:
        for f in graph.fragments[ref].flows:
            chosen[f.id] = f
    shown = dict(chosen)
    edges = []
    for s, t, kind in graph.edges():
        if s.id in chosen or t.id in chosen:
            shown.setdefault(s.id, s)
            shown.setdefault(t.id, t)
            edges.append((s, t, kind))

    def enabled(f: Flow) -> bool:
        if result is None:
            return f.kind is FlowKind.PRED_ON
        return result.is_enabled(f)

    lines = [f"digraph {_quote(name)} {{", "  node [shape=box, style=filled, fontname=monospace];"]
    by_method: dict = {}
    for f in sorted(shown.values(), key=lambda f: f.id):
        by_method.setdefault(f.method, []).append(f)
    for i, (ref, flows) in enumerate(by_method.items()):
        indent = "  "
        if ref is not None:
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f"    label={_quote(str(ref))};")
            indent = "    "
        for f in flows:
            text = f.label()
            if result is not None and enabled(f):
                text += "\n" + render(result.state(f))
            color = "red" if enabled(f) else "grey"
            lines.append(f"{indent}n{f.id} [label={_quote(text)}, fillcolor={color}];")
        if ref is not None:
            lines.append("  }")
    for s, t, kind in edges:
        lines.append(f"  n{s.id} -> n{t.id} [style={_STYLE[kind]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
