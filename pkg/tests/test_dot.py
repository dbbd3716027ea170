import re

from skipflow import analyze, build_method_pvpg
from skipflow.dot import to_dot
from skipflow.ir import MethodRef
from skipflow.pvpg import Graph

ON_EXIT = MethodRef("SharedThreadContainer", "onExit")


def node_color(dot, label_start):
    m = re.search(r'label="' + re.escape(label_start) + r'[^"]*", fillcolor=(\w+)', dot)
    return m.group(1)


def test_after_analysis(jdk):
    res = analyze(jdk)
    dot = to_dot(res.graph, [ON_EXIT], res)
    assert dot.startswith("digraph")
    assert node_color(dot, "Invoke remove()") == "grey"
    assert node_color(dot, "Invoke isVirtual()") == "red"
    assert "style=dashed" in dot and "style=dotted" in dot and "style=solid" in dot


def test_before_analysis_only_pred_on_is_enabled(jdk):
    g = Graph()
    build_method_pvpg(jdk.method(ON_EXIT), jdk, g)
    dot = to_dot(g)
    colors = re.findall(r'label="([^"]*)", fillcolor=(\w+)', dot)
    assert ("pred_on", "red") in colors
    assert all(c == "grey" for label, c in colors if label != "pred_on")


def test_loop_is_cyclic(loop_corpus):
    res = analyze(loop_corpus)
    dot = to_dot(res.graph, [MethodRef("Main", "main")], res)
    edges = set(re.findall(r"n(\d+) -> n(\d+)", dot))
    phi = res.flow(MethodRef("Main", "main"), ("phi", "b1", 0)).id
    call = res.flow(MethodRef("Main", "main"), ("stmt", "b2", 0)).id
    assert (str(phi), str(call)) in edges and (str(call), str(phi)) in edges
