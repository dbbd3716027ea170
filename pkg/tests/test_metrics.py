import json

from skipflow import analyze, analyze_baseline, compute_metrics
from conftest import prog


def test_jdk_counters(jdk):
    sf = compute_metrics(analyze(jdk))
    bl = compute_metrics(analyze_baseline(jdk))
    assert sf.counters() == {
        "reachable_methods": 3, "type_checks": 0, "null_checks": 0, "primitive_checks": 0, "polycalls": 0,
    }
    # the baseline cannot remove the isVirtual() test
    assert bl.primitive_checks == 1 and bl.reachable_methods == 5


def test_no_branches():
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = 5\n    return v\n}\nroot Object.main")
    m = compute_metrics(analyze(p))
    assert m.counters() == {
        "reachable_methods": 1, "type_checks": 0, "null_checks": 0, "primitive_checks": 0, "polycalls": 0,
    }


def test_feasible_diamond_counted():
    src = """
type Object {}
method Object.main() {
  b0: start()
    c = any
    z = 0
    if c < z then b1 else b2
  b1: label
    jump b3
  b2: label
    jump b3
  b3: merge
    return z
}
root Object.main
"""
    assert compute_metrics(analyze(prog(src))).primitive_checks == 1


def test_polycalls_and_json(sunflow):
    m = compute_metrics(analyze_baseline(sunflow))
    assert m.polycalls == 1
    d = json.loads(m.to_json())
    assert set(m.COUNTERS) <= set(d) and d["mode"] == "baseline"
    assert "seconds" not in d
    assert "seconds" in compute_metrics(analyze(sunflow), seconds=0.5).to_dict()
