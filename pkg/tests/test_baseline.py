from skipflow import analyze, analyze_baseline
from skipflow.ir import MethodRef
from skipflow.lattice import ANY, EMPTY, types
from skipflow.solver import SolverConfig
from conftest import prog

MAIN = MethodRef("Main", "main")


def test_jdk_baseline_reaches_remove(jdk):
    res = analyze_baseline(jdk)
    assert res.mode == "baseline"
    assert MethodRef("Set", "remove") in res.reachable
    assert MethodRef("Set", "shrink") in res.reachable


def test_sunflow_baseline_reaches_frame_display(sunflow):
    res = analyze_baseline(sunflow)
    new_frame = res.flow(MethodRef("Scene", "render"), ("stmt", "b1", 0))
    assert res.is_enabled(new_frame) and res.state(new_frame) == types("FrameDisplay")
    site = res.flow(MethodRef("BucketRenderer", "render"), ("stmt", "b0", 0))
    assert MethodRef("FrameDisplay", "imageBegin") in res.linked[site.id]


def test_baseline_enables_everything_it_builds(jdk):
    res = analyze_baseline(jdk)
    assert all(res.is_enabled(f) for f in res.graph.flows)


def test_primitives_are_untracked(jdk):
    res = analyze_baseline(jdk)
    assert res.state(res.flow(MethodRef("Thread", "isVirtual"), ("return",))) is ANY
    ne = res.flow(MethodRef("SharedThreadContainer", "onExit"), ("filter", "b0", "else", "l"))
    assert res.state(ne) is ANY


def test_type_and_null_checks_still_filter(sunflow):
    res = analyze_baseline(sunflow)
    render = MethodRef("Scene", "render")
    # display == null cannot hold for a FileDisplay
    assert res.state(res.flow(render, ("filter", "b0", "then", "l"))) is EMPTY


def test_straight_line_programs_agree():
    src = """
type Object {}
type A extends Object {}
type Main extends Object {}
method A.f(this) {
  b0: start(this)
    r = 1
    return r
}
method Main.main() {
  b0: start()
    a = new A
    v = a.f()
    return v
}
root Main.main
"""
    p = prog(src)
    assert analyze(p).reachable == analyze_baseline(p).reachable


def test_mode_is_forced():
    cfg = SolverConfig(mode="skipflow", seed_params="any")
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = 5\n    return v\n}\nroot Object.main")
    res = analyze_baseline(p, config=cfg)
    assert res.mode == "baseline" and cfg.mode == "skipflow"
