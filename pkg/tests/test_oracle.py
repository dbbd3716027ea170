import pytest

from skipflow import analyze, analyze_baseline, validate
from skipflow.ir import MethodRef
from skipflow.lattice import Prim, types
from skipflow.oracle import (
    NULL_REF,
    Int,
    Ref,
    abstract,
    check_program,
    check_subsumption,
    gen_program,
    interpret,
    run_fuzz,
)
from skipflow.oracle.interp import draw_any
from skipflow.solver import SolverConfig
from skipflow.text import format_program
from conftest import prog

REMOVE = MethodRef("Set", "remove")


def test_abstract():
    assert abstract(Int(0)) == Prim(0)
    assert abstract(Ref(7, "Thread")) == types("Thread")
    assert abstract(NULL_REF) == types("null")


def test_jdk_trace_skips_remove(jdk):
    tr = interpret(jdk, seed=0)
    assert not tr.partial
    assert REMOVE not in tr.executed_methods
    assert tr.observations[(MethodRef("Thread", "isVirtual"), ("return",))] == {Int(0)}
    assert check_subsumption(tr, analyze(jdk)) == []
    assert check_subsumption(tr, analyze_baseline(jdk)) == []


def test_assignment_observed():
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = 5\n    return v\n}\nroot Object.main")
    tr = interpret(p)
    assert tr.observations[(MethodRef("Object", "main"), ("stmt", "b0", 0))] == {Int(5)}
    assert tr.result == Int(5)


def test_any_is_seeded():
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = any\n    return v\n}\nroot Object.main")
    assert interpret(p, seed=3).observations == interpret(p, seed=3).observations
    import random

    rng = random.Random(0)
    draws = [draw_any(rng) for _ in range(2000)]
    small = sum(-4 <= d <= 4 for d in draws)
    assert 800 < small < 1200
    assert max(draws) > 2**40 and min(draws) < -(2**40)


def test_uninitialised_fields_read_as_defaults():
    src = """
type Object {}
type A extends Object {
  field n : int
  field o : A
}
method Object.main() {
  b0: start()
    a = new A
    x = a.n
    y = a.o
    return x
}
root Object.main
"""
    tr = interpret(prog(src))
    m = MethodRef("Object", "main")
    assert tr.observations[(m, ("stmt", "b0", 1))] == {Int(0)}
    assert tr.observations[(m, ("stmt", "b0", 2))] == {NULL_REF}


def test_null_dereference_gives_partial_trace():
    src = """
type Object {}
type A extends Object {
  field n : int
}
method Object.main() {
  b0: start()
    a = null
    x = a.n
    return x
}
root Object.main
"""
    tr = interpret(prog(src))
    assert tr.partial and "null" in tr.reason


def test_step_limit(loop_corpus):
    tr = interpret(loop_corpus, step_limit=5)
    assert tr.partial and tr.reason == "step limit" and tr.step_count == 6
    assert check_subsumption(tr, analyze(loop_corpus)) == []


def test_deleting_a_reached_method_is_caught(jdk):
    # drive onExit with a virtual thread so the remove() path runs
    src = format_program(jdk).replace("t = new Thread", "t = new VirtualThread")
    p = prog(src)
    tr = interpret(p)
    assert REMOVE in tr.executed_methods
    res = analyze(p)
    assert check_subsumption(tr, res) == []
    res.reachable = res.reachable - {REMOVE}
    kinds = [v.kind for v in check_subsumption(tr, res)]
    assert kinds.count("reachability") == 1


def test_value_violation():
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = 7\n    return v\n}\nroot Object.main")
    res = analyze(p)
    f = res.flow(MethodRef("Object", "main"), ("stmt", "b0", 0))
    res.vs = dict(res.vs)
    res.vs[f.id] = Prim(5)
    out = check_subsumption(interpret(p), res)
    assert [v.kind for v in out] == ["value"]


def test_generator_minimal_and_deterministic():
    p = gen_program(5, 1)
    [main] = p.methods
    assert main.params == () and len(main.blocks) == 1 and p.roots == (main.ref,)
    assert format_program(gen_program(42, 9)) == format_program(gen_program(42, 9))
    assert format_program(gen_program(42, 9)) != format_program(gen_program(43, 9))


def test_generated_programs_validate():
    for seed in range(200):
        p = gen_program(seed, 1 + seed % 12)
        assert validate(p) == [], seed
        assert len(p.types) <= 8


def test_generator_covers_all_constructs():
    from skipflow.ir import AnyExpr, Assign, Compare, Const, If, InstanceOf, Invoke, Load, Merge, New, NullExpr, Store

    seen = set()
    for seed in range(100):
        for m in gen_program(seed, 10).methods:
            for b in m.blocks:
                if isinstance(b.begin, Merge) and len(b.begin.phis) >= 2:
                    seen.add("phi2")
                for s in b.statements:
                    seen.add(type(s.expr).__name__ if isinstance(s, Assign) else type(s).__name__)
                if isinstance(b.end, If):
                    c = b.end.cond
                    seen.add(c.op if isinstance(c, Compare) else "instanceof")
    assert seen >= {"Const", "AnyExpr", "New", "NullExpr", "Load", "Store", "Invoke", "==", "<", "instanceof", "phi2"}


def test_fault_injection_is_detected():
    p = gen_program(3, 8)
    assert check_program(p)[0] == []
    problems, _, _ = check_program(p, config=SolverConfig(fault="no-predicate"))
    assert problems


def test_fuzz_persists_failures(tmp_path):
    rep = run_fuzz(3, out_dir=tmp_path, config=SolverConfig(fault="no-predicate"))
    assert len(rep.failures) == 3
    assert sorted(x.name for x in tmp_path.iterdir())[:2] == ["fuzz_0.json", "fuzz_0.sfir"]
    assert run_fuzz(0).ok and run_fuzz(20).ok
