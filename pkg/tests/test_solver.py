import pytest
from hypothesis import given, settings, strategies as st

from skipflow import analyze, analyze_baseline
from skipflow.ir import MethodRef
from skipflow.lattice import ANY, EMPTY, Prim, Types, join_all, leq, types
from skipflow.oracle import gen_program
from skipflow.pvpg import FlowKind
from skipflow.solver import BudgetExceeded, Solver, SolverConfig
from conftest import prog

MAIN = MethodRef("Main", "main")
ON_EXIT = MethodRef("SharedThreadContainer", "onExit")
IS_VIRTUAL = MethodRef("Thread", "isVirtual")


def state(res, method, origin):
    return res.state(res.flow(method, origin))


def enabled(res, method, origin):
    return res.is_enabled(res.flow(method, origin))


def test_empty_main():
    p = prog("type Object {}\nmethod Object.main() {\n  b0: start()\n    v = 5\n    return v\n}\nroot Object.main")
    res = analyze(p)
    m = MethodRef("Object", "main")
    assert res.reachable == {m}
    assert all(res.is_enabled(f) for f in res.graph.fragments[m].flows)
    assert state(res, m, ("stmt", "b0", 0)) == Prim(5)
    assert res.state(res.graph.pred_on) is ANY


def test_roots_required(jdk):
    with pytest.raises(ValueError):
        analyze(jdk, roots=[])


def test_jdk_fixed_point(jdk):
    res = analyze(jdk)
    assert MethodRef("Set", "remove") not in res.reachable
    assert state(res, IS_VIRTUAL, ("return",)) == Prim(0)
    assert state(res, ON_EXIT, ("filter", "b0", "else", "l")) is EMPTY
    assert not enabled(res, ON_EXIT, ("stmt", "b2", 0))
    assert not enabled(res, ON_EXIT, ("stmt", "b2", 1))
    # the merge after isVirtual's type check is enabled through one branch only
    pp = res.flow(IS_VIRTUAL, ("phipred", "b3"))
    assert res.is_enabled(pp) and sum(res.is_enabled(s) and res.state(s) is not EMPTY for s in pp.pred_in) == 1
    # the callee's receiver holds exactly the caller's argument
    assert state(res, IS_VIRTUAL, ("param", 0)) == types("Thread")
    assert state(res, ON_EXIT, ("param", 1)) == types("Thread")


def test_sunflow_fixed_point(sunflow):
    res = analyze(sunflow)
    render = MethodRef("Scene", "render")
    assert not enabled(res, render, ("stmt", "b1", 0))
    for f in res.graph.flows:
        s = res.state(f)
        assert not (isinstance(s, Types) and "FrameDisplay" in s.types)
    br = MethodRef("BucketRenderer", "render")
    site = res.flow(br, ("stmt", "b0", 0))
    assert res.linked[site.id] == {MethodRef("FileDisplay", "imageBegin")}


PHI_JOIN = """
type Object {}
method Object.main() {
  b0: start()
    c = any
    z = 0
    if c < z then b1 else b2
  b1: label
    five = 5
    jump b3
  b2: label
    ten = 10
    jump b3
  b3: merge [y = phi(five, ten)]
    return y
}
root Object.main
"""


def test_phi_join_to_any():
    res = analyze(prog(PHI_JOIN))
    assert state(res, MethodRef("Object", "main"), ("phi", "b3", 0)) is ANY


def test_disabled_source_contributes_nothing():
    p = prog(PHI_JOIN.replace("c = any", "c = 7"))
    m = MethodRef("Object", "main")
    res = analyze(p)
    assert not enabled(res, m, ("stmt", "b1", 0))
    assert state(res, m, ("phi", "b3", 0)) == Prim(10)


POLY = """
type Object {}
type A extends Object {
  field x : int
}
type B extends A {}
type Main extends Object {}
method A.m(this) {
  b0: start(this)
    r = 1
    return r
}
method B.m(this) {
  b0: start(this)
    r = 2
    return r
}
method Main.main() {
  b0: start()
    c = any
    z = 0
    if c < z then b1 else b2
  b1: label
    a = new A
    jump b3
  b2: label
    b = new B
    jump b3
  b3: merge [o = phi(a, b)]
    r = o.m()
    return r
}
root Main.main
"""


def test_polycall_links_both_overrides():
    res = analyze(prog(POLY))
    site = res.flow(MAIN, ("stmt", "b3", 0))
    assert res.linked[site.id] == {MethodRef("A", "m"), MethodRef("B", "m")}
    assert res.state(site) is ANY
    # each override's receiver holds only the types dispatching to it
    assert state(res, MethodRef("A", "m"), ("param", 0)) == types("A")
    assert state(res, MethodRef("B", "m"), ("param", 0)) == types("B")


def test_null_receiver_links_nothing():
    src = POLY.replace("    a = new A\n", "    a = null\n").replace("    b = new B\n", "    b = null\n")
    res = analyze(prog(src))
    site = res.flow(MAIN, ("stmt", "b3", 0))
    assert res.state(site.receiver) == types("null")
    assert site.id not in res.linked
    assert res.reachable == {MAIN}


def test_override_never_sees_supertype_objects():
    # B.get reads a field only B has; A objects must not reach its receiver
    src = """
type Object {}
type A extends Object {}
type B extends A {
  field y : int
}
type Main extends Object {}
method A.get(this) {
  b0: start(this)
    r = 0
    return r
}
method B.get(this) {
  b0: start(this)
    r = this.y
    return r
}
method Main.main() {
  b0: start()
    c = any
    z = 0
    if c < z then b1 else b2
  b1: label
    a = new A
    jump b3
  b2: label
    b = new B
    b.y = z
    jump b3
  b3: merge [o = phi(a, b)]
    r = o.get()
    return r
}
root Main.main
"""
    res = analyze(prog(src))
    assert state(res, MethodRef("B", "get"), ("return",)) == Prim(0)


FIELDS = """
type Object {}
type A extends Object {
  field x : int
}
type B extends A {}
type Main extends Object {}
method Main.main() {
  b0: start()
    c = any
    z = 0
    if c < z then b1 else b2
  b1: label
    a = new A
    jump b3
  b2: label
    b = new B
    jump b3
  b3: merge [o = phi(a, b)]
    early = o.x
    five = 5
    o.x = five
    d = new B
    v = d.x
    return v
}
root Main.main
"""


def test_store_through_two_types_load_through_one():
    res = analyze(prog(FIELDS))
    load = res.flow(MAIN, ("stmt", "b3", 4))
    assert res.state(load) == Prim(5)
    assert [f.origin for f in load.use_in] == [("field", "B", "x")]
    assert {f.origin for f in res.graph.field_sinks.values()} == {("field", "A", "x"), ("field", "B", "x")}


def test_two_stores_join():
    src = FIELDS.replace("    d = new B\n", "    one = 1\n    o.x = one\n    d = new B\n")
    res = analyze(prog(src))
    assert res.state(res.flow(MAIN, ("stmt", "b3", 6))) is ANY


def test_budget_error_carries_partial_state(jdk):
    with pytest.raises(BudgetExceeded) as e:
        analyze(jdk, config=SolverConfig(max_steps=5))
    assert e.value.partial.steps == 6
    assert MAIN in e.value.partial.reachable


def test_budget_not_hit_at_bound(jdk):
    full = analyze(jdk)
    again = analyze(jdk, config=SolverConfig(max_steps=full.step_bound()))
    assert again.snapshot() == full.snapshot()


SEEDED = """
type Object {}
type A extends Object {}
type B extends A {}
type Main extends Object {}
method A.run(this, n) {
  b0: start(this, n)
    z = 0
    if n < z then b1 else b2
  b1: label
    r = 1
    jump b3
  b2: label
    r2 = 2
    jump b3
  b3: merge [out = phi(r, r2)]
    return out
}
method B.run(this, n) {
  b0: start(this, n)
    return n
}
"""


def test_root_parameter_seeding():
    p = prog(SEEDED)
    a_run = MethodRef("A", "run")
    none = analyze(p, [a_run])
    assert state(none, a_run, ("param", 0)) is EMPTY
    assert state(none, a_run, ("return",)) is EMPTY
    typed = analyze(p, [a_run], SolverConfig(seed_params="any"))
    assert state(typed, a_run, ("param", 0)) == types("A")  # B overrides run
    b_run = MethodRef("B", "run")
    objs = analyze(p, [b_run], SolverConfig(seed_params="types"))
    assert state(objs, b_run, ("return",)) == types("Object", "A", "B", "Main", "null")
    any_ = analyze(p, [a_run], SolverConfig(seed_params="any"))
    assert state(any_, a_run, ("return",)) is ANY
    explicit = analyze(p, [a_run], SolverConfig(param_seeds={a_run: [types("A"), Prim(-1)]}))
    assert state(explicit, a_run, ("return",)) == Prim(1)


def test_bad_config():
    with pytest.raises(ValueError):
        SolverConfig(mode="other")
    with pytest.raises(ValueError):
        SolverConfig(seed_params="all")


# -- a loop against its unrolling


LOOP = """
type Object {}
type N extends Object {}
type N1 extends N {}
type N2 extends N {}
type N3 extends N {}
type Main extends Object {}
method N.next(this) {
  b0: start(this)
    r = new N1
    return r
}
method N1.next(this) {
  b0: start(this)
    r = new N2
    return r
}
method N2.next(this) {
  b0: start(this)
    r = new N3
    return r
}
method Main.main() {
  b0: start()
    first = new N
    i0 = 0
    k = 2
    jump b1
  b1: merge [cur = phi(first, nxt), i = phi(i0, j)]
    if i < k then b2 else b3
  b2: label
    nxt = cur.next()
    j = any
    jump b1
  b3: label
    z = 0
    return z
}
root Main.main
"""


def unrolled(n):
    lines = ["    x0 = new N"] + [f"    x{i} = x{i - 1}.next()" for i in range(1, n + 1)]
    body = "\n".join(lines)
    head = LOOP.split("method Main.main()")[0]
    return head + f"method Main.main() {{\n  b0: start()\n{body}\n    z = 0\n    return z\n}}\nroot Main.main\n"


def test_loop_matches_unrolling():
    looped = analyze(prog(LOOP))
    flat = analyze(prog(unrolled(10)))
    assert looped.reachable == flat.reachable
    xs = [flat.state(flat.flow(MAIN, ("stmt", "b0", i))) for i in range(11)]
    assert looped.state(looped.flow(MAIN, ("phi", "b1", 0))) == join_all(xs)


# -- properties over generated programs


def _monotone_solver(program, config):
    history = []

    class Watched(Solver):
        def _update(self, f, new):
            before = self.vs.get(f.id, EMPTY)
            super()._update(f, new)
            history.append((before, self.vs.get(f.id, EMPTY)))

    s = Watched(program, config)
    res = s.run(list(program.roots))
    return res, history


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.sampled_from(["skipflow", "baseline"]))
def test_solver_invariants(seed, size, mode):
    p = gen_program(seed, size)
    res, history = _monotone_solver(p, SolverConfig(mode=mode))
    assert all(leq(a, b) for a, b in history)
    # gating: only enabled flows hold values
    for fid, v in res.vs.items():
        if v is not EMPTY:
            assert fid in res.enabled
    n = len(res.graph.flows)
    assert res.enable_events <= n
    assert res.steps <= res.step_bound()
    assert sum(res.growth.values()) <= 3 * n
    assert res.solver.reapply() == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(0, 2**32))
def test_worklist_order_does_not_matter(seed, size, order):
    p = gen_program(seed, size)
    fifo = analyze(p)
    shuffled = analyze(p, config=SolverConfig(order_seed=order))
    assert fifo.snapshot() == shuffled.snapshot()
    assert {fifo.graph.flows[k].key: v for k, v in fifo.linked.items()} == {
        shuffled.graph.flows[k].key: v for k, v in shuffled.linked.items()
    }


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_skipflow_refines_baseline(seed, size):
    p = gen_program(seed, size)
    sf, bl = analyze(p), analyze_baseline(p)
    assert sf.reachable <= bl.reachable
    for f in sf.graph.flows:
        g = bl.graph.by_key.get(f.key)
        if g is not None:
            assert leq(sf.state(f), bl.state(g)), f


TYPE_CHAIN = """
type Object {}
type T1 extends Object {}
type T2 extends Object {}
type T3 extends Object {}
type T4 extends Object {}
type Main extends Object {}
method T1.next(this) {
  b0: start(this)
    r = new T2
    return r
}
method T2.next(this) {
  b0: start(this)
    r = new T3
    return r
}
method T3.next(this) {
  b0: start(this)
    r = new T4
    return r
}
method T4.next(this) {
  b0: start(this)
    return this
}
method Main.main() {
  b0: start()
    first = new T1
    z = 0
    c = any
    jump b1
  b1: merge [cur = phi(first, nxt), i = phi(c, j)]
    if i < z then b2 else b3
  b2: label
    nxt = cur.next()
    j = any
    jump b1
  b3: label
    return z
}
root Main.main
"""


def test_type_chain_grows_once_per_type():
    # each type reaches the phi only after the previous one has been
    # dispatched, so no worklist order can merge the increases
    p = prog(TYPE_CHAIN)
    for seed in (None, 1, 2, 3):
        for run in (analyze, analyze_baseline):
            res = run(p, config=SolverConfig(order_seed=seed))
            cur = res.flow(MethodRef("Main", "main"), ("phi", "b1", 0))
            assert res.state(cur) == types("T1", "T2", "T3", "T4")
            assert res.growth[cur.id] == 4
            assert sum(res.growth.values()) <= 3 * len(res.graph.flows)
