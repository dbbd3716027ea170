"""A concrete interpreter that records what each flow would have to hold.

Observations are keyed like flows, ``(method, origin)``, so a trace can be
checked directly against an analysis graph.  Field flows are global and use
``None`` as their method.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from ..ir import (
    INT,
    NULL,
    AnyExpr,
    Assign,
    Compare,
    Const,
    If,
    InstanceOf,
    Invoke,
    Jump,
    Load,
    Merge,
    MethodRef,
    New,
    NullExpr,
    Program,
    Return,
    Start,
    Store,
    field_kind,
    lookup,
    resolve,
    subtype_of,
)
from ..lattice import INT64_MAX, INT64_MIN, Prim, ValueState, type_set


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Ref:
    oid: int
    type: str


@dataclass(frozen=True)
class NullRef:
    pass


ConcreteValue = Union[Int, Ref, NullRef]
NULL_REF = NullRef()

# Marks that a block was entered; only the flow's being enabled is checked.
ENTERED = None


def abstract(v: ConcreteValue) -> ValueState:
    if isinstance(v, Int):
        return Prim(v.value)
    if isinstance(v, Ref):
        return type_set([v.type])
    return type_set([NULL])


@dataclass
class Trace:
    executed_methods: set = field(default_factory=set)
    observations: dict = field(default_factory=dict)  # (method, origin) -> set of values
    call_targets: dict = field(default_factory=dict)  # (method, origin) of a site -> set of MethodRef
    step_count: int = 0
    partial: bool = False
    reason: Optional[str] = None  # why a partial trace stopped
    result: Optional[ConcreteValue] = None

    def observe(self, key: tuple, v: Optional[ConcreteValue]) -> None:
        self.observations.setdefault(key, set()).add(v)


def draw_any(rng: random.Random) -> int:
    """Half the time a small value, so comparisons go both ways."""
    if rng.random() < 0.5:
        return rng.randint(-4, 4)
    return rng.randint(INT64_MIN, INT64_MAX)


class _Halt(Exception):
    pass


@dataclass
class _Frame:
    ref: MethodRef
    blocks: dict
    preds: dict
    env: dict
    label: str
    index: int = 0
    site: Optional[tuple] = None  # caller's (method, origin) of the invoke
    dst: Optional[str] = None


class Interpreter:
    def __init__(self, program: Program, seed: int = 0, step_limit: int = 100_000):
        self.program = program
        self.rng = random.Random(seed)
        self.step_limit = step_limit
        self.heap: dict[int, dict[str, ConcreteValue]] = {}
        self.types: dict[int, str] = {}
        self.trace = Trace()
        self._shapes: dict[MethodRef, tuple[dict, dict]] = {}

    def _shape(self, ref: MethodRef) -> tuple[dict, dict]:
        s = self._shapes.get(ref)
        if s is None:
            m = self.program.method(ref)
            s = ({b.label: b for b in m.blocks}, m.predecessors())
            self._shapes[ref] = s
        return s

    def _enter_method(self, ref: MethodRef, args: list, site=None, dst=None) -> _Frame:
        m = self.program.method(ref)
        blocks, preds = self._shape(ref)
        self.trace.executed_methods.add(ref)
        entry = m.blocks[m.entry]
        env = {}
        for i, (p, v) in enumerate(zip(entry.begin.params, args)):
            env[p] = v
            self.trace.observe((ref, ("param", i)), v)
        return _Frame(ref, blocks, preds, env, entry.label, 0, site, dst)

    def _enter_block(self, fr: _Frame, target: str, source: str) -> None:
        block = fr.blocks[target]
        if isinstance(block.begin, Merge):
            j = fr.preds[target].index(source)
            values = [fr.env[phi.args[j]] for phi in block.begin.phis]
            for i, (phi, v) in enumerate(zip(block.begin.phis, values)):
                fr.env[phi.dst] = v
                self.trace.observe((fr.ref, ("phi", target, i)), v)
            self.trace.observe((fr.ref, ("phipred", target)), ENTERED)
        fr.label = target
        fr.index = 0

    def _deref(self, v: ConcreteValue, what: str) -> Ref:
        if not isinstance(v, Ref):
            self.trace.reason = f"null dereference at {what}"
            raise _Halt()
        return v

    def _default(self, kind: str) -> ConcreteValue:
        return Int(0) if kind == INT else NULL_REF

    def _eval(self, e) -> ConcreteValue:
        if isinstance(e, Const):
            return Int(e.value)
        if isinstance(e, AnyExpr):
            return Int(draw_any(self.rng))
        if isinstance(e, NullExpr):
            return NULL_REF
        assert isinstance(e, New)
        oid = len(self.types)
        self.types[oid] = e.type
        self.heap[oid] = {}
        return Ref(oid, e.type)

    def _test(self, cond, env) -> bool:
        if isinstance(cond, InstanceOf):
            v = env[cond.var]
            return isinstance(v, Ref) and subtype_of(self.program, v.type, cond.type)
        a, b = env[cond.left], env[cond.right]
        if cond.op == "==":
            return a == b
        return a.value < b.value

    def run(self, root: MethodRef, args: Optional[list] = None) -> Trace:
        stack = [self._enter_method(root, list(args or []))]
        tr = self.trace
        try:
            while stack:
                tr.step_count += 1
                if tr.step_count > self.step_limit:
                    tr.reason = "step limit"
                    raise _Halt()
                fr = stack[-1]
                block = fr.blocks[fr.label]
                key = (fr.ref, ("stmt", fr.label, fr.index))
                if fr.index < len(block.statements):
                    s = block.statements[fr.index]
                    fr.index += 1
                    if isinstance(s, Assign):
                        v = self._eval(s.expr)
                        fr.env[s.dst] = v
                        tr.observe(key, v)
                    elif isinstance(s, Load):
                        obj = self._deref(fr.env[s.obj], f"{fr.ref}:{fr.label}")
                        v = self.heap[obj.oid].get(s.field)
                        if v is None:
                            v = self._default(field_kind(self.program, obj.type, s.field))
                        fr.env[s.dst] = v
                        tr.observe(key, v)
                    elif isinstance(s, Store):
                        obj = self._deref(fr.env[s.obj], f"{fr.ref}:{fr.label}")
                        v = fr.env[s.src]
                        self.heap[obj.oid][s.field] = v
                        tr.observe(key, v)
                        fid = lookup(self.program, obj.type, s.field)
                        tr.observe((None, ("field", fid.type, fid.field)), v)
                    elif isinstance(s, Invoke):
                        recv = self._deref(fr.env[s.receiver], f"{fr.ref}:{fr.label}")
                        callee = resolve(self.program, recv.type, s.method).ref
                        tr.call_targets.setdefault(key, set()).add(callee)
                        args = [recv] + [fr.env[a] for a in s.args]
                        stack.append(self._enter_method(callee, args, key, s.dst))
                    continue
                end = block.end
                if isinstance(end, Return):
                    v = fr.env[end.var]
                    tr.observe((fr.ref, ("return",)), v)
                    stack.pop()
                    if not stack:
                        tr.result = v
                        break
                    caller = stack[-1]
                    caller.env[fr.dst] = v
                    tr.observe(fr.site, v)
                elif isinstance(end, Jump):
                    self._enter_block(fr, end.target, fr.label)
                else:
                    self._branch(fr, end)
        except _Halt:
            tr.partial = True
        return tr

    def _branch(self, fr: _Frame, end: If) -> None:
        taken = self._test(end.cond, fr.env)
        branch = "then" if taken else "else"
        label = fr.label
        c = end.cond
        if isinstance(c, InstanceOf):
            self.trace.observe((fr.ref, ("filter", label, branch, "u")), fr.env[c.var])
        else:
            self.trace.observe((fr.ref, ("filter", label, branch, "l")), fr.env[c.left])
            self.trace.observe((fr.ref, ("filter", label, branch, "r")), fr.env[c.right])
        self._enter_block(fr, end.then if taken else end.orelse, label)


def interpret(
    program: Program,
    root: Optional[MethodRef] = None,
    seed: int = 0,
    step_limit: int = 100_000,
    args: Optional[list] = None,
) -> Trace:
    """Run ``root`` (default: the first program root) and record observations."""
    if root is None:
        root = program.roots[0]
    return Interpreter(program, seed, step_limit).run(root, args)
