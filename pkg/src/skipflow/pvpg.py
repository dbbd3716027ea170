"""Predicated value propagation graphs.

One fragment is built per method by a single reverse-postorder pass over its
blocks.  Every flow gets a predicate edge from the block's current predicate
at creation time; invokes become the predicate for what follows them, and
the two successors of an ``if`` start from filtering flows that redefine the
tested variables.

Flows are identified across runs by ``(method, origin)``, where ``origin``
names the program element the flow was created for.  Numeric ids depend on
construction order and are only unique within one :class:`Graph`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .ir import (
    AnyExpr,
    Assign,
    Compare,
    Const,
    FieldId,
    If,
    InstanceOf,
    Invoke,
    IRError,
    Jump,
    Label,
    Load,
    Merge,
    MethodDef,
    MethodRef,
    New,
    NullExpr,
    Program,
    Return,
    Start,
    Store,
    reverse_postorder,
)
from .lattice import CondOp, flip, inv


class FlowKind(enum.Enum):
    PARAM = "param"
    CONST = "const"
    ANY = "any"
    NEW = "new"
    NULL = "null"
    LOAD = "load"
    STORE = "store"
    INVOKE = "invoke"
    RETURN = "return"
    PHI = "phi"
    PHI_PRED = "phi_pred"
    FILTER = "filter"
    FIELD = "field"
    PRED_ON = "pred_on"


SOURCE_KINDS = frozenset({FlowKind.CONST, FlowKind.ANY, FlowKind.NEW, FlowKind.NULL})
PREDICATE_SOURCES = frozenset({FlowKind.PRED_ON, FlowKind.PHI_PRED, FlowKind.FILTER, FlowKind.INVOKE})


class EdgeKind(enum.Enum):
    USE = "use"
    PRED = "predicate"
    OBS = "observe"


class Flow:
    __slots__ = (
        "id", "kind", "method", "origin",
        "use_out", "pred_out", "obs_out", "use_in", "pred_in", "obs_in",
        "value", "type", "field", "op", "side", "name", "receiver", "args", "operand",
    )

    def __init__(self, id: int, kind: FlowKind, method: Optional[MethodRef], origin: tuple):
        self.id = id
        self.kind = kind
        self.method = method
        self.origin = origin
        self.use_out: list[Flow] = []
        self.pred_out: list[Flow] = []
        self.obs_out: list[Flow] = []
        self.use_in: list[Flow] = []
        self.pred_in: list[Flow] = []
        self.obs_in: list[Flow] = []
        self.value: Optional[int] = None       # CONST
        self.type: Optional[str] = None        # NEW, FIELD, instanceof FILTER
        self.field: Optional[str] = None       # LOAD, STORE, FIELD
        self.op: Optional[CondOp] = None       # FILTER
        self.side: Optional[str] = None        # FILTER: "u", "l" or "r"
        self.name: Optional[str] = None        # INVOKE: method name
        self.receiver: Optional[Flow] = None   # LOAD, STORE, INVOKE
        self.args: list[Flow] = []             # INVOKE, receiver first
        self.operand: Optional[Flow] = None    # binary FILTER: the other operand

    @property
    def key(self) -> tuple:
        return (self.method, self.origin)

    def label(self) -> str:
        k = self.kind
        if k is FlowKind.PARAM:
            return f"p{self.origin[1]}"
        if k is FlowKind.CONST:
            return str(self.value)
        if k is FlowKind.NEW:
            return f"new {self.type}"
        if k is FlowKind.LOAD:
            return f"Load {self.field}"
        if k is FlowKind.STORE:
            return f"Store {self.field}"
        if k is FlowKind.INVOKE:
            return f"Invoke {self.name}()"
        if k is FlowKind.FILTER:
            if self.op.is_type_check:
                return f"{self.op.value} {self.type}"
            return f"{self.op.value} ({self.side})"
        if k is FlowKind.FIELD:
            return f"{self.type}.{self.field}"
        if k is FlowKind.PHI_PRED:
            return "phi_pred"
        if k is FlowKind.PRED_ON:
            return "pred_on"
        return k.value

    def __repr__(self) -> str:
        where = f"{self.method}" if self.method else "global"
        return f"<Flow #{self.id} {self.label()} @{where} {self.origin}>"


@dataclass
class IfSite:
    block: str
    cond: object
    category: str  # "type", "null" or "primitive"
    then_filters: list[Flow]
    else_filters: list[Flow]

    @property
    def then_pred(self) -> Flow:
        return self.then_filters[-1]

    @property
    def else_pred(self) -> Flow:
        return self.else_filters[-1]


@dataclass
class Fragment:
    method: MethodRef
    params: list[Flow]
    ret: Optional[Flow]
    flows: list[Flow] = field(default_factory=list)
    if_sites: list[IfSite] = field(default_factory=list)
    invokes: list[Flow] = field(default_factory=list)


class Graph:
    """All flows of one analysis run plus the edges between them."""

    def __init__(self) -> None:
        self.flows: list[Flow] = []
        self.by_key: dict[tuple, Flow] = {}
        self.fragments: dict[MethodRef, Fragment] = {}
        self.field_sinks: dict[FieldId, Flow] = {}
        self._edges: set[tuple[int, int, EdgeKind]] = set()
        self.pred_on = self.new_flow(FlowKind.PRED_ON, None, ("pred_on",))

    def new_flow(self, kind: FlowKind, method: Optional[MethodRef], origin: tuple) -> Flow:
        f = Flow(len(self.flows), kind, method, origin)
        if f.key in self.by_key:
            raise IRError(f"duplicate flow for {f.key}")
        self.flows.append(f)
        self.by_key[f.key] = f
        return f

    def flow(self, method: Optional[MethodRef], origin: tuple) -> Flow:
        return self.by_key[(method, origin)]

    def _add(self, s: Flow, t: Flow, kind: EdgeKind) -> bool:
        k = (s.id, t.id, kind)
        if k in self._edges:
            return False
        self._edges.add(k)
        if kind is EdgeKind.USE:
            s.use_out.append(t)
            t.use_in.append(s)
        elif kind is EdgeKind.PRED:
            s.pred_out.append(t)
            t.pred_in.append(s)
        else:
            s.obs_out.append(t)
            t.obs_in.append(s)
        return True

    def add_use(self, s: Flow, t: Flow) -> bool:
        return self._add(s, t, EdgeKind.USE)

    def add_pred(self, s: Flow, t: Flow) -> bool:
        return self._add(s, t, EdgeKind.PRED)

    def add_obs(self, s: Flow, t: Flow) -> bool:
        return self._add(s, t, EdgeKind.OBS)

    def edges(self) -> list[tuple[Flow, Flow, EdgeKind]]:
        """Every edge, in a stable order."""
        out = []
        for f in self.flows:
            out.extend((f, t, EdgeKind.USE) for t in f.use_out)
            out.extend((f, t, EdgeKind.PRED) for t in f.pred_out)
            out.extend((f, t, EdgeKind.OBS) for t in f.obs_out)
        return out

    def field_sink(self, fid: FieldId) -> tuple[Flow, bool]:
        """The flow holding field ``fid``; created (predicated by pred_on) on first use."""
        sink = self.field_sinks.get(fid)
        if sink is not None:
            return sink, False
        sink = self.new_flow(FlowKind.FIELD, None, ("field", fid.type, fid.field))
        sink.type, sink.field = fid.type, fid.field
        self.add_pred(self.pred_on, sink)
        self.field_sinks[fid] = sink
        return sink, True

    def max_in_degree(self) -> int:
        return max((len(f.use_in) + len(f.pred_in) + len(f.obs_in) for f in self.flows), default=0)


@dataclass
class BlockState:
    """Per-block construction state: variable to flow map and current predicate."""

    m: dict[str, Flow]
    pred: Flow
    processed: bool = False
    incoming: list[dict[str, Flow]] = field(default_factory=list)
    phi_vars: set[str] = field(default_factory=set)
    implicit: set[str] = field(default_factory=set)


_SOURCE_OPS = {"==": CondOp.EQ, "<": CondOp.LT}


def cond_op(cond) -> CondOp:
    if isinstance(cond, InstanceOf):
        return CondOp.INSTANCEOF
    return _SOURCE_OPS[cond.op]


class _Builder:
    def __init__(self, method: MethodDef, graph: Graph):
        self.method = method
        self.ref = method.ref
        self.g = graph
        self.states: dict[str, BlockState] = {}
        self.rpo = reverse_postorder(method)
        self.index = {label: i for i, label in enumerate(self.rpo)}
        self.preds = method.predecessors()
        self.frag = Fragment(self.ref, [], None)

    def flow(self, kind: FlowKind, origin: tuple, pred: Optional[Flow]) -> Flow:
        f = self.g.new_flow(kind, self.ref, origin)
        if pred is not None:
            self.g.add_pred(pred, f)
        self.frag.flows.append(f)
        return f

    def lookup(self, b: BlockState, var: str) -> Flow:
        try:
            return b.m[var]
        except KeyError:
            raise IRError(f"{self.ref}: variable {var!r} has no flow") from None

    def build(self) -> Fragment:
        for label in self.rpo:
            self.process(self.method.block(label))
        return self.frag

    # -- blocks

    def merge_state(self, label: str) -> BlockState:
        st = self.states.get(label)
        if st is not None:
            return st
        block = self.method.block(label)
        # only the jumps into this block give phi_pred its predicates
        phipred = self.flow(FlowKind.PHI_PRED, ("phipred", label), None)
        st = BlockState({}, phipred)
        for i, phi in enumerate(block.begin.phis):
            f = self.flow(FlowKind.PHI, ("phi", label, i), phipred)
            st.m[phi.dst] = f
            st.phi_vars.add(phi.dst)
        self.states[label] = st
        return st

    def process(self, block) -> None:
        label = block.label
        begin = block.begin
        if isinstance(begin, Start):
            st = BlockState({}, self.g.pred_on)
            for i, p in enumerate(begin.params):
                f = self.flow(FlowKind.PARAM, ("param", i), st.pred)
                st.m[p] = f
                self.frag.params.append(f)
            self.states[label] = st
        elif isinstance(begin, Merge):
            st = self.merge_state(label)
            self.join_incoming(label, st)
        else:
            st = self.states[label]
        st.processed = True
        for i, s in enumerate(block.statements):
            self.statement(st, s, ("stmt", label, i))
        end = block.end
        if isinstance(end, Return):
            f = self.flow(FlowKind.RETURN, ("return",), st.pred)
            self.g.add_use(self.lookup(st, end.var), f)
            self.frag.ret = f
        elif isinstance(end, Jump):
            j = self.preds[end.target].index(label)
            self.wire_jump(st, end.target, j)
        else:
            self.init_if(st, label, end)

    def join_incoming(self, label: str, st: BlockState) -> None:
        """Fill a merge block's map from its forward predecessors.

        Variables mapped to different flows by different predecessors (a
        branch may have refined them with a filter) get an implicit phi.  A
        merge that is also reached by a retreating edge gets an implicit phi
        for every inherited variable, so the later edge can still feed it.
        """
        retreating = any(self.index.get(p, -1) >= self.index[label] for p in self.preds[label])
        if not st.incoming:
            return
        first = st.incoming[0]
        for var in first:
            if var in st.phi_vars or any(var not in snap for snap in st.incoming):
                continue
            sources: list[Flow] = []
            for snap in st.incoming:
                if snap[var] not in sources:
                    sources.append(snap[var])
            if len(sources) == 1 and not retreating:
                st.m[var] = sources[0]
                continue
            phi = self.flow(FlowKind.PHI, ("iphi", label, var), st.pred)
            for s in sources:
                self.g.add_use(s, phi)
            st.m[var] = phi
            st.implicit.add(var)

    def wire_jump(self, b: BlockState, target: str, j: int) -> None:
        t = self.merge_state(target)
        self.g.add_pred(b.pred, t.pred)
        block = self.method.block(target)
        for i, phi in enumerate(block.begin.phis):
            src = self.lookup(b, phi.args[j])
            self.g.add_use(src, t.m[phi.dst])
        if not t.processed:
            t.incoming.append(dict(b.m))
            return
        for var in t.implicit:
            src = b.m.get(var)
            if src is not None and src is not t.m[var]:
                self.g.add_use(src, t.m[var])

    # -- statements

    def statement(self, b: BlockState, s, origin: tuple) -> None:
        if isinstance(s, Assign):
            e = s.expr
            if isinstance(e, Const):
                f = self.flow(FlowKind.CONST, origin, b.pred)
                f.value = e.value
            elif isinstance(e, AnyExpr):
                f = self.flow(FlowKind.ANY, origin, b.pred)
            elif isinstance(e, New):
                f = self.flow(FlowKind.NEW, origin, b.pred)
                f.type = e.type
            elif isinstance(e, NullExpr):
                f = self.flow(FlowKind.NULL, origin, b.pred)
            else:  # pragma: no cover
                raise IRError(f"unknown expression {e!r}")
            b.m[s.dst] = f
        elif isinstance(s, Load):
            f = self.flow(FlowKind.LOAD, origin, b.pred)
            f.field = s.field
            f.receiver = self.lookup(b, s.obj)
            self.g.add_obs(f.receiver, f)
            b.m[s.dst] = f
        elif isinstance(s, Store):
            f = self.flow(FlowKind.STORE, origin, b.pred)
            f.field = s.field
            self.g.add_use(self.lookup(b, s.src), f)
            f.receiver = self.lookup(b, s.obj)
            self.g.add_obs(f.receiver, f)
        elif isinstance(s, Invoke):
            f = self.flow(FlowKind.INVOKE, origin, b.pred)
            f.name = s.method
            f.receiver = self.lookup(b, s.receiver)
            f.args = [f.receiver] + [self.lookup(b, a) for a in s.args]
            self.g.add_obs(f.receiver, f)
            b.m[s.dst] = f
            b.pred = f
            self.frag.invokes.append(f)
        else:  # pragma: no cover
            raise IRError(f"unknown statement {s!r}")

    # -- branches

    def init_if(self, b: BlockState, label: str, end: If) -> None:
        cond = end.cond
        op = cond_op(cond)
        then_filters = self.init_branch(b, label, end.then, cond, op, "then")
        else_filters = self.init_branch(b, label, end.orelse, cond, inv(op), "else")
        if isinstance(cond, InstanceOf):
            category = "type"
        elif any(self.lookup(b, v).kind is FlowKind.NULL for v in (cond.left, cond.right)):
            category = "null"
        else:
            category = "primitive"
        self.frag.if_sites.append(IfSite(label, cond, category, then_filters, else_filters))

    def init_branch(self, b: BlockState, label: str, target: str, cond, op: CondOp, branch: str) -> list[Flow]:
        t = BlockState(dict(b.m), b.pred)
        self.states[target] = t
        if isinstance(cond, InstanceOf):
            f = self.flow(FlowKind.FILTER, ("filter", label, branch, "u"), b.pred)
            f.op, f.side, f.type = op, "u", cond.type
            self.g.add_use(self.lookup(b, cond.var), f)
            t.m[cond.var] = f
            t.pred = f
            return [f]
        left, right = self.lookup(b, cond.left), self.lookup(b, cond.right)
        fl = self.flow(FlowKind.FILTER, ("filter", label, branch, "l"), b.pred)
        fl.op, fl.side, fl.operand = op, "l", right
        self.g.add_use(left, fl)
        self.g.add_obs(right, fl)
        t.m[cond.left] = fl
        fr = self.flow(FlowKind.FILTER, ("filter", label, branch, "r"), fl)
        fr.op, fr.side, fr.operand = flip(op), "r", left
        self.g.add_use(right, fr)
        self.g.add_obs(left, fr)
        t.m[cond.right] = fr
        t.pred = fr
        return [fl, fr]


def build_method_pvpg(method: MethodDef, program: Program, graph: Optional[Graph] = None) -> Fragment:
    """Build ``method``'s fragment into ``graph`` (a fresh graph if omitted)."""
    g = graph if graph is not None else Graph()
    if method.ref in g.fragments:
        return g.fragments[method.ref]
    frag = _Builder(method, g).build()
    g.fragments[method.ref] = frag
    return frag
