"""Worklist solver for predicated value propagation.

A flow propagates only while enabled.  A flow is enabled once some source of
an incoming predicate edge is enabled with a non-empty value state; the
always-enabled ``pred_on`` flow seeds every method's entry block.  Invokes,
loads and stores observe their receiver and link callees or field flows for
each new receiver type.  All updates are joins, so the result does not
depend on the order in which the worklist is drained.
"""

from __future__ import annotations

import logging
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .ir import NULL, IRError, MethodDef, MethodRef, Program, lookup, resolve
from .lattice import (
    ANY,
    EMPTY,
    CondOp,
    DomainError,
    Prim,
    Types,
    ValueState,
    compare_filter,
    instanceof_filter,
    join,
    join_all,
    type_set,
)
from .pvpg import SOURCE_KINDS, Flow, FlowKind, Fragment, Graph, build_method_pvpg

log = logging.getLogger(__name__)

SKIPFLOW = "skipflow"
BASELINE = "baseline"


class AnalysisError(Exception):
    """The analysed program is ill-typed (failed resolution, bad field, ...)."""


class BudgetExceeded(AnalysisError):
    def __init__(self, steps: int, partial: "AnalysisResult"):
        super().__init__(f"step budget exhausted after {steps} steps")
        self.steps = steps
        self.partial = partial


@dataclass
class SolverConfig:
    mode: str = SKIPFLOW
    # Root parameter seeding: "none", "types" (every declared type plus
    # null) or "any"; see Solver._seed_root.
    seed_params: str = "none"
    param_seeds: dict = field(default_factory=dict)  # MethodRef -> list of ValueState
    max_steps: Optional[int] = None
    order_seed: Optional[int] = None  # drain the worklist in a seeded random order
    literal_ne: bool = False
    fault: Optional[str] = None  # "no-predicate": never apply the predicate rule

    def __post_init__(self) -> None:
        if self.mode not in (SKIPFLOW, BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.seed_params not in ("none", "types", "any"):
            raise ValueError(f"unknown seeding policy {self.seed_params!r}")


@dataclass
class AnalysisResult:
    program: Program
    graph: Graph
    mode: str
    reachable: frozenset
    enabled: frozenset  # flow ids
    vs: dict  # flow id -> ValueState
    linked: dict  # invoke flow id -> frozenset of MethodRef
    steps: int
    growth: dict  # flow id -> number of strict value-state increases
    enable_events: int
    solver: Optional["Solver"] = field(default=None, repr=False)

    def state(self, f: Flow) -> ValueState:
        return self.vs.get(f.id, EMPTY)

    def is_enabled(self, f: Flow) -> bool:
        return f.id in self.enabled

    def flow(self, method, origin: tuple) -> Flow:
        if isinstance(method, str):
            owner, name = method.split(".")
            method = MethodRef(owner, name)
        return self.graph.flow(method, origin)

    def reachable_sorted(self) -> list[str]:
        return sorted(str(r) for r in self.reachable)

    def snapshot(self) -> tuple:
        """Order-independent view of (reachable, enabled, value states) keyed by flow origin."""
        flows = self.graph.flows
        return (
            frozenset(self.reachable),
            frozenset(flows[i].key for i in self.enabled),
            {flows[i].key: v for i, v in self.vs.items() if v is not EMPTY},
        )

    def step_bound(self) -> int:
        return 4 * len(self.graph.flows) * (1 + self.graph.max_in_degree())


class Solver:
    def __init__(self, program: Program, config: Optional[SolverConfig] = None):
        self.program = program
        self.config = config or SolverConfig()
        self.baseline = self.config.mode == BASELINE
        self.g = Graph()
        self.vs: dict[int, ValueState] = {}
        self.enabled: set[int] = set()
        self.reachable: set[MethodRef] = set()
        self.linked: dict[int, set[MethodRef]] = {}
        self.seen_types: dict[int, set[str]] = {}
        self.seeds: dict[int, ValueState] = {}
        self.growth: Counter = Counter()
        self.steps = 0
        self.enable_events = 0
        self.link_events = 0
        self._rng = random.Random(self.config.order_seed) if self.config.order_seed is not None else None
        self._queue: deque = deque()
        self._pool: list[Flow] = []
        self._queued: set[int] = set()

    # -- worklist

    def _schedule(self, f: Flow) -> None:
        if f.id in self._queued:
            return
        self._queued.add(f.id)
        if self._rng is None:
            self._queue.append(f)
        else:
            self._pool.append(f)

    def _pop(self) -> Optional[Flow]:
        if self._rng is None:
            if not self._queue:
                return None
            f = self._queue.popleft()
        else:
            if not self._pool:
                return None
            i = self._rng.randrange(len(self._pool))
            self._pool[i], self._pool[-1] = self._pool[-1], self._pool[i]
            f = self._pool.pop()
        self._queued.discard(f.id)
        return f

    # -- rules

    def _enable(self, f: Flow) -> None:
        """[Predicate]: mark ``f`` executable and, for sources, seed it ([Source])."""
        if f.id in self.enabled:
            return
        self.enabled.add(f.id)
        self.enable_events += 1
        if f.kind in (FlowKind.PHI_PRED, FlowKind.PRED_ON):
            self._update(f, ANY)
        else:
            self._schedule(f)

    def _pred_ready(self, s: Flow) -> bool:
        return s.id in self.enabled and self.vs.get(s.id, EMPTY) is not EMPTY

    def _update(self, f: Flow, new: ValueState) -> None:
        old = self.vs.get(f.id, EMPTY)
        joined = join(old, new)
        if joined == old:
            return
        self.vs[f.id] = joined
        self.growth[f.id] += 1
        for t in f.use_out:
            self._schedule(t)
        for t in f.obs_out:
            self._schedule(t)
        if old is EMPTY and self.config.fault != "no-predicate":
            for t in f.pred_out:
                self._enable(t)

    def _admit(self, flows: Iterable[Flow]) -> None:
        """Enable freshly created flows whose predicate already holds."""
        for f in flows:
            if self.baseline or any(self._pred_ready(s) for s in f.pred_in):
                if self.config.fault == "no-predicate" and not self.baseline:
                    continue
                self._enable(f)

    def _reach(self, method: MethodDef) -> Fragment:
        frag = self.g.fragments.get(method.ref)
        if frag is not None:
            return frag
        self.reachable.add(method.ref)
        frag = build_method_pvpg(method, self.program, self.g)
        log.debug("reached %s (%d flows)", method.ref, len(frag.flows))
        self._admit(frag.flows)
        return frag

    def _receiver_types(self, f: Flow) -> list[str]:
        v = self.vs.get(f.receiver.id, EMPTY)
        if not isinstance(v, Types):
            return []
        seen = self.seen_types.setdefault(f.id, set())
        new = sorted(t for t in v.types if t not in seen)
        seen.update(new)
        return [t for t in new if t != NULL]

    def _link_invoke(self, f: Flow) -> None:
        """[Invoke]: resolve each new receiver type and wire arguments and return.

        The callee's receiver parameter gets only the receiver types that
        dispatch to it, so an override never sees a supertype's objects.
        """
        for t in self._receiver_types(f):
            try:
                callee = resolve(self.program, t, f.name)
            except IRError as e:
                raise AnalysisError(f"{f.method}: {e}") from None
            frag = self._reach(callee)
            if len(frag.params) != len(f.args):
                raise AnalysisError(
                    f"{f.method}: call to {callee.ref} passes {len(f.args)} values for {len(frag.params)} parameters"
                )
            this = frag.params[0]
            self.seeds[this.id] = join(self.seeds.get(this.id, EMPTY), type_set([t]))
            self._schedule(this)
            targets = self.linked.setdefault(f.id, set())
            if callee.ref in targets:
                continue
            targets.add(callee.ref)
            self.link_events += 1
            for a, p in zip(f.args[1:], frag.params[1:]):
                if self.g.add_use(a, p):
                    self._schedule(p)
            if frag.ret is not None and self.g.add_use(frag.ret, f):
                self._schedule(f)

    def _link_fields(self, f: Flow) -> None:
        """[Load]/[Store]: connect the field flow of each new receiver type."""
        for t in self._receiver_types(f):
            try:
                fid = lookup(self.program, t, f.field)
            except IRError as e:
                raise AnalysisError(f"{f.method}: {e}") from None
            sink, created = self.g.field_sink(fid)
            if created:
                self._admit([sink])
            if f.kind is FlowKind.LOAD:
                if self.g.add_use(sink, f):
                    self._schedule(f)
            elif self.g.add_use(f, sink):
                self._schedule(sink)

    def _source_value(self, f: Flow) -> ValueState:
        k = f.kind
        if k is FlowKind.CONST:
            return ANY if self.baseline else Prim(f.value)
        if k is FlowKind.ANY:
            return ANY
        if k is FlowKind.NEW:
            return type_set([f.type])
        return type_set([NULL])

    def _transfer(self, f: Flow) -> ValueState:
        k = f.kind
        if k in SOURCE_KINDS:
            return self._source_value(f)
        inp = join_all(self.vs.get(s.id, EMPTY) for s in f.use_in)
        if k is FlowKind.PARAM:
            return join(inp, self.seeds.get(f.id, EMPTY))
        if k is not FlowKind.FILTER:
            return inp  # [PassThrough]
        if f.op.is_type_check:
            try:
                return instanceof_filter(inp, f.type, f.op is CondOp.NOT_INSTANCEOF, self.program)
            except DomainError as e:
                raise AnalysisError(f"{f.method}: {e}") from None
        if self.baseline and (inp is ANY or isinstance(inp, Prim)):
            return inp  # primitives are not tracked by the baseline
        try:
            return compare_filter(f.op, inp, self.vs.get(f.operand.id, EMPTY), literal_ne=self.config.literal_ne)
        except DomainError as e:
            raise AnalysisError(f"{f.method}: {e}") from None

    def _process(self, f: Flow) -> None:
        self.steps += 1
        if self.config.max_steps is not None and self.steps > self.config.max_steps:
            raise BudgetExceeded(self.steps, self.result())
        if f.id not in self.enabled:
            return
        if f.kind is FlowKind.INVOKE:
            self._link_invoke(f)
        elif f.kind in (FlowKind.LOAD, FlowKind.STORE):
            self._link_fields(f)
        self._update(f, self._transfer(f))

    def _drain(self) -> None:
        while True:
            f = self._pop()
            if f is None:
                return
            self._process(f)

    # -- seeding

    def _seed_root(self, method: MethodDef, frag: Fragment) -> None:
        """Seed root parameters.  Parameters have no declared kind, so with
        "types" or "any" the receiver gets the types dispatching to the root
        and the policy only decides what the other parameters hold."""
        explicit = self.config.param_seeds.get(method.ref)
        policy = self.config.seed_params
        for i, p in enumerate(frag.params):
            if explicit is not None:
                seed = explicit[i] if i < len(explicit) else EMPTY
            elif policy == "none":
                seed = EMPTY
            elif i == 0:
                seed = type_set(
                    t for t in self.program.subtypes(method.owner)
                    if resolve(self.program, t, method.name).ref == method.ref
                )
            elif policy == "any":
                seed = ANY
            else:
                seed = type_set([t.name for t in self.program.types] + [NULL])
            if seed is not EMPTY:
                self.seeds[p.id] = seed
                self._schedule(p)

    # -- entry points

    def run(self, roots: Sequence[MethodRef]) -> AnalysisResult:
        if not roots:
            raise ValueError("at least one root method is required")
        self._enable(self.g.pred_on)
        for r in roots:
            method = self.program.method(r)
            frag = self._reach(method)
            self._seed_root(method, frag)
        self._drain()
        return self.result()

    def reapply(self) -> int:
        """Re-apply every rule to every flow; return how many facts changed."""
        before = (self.enable_events, sum(self.growth.values()), self.link_events, len(self.reachable))
        for f in list(self.g.flows):
            if f.id not in self.enabled and (self.baseline or any(self._pred_ready(s) for s in f.pred_in)):
                self._enable(f)
            self._schedule(f)
        self._drain()
        after = (self.enable_events, sum(self.growth.values()), self.link_events, len(self.reachable))
        return sum(a - b for a, b in zip(after, before))

    def result(self) -> AnalysisResult:
        return AnalysisResult(
            program=self.program,
            graph=self.g,
            mode=self.config.mode,
            reachable=frozenset(self.reachable),
            enabled=frozenset(self.enabled),
            vs=dict(self.vs),
            linked={k: frozenset(v) for k, v in self.linked.items()},
            steps=self.steps,
            growth=dict(self.growth),
            enable_events=self.enable_events,
            solver=self,
        )


def analyze(program: Program, roots: Optional[Sequence[MethodRef]] = None, config: Optional[SolverConfig] = None) -> AnalysisResult:
    """Run the predicated analysis from ``roots`` (default: the program's roots)."""
    config = config or SolverConfig()
    return Solver(program, config).run(list(roots if roots is not None else program.roots))
