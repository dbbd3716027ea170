"""Program model for the base language: types, methods, SSA blocks.

A program is a single-inheritance type hierarchy plus method bodies made of
basic blocks.  Every block has a begin marker (``start``, ``merge`` or
``label``), straight-line statements, and an end (``return``, ``jump`` or
``if``).  All objects here are immutable; :func:`validate` reports structural
problems as data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Union

NULL = "null"
INT = "int"


class IRError(Exception):
    """Structural error: unknown type, field or method."""


class ResolutionError(IRError):
    """No implementation of a method exists on a receiver's supertype chain."""


class MethodRef(NamedTuple):
    owner: str
    name: str

    def __str__(self) -> str:
        return f"{self.owner}.{self.name}"


class FieldId(NamedTuple):
    """Location of one field of one concrete type."""

    type: str
    field: str

    def __str__(self) -> str:
        return f"{self.type}.{self.field}"


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class FieldDecl:
    name: str
    kind: str  # INT or a type name


@dataclass(frozen=True)
class TypeDecl:
    name: str
    supertype: Optional[str] = None
    fields: tuple[FieldDecl, ...] = ()


# -- expressions and statements ----------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class AnyExpr:
    pass


@dataclass(frozen=True)
class New:
    type: str


@dataclass(frozen=True)
class NullExpr:
    pass


Expr = Union[Const, AnyExpr, New, NullExpr]


@dataclass(frozen=True)
class Assign:
    dst: str
    expr: Expr


@dataclass(frozen=True)
class Load:
    dst: str
    obj: str
    field: str


@dataclass(frozen=True)
class Store:
    obj: str
    field: str
    src: str


@dataclass(frozen=True)
class Invoke:
    dst: str
    receiver: str
    method: str
    args: tuple[str, ...] = ()


Statement = Union[Assign, Load, Store, Invoke]


# -- conditions --------------------------------------------------------------


@dataclass(frozen=True)
class Compare:
    """``left == right`` or ``left < right`` (only these two in source)."""

    op: str  # "==" or "<"
    left: str
    right: str


@dataclass(frozen=True)
class InstanceOf:
    var: str
    type: str


Cond = Union[Compare, InstanceOf]


# -- block structure ---------------------------------------------------------


@dataclass(frozen=True)
class Start:
    params: tuple[str, ...] = ()


@dataclass(frozen=True)
class Phi:
    dst: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Merge:
    phis: tuple[Phi, ...] = ()


@dataclass(frozen=True)
class Label:
    pass


Begin = Union[Start, Merge, Label]


@dataclass(frozen=True)
class Return:
    var: str


@dataclass(frozen=True)
class Jump:
    target: str


@dataclass(frozen=True)
class If:
    cond: Cond
    then: str
    orelse: str


End = Union[Return, Jump, If]


@dataclass(frozen=True)
class Block:
    label: str
    begin: Begin
    statements: tuple[Statement, ...]
    end: End


@dataclass(frozen=True)
class MethodDef:
    owner: str
    name: str
    blocks: tuple[Block, ...]
    entry: int = 0

    @property
    def ref(self) -> MethodRef:
        return MethodRef(self.owner, self.name)

    @property
    def params(self) -> tuple[str, ...]:
        begin = self.blocks[self.entry].begin
        return begin.params if isinstance(begin, Start) else ()

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise IRError(f"{self.ref}: no block {label!r}")

    def successors(self, block: Block) -> tuple[str, ...]:
        end = block.end
        if isinstance(end, Jump):
            return (end.target,)
        if isinstance(end, If):
            return (end.then, end.orelse)
        return ()

    def predecessors(self) -> dict[str, list[str]]:
        """Map each block label to its predecessor labels, in block order.

        For a merge block the position of a predecessor in this list is the
        index of the matching argument in every phi of that merge.
        """
        preds: dict[str, list[str]] = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            for s in self.successors(b):
                preds.setdefault(s, []).append(b.label)
        return preds


@dataclass(frozen=True)
class Program:
    types: tuple[TypeDecl, ...]
    methods: tuple[MethodDef, ...]
    roots: tuple[MethodRef, ...] = ()
    # Source positions for diagnostics; not part of program identity.
    positions: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_types", {t.name: t for t in self.types})
        object.__setattr__(self, "_methods", {m.ref: m for m in self.methods})

    def type(self, name: str) -> TypeDecl:
        try:
            return self._types[name]
        except KeyError:
            raise IRError(f"unknown type {name!r}") from None

    def has_type(self, name: str) -> bool:
        return name in self._types

    def method(self, ref: MethodRef) -> MethodDef:
        try:
            return self._methods[ref]
        except KeyError:
            raise IRError(f"unknown method {ref}") from None

    def has_method(self, ref: MethodRef) -> bool:
        return ref in self._methods

    def methods_of(self, type_name: str) -> tuple[str, ...]:
        """Names of the methods implemented directly by ``type_name``."""
        return tuple(m.name for m in self.methods if m.owner == type_name)

    def supertypes(self, name: str) -> Iterator[str]:
        """Yield ``name`` and then each ancestor, nearest first."""
        seen = set()
        cur: Optional[str] = name
        while cur is not None and cur not in seen:
            seen.add(cur)
            yield cur
            cur = self.type(cur).supertype

    def subtypes(self, name: str) -> list[str]:
        """All declared types ``t`` with ``subtype_of(t, name)``."""
        return [t.name for t in self.types if name in self.supertypes(t.name)]

    def all_fields(self, type_name: str) -> list[FieldDecl]:
        """Declared and inherited fields, root type's fields first."""
        out: list[FieldDecl] = []
        for t in reversed(list(self.supertypes(type_name))):
            out.extend(self.type(t).fields)
        return out


# -- queries -----------------------------------------------------------------


def subtype_of(program: Program, sub: str, sup: str) -> bool:
    if sub == NULL:
        return False
    program.type(sup)
    return sup in program.supertypes(sub)


def resolve(program: Program, receiver_type: str, method_name: str) -> MethodDef:
    if receiver_type == NULL:
        raise ResolutionError("cannot resolve a method on null")
    for t in program.supertypes(receiver_type):
        ref = MethodRef(t, method_name)
        if program.has_method(ref):
            return program.method(ref)
    raise ResolutionError(f"{receiver_type} has no method {method_name!r}")


def lookup(program: Program, type_name: str, field_name: str) -> FieldId:
    if type_name == NULL:
        raise IRError("null has no fields")
    for f in program.all_fields(type_name):
        if f.name == field_name:
            return FieldId(type_name, field_name)
    raise IRError(f"{type_name} has no field {field_name!r}")


def field_kind(program: Program, type_name: str, field_name: str) -> str:
    for f in program.all_fields(type_name):
        if f.name == field_name:
            return f.kind
    raise IRError(f"{type_name} has no field {field_name!r}")


# -- def/use helpers ---------------------------------------------------------


def defined_var(stmt: Statement) -> Optional[str]:
    if isinstance(stmt, Store):
        return None
    return stmt.dst


def used_vars(stmt: Statement) -> tuple[str, ...]:
    if isinstance(stmt, Assign):
        return ()
    if isinstance(stmt, Load):
        return (stmt.obj,)
    if isinstance(stmt, Store):
        return (stmt.obj, stmt.src)
    return (stmt.receiver,) + stmt.args


def cond_vars(cond: Cond) -> tuple[str, ...]:
    if isinstance(cond, InstanceOf):
        return (cond.var,)
    return (cond.left, cond.right)


def end_vars(end: End) -> tuple[str, ...]:
    if isinstance(end, Return):
        return (end.var,)
    if isinstance(end, If):
        return cond_vars(end.cond)
    return ()


def reverse_postorder(method: MethodDef) -> list[str]:
    """Labels of blocks reachable from the entry, in reverse postorder."""
    labels = {b.label: b for b in method.blocks}
    order: list[str] = []
    seen: set[str] = set()
    entry = method.blocks[method.entry].label
    # iterative DFS; successors visited then-first so that RPO is stable
    stack: list[tuple[str, Iterator[str]]] = [(entry, iter(method.successors(labels[entry])))]
    seen.add(entry)
    while stack:
        label, it = stack[-1]
        for s in it:
            if s in labels and s not in seen:
                seen.add(s)
                stack.append((s, iter(method.successors(labels[s]))))
                break
        else:
            stack.pop()
            order.append(label)
    order.reverse()
    return order


def dominators(method: MethodDef) -> dict[str, set[str]]:
    """Dominator sets of reachable blocks (simple iterative algorithm)."""
    rpo = reverse_postorder(method)
    preds = method.predecessors()
    entry = rpo[0]
    reachable = set(rpo)
    dom = {b: set(rpo) for b in rpo}
    dom[entry] = {entry}
    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            ps = [p for p in preds[b] if p in reachable]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new = new | {b}
            if new != dom[b]:
                dom[b] = new
                changed = True
    return dom


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    method: Optional[MethodRef] = None
    block: Optional[str] = None

    def __str__(self) -> str:
        where = ""
        if self.method is not None:
            where = f"{self.method}"
            if self.block is not None:
                where += f":{self.block}"
            where += ": "
        return f"{where}{self.message} [{self.rule}]"


def validate(program: Program) -> list[Violation]:
    """Check every structural rule; an empty list means the program is valid."""
    out: list[Violation] = []
    out.extend(_check_types(program))
    if any(v.rule.startswith("type-") for v in out):
        # hierarchy queries below assume a sound hierarchy
        return out
    field_names = {f.name for t in program.types for f in t.fields}
    method_names = {m.name for m in program.methods}
    seen_methods: set[MethodRef] = set()
    for m in program.methods:
        if m.ref in seen_methods:
            out.append(Violation("method-duplicate", f"method {m.ref} defined twice", m.ref))
        seen_methods.add(m.ref)
        if not program.has_type(m.owner):
            out.append(Violation("method-owner", f"unknown owner type {m.owner!r}", m.ref))
        out.extend(_check_method(program, m, field_names, method_names))
    for r in program.roots:
        if not program.has_method(r):
            out.append(Violation("root-unknown", f"root {r} names no method"))
    return out


def _check_types(program: Program) -> list[Violation]:
    out = []
    names: set[str] = set()
    for t in program.types:
        if t.name == NULL or t.name == INT:
            out.append(Violation("type-reserved", f"{t.name!r} is reserved and cannot name a type"))
        if t.name in names:
            out.append(Violation("type-duplicate", f"type {t.name} declared twice"))
        names.add(t.name)
    roots = [t.name for t in program.types if t.supertype is None]
    for t in program.types:
        if t.supertype is not None and t.supertype not in names:
            out.append(Violation("type-unknown-supertype", f"{t.name} extends unknown {t.supertype}"))
    if out:
        return out
    for t in program.types:
        chain = []
        cur: Optional[str] = t.name
        while cur is not None and cur not in chain:
            chain.append(cur)
            cur = program.type(cur).supertype
        if cur is not None:
            out.append(Violation("type-cycle", f"supertype chain of {t.name} is cyclic"))
    if out:
        return out
    if len(roots) != 1:
        out.append(Violation("type-root", f"expected one root type, found {len(roots)}: {roots}"))
    for t in program.types:
        seen: dict[str, str] = {}
        for anc in reversed(list(program.supertypes(t.name))):
            for f in program.type(anc).fields:
                if f.name in seen and anc == t.name:
                    out.append(Violation("type-field-duplicate", f"field {f.name} of {t.name} already declared in {seen[f.name]}"))
                seen.setdefault(f.name, anc)
        for f in t.fields:
            if f.kind != INT and f.kind not in names:
                out.append(Violation("type-field-kind", f"field {t.name}.{f.name} has unknown kind {f.kind!r}"))
    return out


def _check_method(program: Program, m: MethodDef, field_names: set[str], method_names: set[str]) -> list[Violation]:
    out: list[Violation] = []
    ref = m.ref

    def bad(rule: str, msg: str, block: Optional[str] = None) -> None:
        out.append(Violation(rule, msg, ref, block))

    if not m.blocks:
        bad("entry-start", "method has no blocks")
        return out
    labels: dict[str, Block] = {}
    for b in m.blocks:
        if b.label in labels:
            bad("label-duplicate", f"label {b.label} used twice", b.label)
        labels[b.label] = b
    starts = [i for i, b in enumerate(m.blocks) if isinstance(b.begin, Start)]
    if len(starts) != 1 or not (0 <= m.entry < len(m.blocks)) or starts[0] != m.entry:
        bad("entry-start", f"expected exactly one start block as entry, found {len(starts)}")
        return out
    returns = [b.label for b in m.blocks if isinstance(b.end, Return)]
    if len(returns) != 1:
        bad("single-return", f"expected exactly one return, found {len(returns)}")

    preds: dict[str, list[str]] = {b.label: [] for b in m.blocks}
    for b in m.blocks:
        end = b.end
        if isinstance(end, Jump):
            tgt = labels.get(end.target)
            if tgt is None:
                bad("label-unknown", f"jump to unknown label {end.target}", b.label)
                continue
            if isinstance(tgt.begin, Label):
                bad("label-block-predecessor", f"label block {end.target} is the target of a jump", b.label)
            elif not isinstance(tgt.begin, Merge):
                bad("jump-target", f"jump target {end.target} does not begin with merge", b.label)
            preds[end.target].append(b.label)
        elif isinstance(end, If):
            if end.then == end.orelse:
                bad("if-targets", "then and else targets coincide", b.label)
            for t in (end.then, end.orelse):
                tgt = labels.get(t)
                if tgt is None:
                    bad("label-unknown", f"branch to unknown label {t}", b.label)
                    continue
                if not isinstance(tgt.begin, Label):
                    bad("if-target", f"branch target {t} does not begin with label", b.label)
                preds[t].append(b.label)
    for b in m.blocks:
        p = preds[b.label]
        if isinstance(b.begin, Label) and len(p) != 1:
            bad("label-block-predecessor", f"label block has {len(p)} predecessors, expected one if", b.label)
        if isinstance(b.begin, Merge):
            for phi in b.begin.phis:
                if len(phi.args) != len(p):
                    bad("phi-arity", f"phi {phi.dst} has {len(phi.args)} args for {len(p)} jumps", b.label)
        if isinstance(b.begin, Start) and p:
            bad("entry-start", "start block has predecessors", b.label)
    if out:
        return out

    rpo = reverse_postorder(m)
    for b in m.blocks:
        if b.label not in rpo:
            bad("unreachable-block", "block is unreachable from the entry", b.label)
    out.extend(_check_ssa(m, rpo))
    out.extend(_check_refs(program, m, field_names, method_names))
    return out


def _check_ssa(m: MethodDef, rpo: list[str]) -> list[Violation]:
    out: list[Violation] = []
    ref = m.ref
    labels = {b.label: b for b in m.blocks}
    def_block: dict[str, str] = {}
    def_pos: dict[str, int] = {}

    def define(var: str, label: str, pos: int) -> None:
        if var in def_block:
            out.append(Violation("ssa-single-def", f"variable {var} defined more than once", ref, label))
            return
        def_block[var] = label
        def_pos[var] = pos

    for b in m.blocks:
        if isinstance(b.begin, Start):
            for p in b.begin.params:
                define(p, b.label, -1)
        elif isinstance(b.begin, Merge):
            for phi in b.begin.phis:
                define(phi.dst, b.label, -1)
        for i, s in enumerate(b.statements):
            d = defined_var(s)
            if d is not None:
                define(d, b.label, i)
    if out:
        return out
    dom = dominators(m)
    preds = m.predecessors()

    def available(var: str, label: str, pos: int) -> bool:
        if var not in def_block:
            return False
        db = def_block[var]
        if db == label:
            return def_pos[var] < pos
        return label in dom and db in dom[label]

    for label in rpo:
        b = labels[label]
        if isinstance(b.begin, Merge):
            for phi in b.begin.phis:
                for j, arg in enumerate(phi.args):
                    pred = preds[label][j]
                    if pred in dom and not available(arg, pred, len(labels[pred].statements) + 1):
                        out.append(Violation("ssa-dominance", f"phi argument {arg} is not available at the end of {pred}", ref, label))
        for i, s in enumerate(b.statements):
            for u in used_vars(s):
                if not available(u, label, i):
                    out.append(Violation("ssa-dominance", f"use of {u} is not dominated by its definition", ref, label))
        for u in end_vars(b.end):
            if not available(u, label, len(b.statements)):
                out.append(Violation("ssa-dominance", f"use of {u} is not dominated by its definition", ref, label))
    return out


def _check_refs(program: Program, m: MethodDef, field_names: set[str], method_names: set[str]) -> list[Violation]:
    out: list[Violation] = []
    for b in m.blocks:
        for s in b.statements:
            if isinstance(s, Assign) and isinstance(s.expr, New) and not program.has_type(s.expr.type):
                out.append(Violation("unknown-type", f"new of unknown type {s.expr.type}", m.ref, b.label))
            elif isinstance(s, (Load, Store)) and s.field not in field_names:
                out.append(Violation("unknown-field", f"no type declares field {s.field}", m.ref, b.label))
            elif isinstance(s, Invoke) and s.method not in method_names:
                out.append(Violation("unknown-method", f"no type declares method {s.method}", m.ref, b.label))
        if isinstance(b.end, If) and isinstance(b.end.cond, InstanceOf):
            t = b.end.cond.type
            if t == NULL:
                out.append(Violation("instanceof-null", "instanceof may not name null", m.ref, b.label))
            elif not program.has_type(t):
                out.append(Violation("unknown-type", f"instanceof unknown type {t}", m.ref, b.label))
        if isinstance(b.end, If) and isinstance(b.end.cond, Compare) and b.end.cond.op not in ("==", "<"):
            out.append(Violation("cond-op", f"source condition operator {b.end.cond.op!r} is not == or <", m.ref, b.label))
    return out


def iter_invokes(program: Program) -> Iterable[tuple[MethodDef, Block, int, Invoke]]:
    for m in program.methods:
        for b in m.blocks:
            for i, s in enumerate(b.statements):
                if isinstance(s, Invoke):
                    yield m, b, i, s
