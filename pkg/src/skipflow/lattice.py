"""Value states: one primitive constant, a set of types, or the extremes.

The domain is flat over primitives (two distinct constants join to ``ANY``)
and a subset lattice over type names, where ``"null"`` is a member of the
type universe.  ``EMPTY`` is bottom and ``ANY`` is top; primitives and type
sets are related only through those two.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from .ir import NULL, Program, subtype_of

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class DomainError(ValueError):
    """Operands that no well-typed program can produce."""


class _Empty:
    __slots__ = ()

    def __repr__(self) -> str:
        return "EMPTY"

    def __reduce__(self):
        return "EMPTY"


class _Any:
    __slots__ = ()

    def __repr__(self) -> str:
        return "ANY"

    def __reduce__(self):
        return "ANY"


EMPTY = _Empty()
ANY = _Any()


@dataclass(frozen=True)
class Prim:
    value: int


@dataclass(frozen=True)
class Types:
    types: frozenset

    def __post_init__(self) -> None:
        if not self.types:
            raise ValueError("Types() must be non-empty; use EMPTY")


ValueState = Union[_Empty, _Any, Prim, Types]


def types(*names: str) -> ValueState:
    """Build a type set; no names gives ``EMPTY``."""
    return Types(frozenset(names)) if names else EMPTY


def type_set(names: Iterable[str]) -> ValueState:
    s = frozenset(names)
    return Types(s) if s else EMPTY


def join(a: ValueState, b: ValueState) -> ValueState:
    if a is EMPTY:
        return b
    if b is EMPTY or a == b:
        return a
    if a is ANY or b is ANY:
        return ANY
    if isinstance(a, Types) and isinstance(b, Types):
        return Types(a.types | b.types)
    # distinct constants, or a constant against a type set
    return ANY


def join_all(states: Iterable[ValueState]) -> ValueState:
    out: ValueState = EMPTY
    for s in states:
        out = join(out, s)
        if out is ANY:
            break
    return out


def leq(a: ValueState, b: ValueState) -> bool:
    if a is EMPTY or b is ANY:
        return True
    if a is ANY or b is EMPTY:
        return False
    if isinstance(a, Types) and isinstance(b, Types):
        return a.types <= b.types
    return a == b


def is_primitive(v: ValueState) -> bool:
    return isinstance(v, Prim)


# -- condition operators -----------------------------------------------------


class CondOp(enum.Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    INSTANCEOF = "instanceof"
    NOT_INSTANCEOF = "!instanceof"

    @property
    def is_type_check(self) -> bool:
        return self in (CondOp.INSTANCEOF, CondOp.NOT_INSTANCEOF)


_INV = {
    CondOp.EQ: CondOp.NE,
    CondOp.NE: CondOp.EQ,
    CondOp.LT: CondOp.GE,
    CondOp.GE: CondOp.LT,
    CondOp.GT: CondOp.LE,
    CondOp.LE: CondOp.GT,
    CondOp.INSTANCEOF: CondOp.NOT_INSTANCEOF,
    CondOp.NOT_INSTANCEOF: CondOp.INSTANCEOF,
}

_FLIP = {
    CondOp.EQ: CondOp.EQ,
    CondOp.NE: CondOp.NE,
    CondOp.LT: CondOp.GT,
    CondOp.GT: CondOp.LT,
    CondOp.LE: CondOp.GE,
    CondOp.GE: CondOp.LE,
}

_EVAL: dict[CondOp, Callable[[int, int], bool]] = {
    CondOp.EQ: lambda a, b: a == b,
    CondOp.NE: lambda a, b: a != b,
    CondOp.LT: lambda a, b: a < b,
    CondOp.LE: lambda a, b: a <= b,
    CondOp.GT: lambda a, b: a > b,
    CondOp.GE: lambda a, b: a >= b,
}


def inv(op: CondOp) -> CondOp:
    """Negation: the condition guarding the else branch."""
    return _INV[op]


def flip(op: CondOp) -> CondOp:
    """Swap operand order: ``a op b`` iff ``b flip(op) a``."""
    try:
        return _FLIP[op]
    except KeyError:
        raise DomainError(f"{op.value} has no operand order to flip") from None


def eval_op(op: CondOp, a: int, b: int) -> bool:
    return _EVAL[op](a, b)


# -- filters -----------------------------------------------------------------


def _meet_with_any(vl: ValueState, vr: ValueState) -> ValueState:
    # lower of two states when one of them is ANY
    return vr if vl is ANY else vl


def compare_filter(op: CondOp, vl: ValueState, vr: ValueState, *, literal_ne: bool = False) -> ValueState:
    """Narrow ``vl`` to the values that can satisfy ``vl op vr``.

    ``!=`` removes ``vr`` from ``vl`` only when ``vr`` denotes a single
    concrete value (a constant or ``{null}``); two objects of the same type
    may still differ.  ``literal_ne=True`` applies plain set difference for
    every type set instead.
    """
    if op.is_type_check:
        raise DomainError("compare_filter takes a comparison operator")
    if vl is EMPTY or vr is EMPTY:
        return EMPTY
    if op is CondOp.EQ:
        if vl is ANY or vr is ANY:
            return _meet_with_any(vl, vr)
        if isinstance(vl, Types) and isinstance(vr, Types):
            return type_set(vl.types & vr.types)
        return vl if vl == vr else EMPTY
    if op is CondOp.NE:
        if isinstance(vl, Types) and isinstance(vr, Types):
            if literal_ne or vr.types == {NULL}:
                return type_set(vl.types - vr.types)
            return vl
        if isinstance(vl, Prim) and isinstance(vr, Prim):
            return EMPTY if vl == vr else vl
        # ANY on either side, or a constant against a type set
        return vl
    if isinstance(vl, Types) or isinstance(vr, Types):
        raise DomainError(f"ordered comparison {op.value} on object values")
    if vl is ANY or vr is ANY:
        return vl
    return vl if eval_op(op, vl.value, vr.value) else EMPTY


def instanceof_filter(v: ValueState, target: str, negated: bool, program: Program) -> ValueState:
    """Keep the types of ``v`` that pass (or, negated, fail) ``instanceof target``."""
    if v is EMPTY or v is ANY:
        return v
    if isinstance(v, Prim):
        raise DomainError("instanceof on a primitive value")
    kept = []
    for t in v.types:
        passes = t != NULL and subtype_of(program, t, target)
        if passes != negated:
            kept.append(t)
    return type_set(kept)


# -- rendering ---------------------------------------------------------------


def _sorted_types(ts: Iterable[str]) -> list[str]:
    return sorted(ts, key=lambda t: (t == NULL, t))


def render(v: ValueState) -> str:
    if v is EMPTY:
        return "⊥"
    if v is ANY:
        return "⊤"
    if isinstance(v, Prim):
        return str(v.value)
    return "{" + ",".join(_sorted_types(v.types)) + "}"


def to_json(v: ValueState) -> str:
    if v is EMPTY:
        return "empty"
    if v is ANY:
        return "any"
    if isinstance(v, Prim):
        return f"prim:{v.value}"
    return "types:[" + ",".join(_sorted_types(v.types)) + "]"


def from_json(s: str) -> ValueState:
    if s == "empty":
        return EMPTY
    if s == "any":
        return ANY
    if s.startswith("prim:"):
        return Prim(int(s[5:]))
    if s.startswith("types:[") and s.endswith("]"):
        body = s[7:-1]
        return type_set(body.split(",") if body else ())
    raise ValueError(f"not a rendered value state: {s!r}")
