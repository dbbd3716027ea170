"""Sampled value domain shared by the exhaustive lattice checks."""

from itertools import combinations

from skipflow.ir import FieldDecl, Program, TypeDecl
from skipflow.lattice import ANY, EMPTY, Prim, Types

# A <: Object, B <: A, C <: Object
HIERARCHY = Program(
    (
        TypeDecl("Object", None, ()),
        TypeDecl("A", "Object", (FieldDecl("x", "int"),)),
        TypeDecl("B", "A", ()),
        TypeDecl("C", "Object", ()),
    ),
    (),
)


def sample(universe=("A", "B", "null"), prims=range(-2, 3)):
    out = [EMPTY, ANY] + [Prim(n) for n in prims]
    for k in range(1, len(universe) + 1):
        out += [Types(frozenset(c)) for c in combinations(universe, k)]
    return out


def is_types(v):
    return isinstance(v, Types)


def is_prim(v):
    return isinstance(v, Prim)


def mixed(a, b):
    """A constant against a type set: no well-typed comparison produces this."""
    return (is_prim(a) and is_types(b)) or (is_types(a) and is_prim(b))
