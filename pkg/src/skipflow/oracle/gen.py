"""Seeded generator of small well-typed programs.

Programs are built structurally (straight-line code, diamonds, bounded
loops) while tracking a static kind and a non-null flag for every visible
variable, so that every dereference in a generated program is on a value
that cannot be null and every call resolves.  Objects get all their fields
stored right after allocation, so no load ever sees an unwritten field.

Calls only go from a method to method names of a strictly lower level,
which rules out recursion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..ir import (
    INT,
    NULL,
    AnyExpr,
    Assign,
    Block,
    Compare,
    Const,
    FieldDecl,
    If,
    InstanceOf,
    Invoke,
    Jump,
    Label,
    Load,
    Merge,
    MethodDef,
    MethodRef,
    New,
    NullExpr,
    Phi,
    Program,
    Return,
    Start,
    Store,
    TypeDecl,
)

ROOT_TYPE = "Object"
MAIN_TYPE = "Main"


@dataclass
class _Var:
    kind: str  # INT, NULL or a type name
    nonnull: bool


@dataclass
class _Sig:
    name: str
    level: int
    base: str
    params: list  # kinds, receiver excluded
    ret: str


class _Hierarchy:
    def __init__(self, types: list[TypeDecl]):
        self.types = types
        self.parent = {t.name: t.supertype for t in types}

    def ancestors(self, name: str) -> list[str]:
        out = []
        cur: Optional[str] = name
        while cur is not None:
            out.append(cur)
            cur = self.parent[cur]
        return out

    def is_sub(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def subtypes(self, name: str) -> list[str]:
        return [t.name for t in self.types if self.is_sub(t.name, name)]

    def fields(self, name: str) -> list[FieldDecl]:
        out = []
        by_name = {t.name: t for t in self.types}
        for t in reversed(self.ancestors(name)):
            out.extend(by_name[t].fields)
        return out


@dataclass
class _Block:
    label: str
    begin: object
    stmts: list = field(default_factory=list)
    end: object = None


class _MethodGen:
    """Generates the body of one method."""

    def __init__(self, g: "_Gen", owner: str, sig: Optional[_Sig], level: int, budget: int):
        self.g = g
        self.rng = g.rng
        self.owner = owner
        self.level = level
        self.budget = budget
        self.blocks: list[_Block] = []
        self.nvars = 0
        self.cur: _Block
        self.sig = sig

    # -- helpers

    def fresh(self, prefix: str = "v") -> str:
        self.nvars += 1
        return f"{prefix}{self.nvars}"

    def new_block(self, begin) -> _Block:
        b = _Block(f"b{len(self.blocks)}", begin)
        self.blocks.append(b)
        return b

    def emit(self, stmt) -> None:
        self.cur.stmts.append(stmt)

    def compatible(self, scope: dict, kind: str, nonnull: bool = False) -> list[str]:
        h = self.g.h
        out = []
        for name, v in scope.items():
            if nonnull and not v.nonnull:
                continue
            if kind == INT:
                ok = v.kind == INT
            else:
                ok = v.kind == NULL or (v.kind != INT and h.is_sub(v.kind, kind))
            if ok:
                out.append(name)
        return out

    def value_of(self, scope: dict, kind: str, nonnull: bool = False) -> str:
        """A variable of ``kind``, reusing one in scope or defining a new one."""
        cands = self.compatible(scope, kind, nonnull)
        if cands and self.rng.random() < 0.8:
            return self.rng.choice(sorted(cands))
        if kind == INT:
            return self.def_int(scope)
        if nonnull or self.rng.random() < 0.5:
            return self.def_new(scope, self.rng.choice(self.g.h.subtypes(kind)))
        dst = self.fresh()
        self.emit(Assign(dst, NullExpr()))
        scope[dst] = _Var(NULL, False)
        return dst

    def def_int(self, scope: dict) -> str:
        dst = self.fresh()
        if self.rng.random() < 0.3:
            self.emit(Assign(dst, AnyExpr()))
        else:
            self.emit(Assign(dst, Const(self.rng.randint(-3, 3))))
        scope[dst] = _Var(INT, False)
        return dst

    def def_new(self, scope: dict, type_name: str) -> str:
        dst = self.fresh("o")
        self.emit(Assign(dst, New(type_name)))
        # initialise every field before the object can escape
        for fd in self.g.h.fields(type_name):
            src = self.init_value(scope, fd.kind)
            self.emit(Store(dst, fd.name, src))
        scope[dst] = _Var(type_name, True)
        return dst

    def init_value(self, scope: dict, kind: str) -> str:
        cands = self.compatible(scope, kind)
        if cands and self.rng.random() < 0.7:
            return self.rng.choice(sorted(cands))
        dst = self.fresh()
        if kind == INT:
            self.emit(Assign(dst, Const(self.rng.randint(-3, 3))))
            scope[dst] = _Var(INT, False)
        else:
            self.emit(Assign(dst, NullExpr()))
            scope[dst] = _Var(NULL, False)
        return dst

    def refs(self, scope: dict, nonnull: bool) -> list[str]:
        return sorted(n for n, v in scope.items() if v.kind not in (INT, NULL) and (v.nonnull or not nonnull))

    # -- statements

    def statement(self, scope: dict) -> None:
        rng = self.rng
        h = self.g.h
        choice = rng.random()
        receivers = self.refs(scope, nonnull=True)
        if choice < 0.15:
            self.def_int(scope)
        elif choice < 0.3:
            self.def_new(scope, rng.choice(self.g.instantiable))
        elif choice < 0.35:
            dst = self.fresh()
            self.emit(Assign(dst, NullExpr()))
            scope[dst] = _Var(NULL, False)
        elif choice < 0.5 and receivers:
            obj = rng.choice(receivers)
            fields = h.fields(scope[obj].kind)
            if not fields:
                self.def_int(scope)
                return
            fd = rng.choice(fields)
            dst = self.fresh()
            self.emit(Load(dst, obj, fd.name))
            scope[dst] = _Var(fd.kind, False)
        elif choice < 0.62 and receivers:
            obj = rng.choice(receivers)
            fields = h.fields(scope[obj].kind)
            if not fields:
                self.def_int(scope)
                return
            fd = rng.choice(fields)
            src = self.value_of(scope, fd.kind)
            self.emit(Store(obj, fd.name, src))
        elif receivers:
            self.call(scope, receivers)
        else:
            self.def_new(scope, rng.choice(self.g.instantiable))

    def call(self, scope: dict, receivers: list[str]) -> None:
        h = self.g.h
        options = []
        for r in receivers:
            for sig in self.g.sigs:
                if sig.level < self.level and h.is_sub(scope[r].kind, sig.base):
                    options.append((r, sig))
        if not options:
            self.def_int(scope)
            return
        r, sig = self.rng.choice(options)
        args = [self.value_of(scope, k) for k in sig.params]
        dst = self.fresh()
        self.emit(Invoke(dst, r, sig.name, tuple(args)))
        scope[dst] = _Var(sig.ret, False)

    # -- structure

    def region(self, scope: dict, depth: int) -> None:
        n = self.rng.randint(1, max(1, self.budget))
        for _ in range(n):
            r = self.rng.random()
            if depth < 2 and r < 0.2:
                self.diamond(scope, depth + 1)
            elif depth < 2 and r < 0.27:
                self.loop(scope, depth + 1)
            else:
                self.statement(scope)

    def condition(self, scope: dict) -> tuple[object, dict, dict]:
        """Pick a condition and the refined scopes for its two branches."""
        rng = self.rng
        then_s, else_s = dict(scope), dict(scope)
        r = rng.random()
        objs = self.refs(scope, nonnull=False)
        if r < 0.3 and objs:
            x = rng.choice(objs)
            t = rng.choice(self.g.h.subtypes(scope[x].kind))
            then_s[x] = _Var(t, True)
            return InstanceOf(x, t), then_s, else_s
        nullable = sorted(n for n, v in scope.items() if v.kind != INT)
        if r < 0.55 and nullable:
            x = rng.choice(nullable)
            n = self.fresh()
            self.emit(Assign(n, NullExpr()))
            scope[n] = then_s[n] = else_s[n] = _Var(NULL, False)
            if scope[x].kind != NULL:
                else_s[x] = _Var(scope[x].kind, True)
            if rng.random() < 0.5:
                return Compare("==", x, n), then_s, else_s
            return Compare("==", n, x), then_s, else_s
        if r < 0.62 and len(objs) >= 2:
            a, b = rng.sample(objs, 2)
            return Compare("==", a, b), then_s, else_s
        a = self.value_of(scope, INT)
        b = self.value_of(scope, INT)
        for s in (then_s, else_s):
            s[a] = scope[a]
            s[b] = scope[b]
        return Compare(rng.choice(["==", "<"]), a, b), then_s, else_s

    def merge_values(self, kinds: list, then_s: dict, else_s: dict, then_end: _Block, else_end: _Block):
        """Pick one incoming variable per phi on each side, defining new ones at the branch ends."""
        saved = self.cur
        args = []
        for kind in kinds:
            pair = []
            for s, end in ((then_s, then_end), (else_s, else_end)):
                self.cur = end
                pair.append(self.value_of(s, kind))
            args.append(pair)
        self.cur = saved
        return args

    def diamond(self, scope: dict, depth: int) -> None:
        cond, then_s, else_s = self.condition(scope)
        head = self.cur
        then_b = self.new_block(Label())
        self.cur = then_b
        self.region(then_s, depth)
        then_end = self.cur
        else_b = self.new_block(Label())
        self.cur = else_b
        if self.rng.random() < 0.7:
            self.region(else_s, depth)
        else_end = self.cur
        head.end = If(cond, then_b.label, else_b.label)
        kinds = [self.phi_kind(scope) for _ in range(self.rng.randint(0, 2))]
        pairs = self.merge_values(kinds, then_s, else_s, then_end, else_end)
        merge = self.new_block(None)
        phis = []
        for kind, (a, b) in zip(kinds, pairs):
            dst = self.fresh("p")
            phis.append(Phi(dst, (a, b)))
            scope[dst] = _Var(kind, then_s[a].nonnull and else_s[b].nonnull)
        merge.begin = Merge(tuple(phis))
        then_end.end = Jump(merge.label)
        else_end.end = Jump(merge.label)
        self.cur = merge

    def phi_kind(self, scope: dict) -> str:
        kinds = sorted({v.kind for v in scope.values() if v.kind != NULL} | {INT})
        return self.rng.choice(kinds)

    def loop(self, scope: dict, depth: int) -> None:
        rng = self.rng
        # counter: i starts below the bound k; the body either sets it at or
        # above k (one more check, then exit) or draws it with `any`
        k = self.fresh("k")
        self.emit(Assign(k, Const(rng.randint(1, 3))))
        i0 = self.fresh("i")
        self.emit(Assign(i0, Const(0)))
        scope[k] = _Var(INT, False)
        scope[i0] = _Var(INT, False)
        carried = []
        for _ in range(rng.randint(0, 2)):
            kind = self.phi_kind(scope)
            init = self.value_of(scope, kind)
            carried.append((kind, init))
        pre = self.cur
        header = self.new_block(None)
        pre.end = Jump(header.label)
        i = self.fresh("i")
        hscope = dict(scope)
        hscope[i] = _Var(INT, False)
        names = []
        for kind, init in carried:
            d = self.fresh("p")
            names.append(d)
            hscope[d] = _Var(kind, scope[init].nonnull)
        body = self.new_block(Label())
        self.cur = body
        bscope = dict(hscope)
        self.region(bscope, depth)
        if rng.random() < 0.7:
            j = self.fresh("i")
            self.emit(Assign(j, Const(rng.randint(3, 5))))
        else:
            j = self.fresh("i")
            self.emit(Assign(j, AnyExpr()))
        bscope[j] = _Var(INT, False)
        back = []
        for (kind, init), d in zip(carried, names):
            back.append(self.value_of(bscope, kind, nonnull=hscope[d].nonnull))
        body_end = self.cur
        body_end.end = Jump(header.label)
        phis = [Phi(i, (i0, j))] + [Phi(d, (init, b)) for (kind, init), d, b in zip(carried, names, back)]
        header.begin = Merge(tuple(phis))
        exit_b = self.new_block(Label())
        header.end = If(Compare("<", i, k), body.label, exit_b.label)
        scope.clear()
        scope.update(hscope)
        self.cur = exit_b

    def build(self, name: str, params: list[tuple[str, _Var]], ret_kind: Optional[str]) -> MethodDef:
        self.cur = self.new_block(Start(tuple(p for p, _ in params)))
        scope = {p: v for p, v in params}
        if self.budget > 1:
            self.region(scope, 0)
        if ret_kind is None or ret_kind == INT:
            r = self.value_of(scope, INT) if self.budget > 1 else self.def_int(scope)
        else:
            r = self.value_of(scope, ret_kind)
        self.cur.end = Return(r)
        blocks = tuple(Block(b.label, b.begin, tuple(b.stmts), b.end) for b in self.blocks)
        return MethodDef(self.owner, name, blocks, 0)


class _Gen:
    def __init__(self, seed: int, size: int):
        self.rng = random.Random(seed)
        self.size = max(1, size)

    def hierarchy(self) -> list[TypeDecl]:
        rng = self.rng
        n = rng.randint(1, min(6, self.size)) if self.size > 1 else 0
        names = [f"T{i}" for i in range(n)]
        parents = {}
        for i, name in enumerate(names):
            parents[name] = rng.choice([ROOT_TYPE] + names[:i])
        kinds = [INT] + names
        decls = [TypeDecl(ROOT_TYPE, None, ())]
        fcount = 0
        for name in names:
            fields = []
            for _ in range(rng.choice([0, 0, 1, 1, 2])):
                fields.append(FieldDecl(f"f{fcount}", rng.choice(kinds)))
                fcount += 1
            decls.append(TypeDecl(name, parents[name], tuple(fields)))
        decls.append(TypeDecl(MAIN_TYPE, ROOT_TYPE, ()))
        return decls

    def program(self) -> Program:
        rng = self.rng
        decls = self.hierarchy()
        self.h = _Hierarchy(decls)
        user = [t.name for t in decls if t.name not in (ROOT_TYPE, MAIN_TYPE)]
        self.instantiable = user or [MAIN_TYPE]
        kinds = [INT] + user
        self.sigs: list[_Sig] = []
        if user:
            for i in range(rng.randint(1, min(5, self.size))):
                self.sigs.append(
                    _Sig(
                        name=f"m{i}",
                        level=rng.randint(1, 3),
                        base=rng.choice(user),
                        params=[rng.choice(kinds) for _ in range(rng.randint(0, 2))],
                        ret=rng.choice(kinds),
                    )
                )
        budget = max(1, min(6, self.size // 2))
        methods = []
        for sig in self.sigs:
            impls = [sig.base] + [t for t in self.h.subtypes(sig.base) if t != sig.base and rng.random() < 0.4]
            for owner in impls:
                params = [("this", _Var(owner, True))]
                params += [(f"a{k}", _Var(kind, False)) for k, kind in enumerate(sig.params)]
                mg = _MethodGen(self, owner, sig, sig.level, budget)
                methods.append(mg.build(sig.name, params, sig.ret))
        main = _MethodGen(self, MAIN_TYPE, None, 4, min(self.size, 8))
        methods.append(main.build("main", [], INT))
        return Program(tuple(decls), tuple(methods), (MethodRef(MAIN_TYPE, "main"),))


def gen_program(seed: int, size: int = 8) -> Program:
    """A validating program with parameterless root ``Main.main``; same seed, same program."""
    return _Gen(seed, size).program()
