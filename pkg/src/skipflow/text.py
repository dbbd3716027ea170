"""Textual ``.sfir`` encoding of programs.

Grammar (whitespace-insensitive, ``#`` starts a comment)::

    type NAME [extends NAME] { (field NAME : (int | NAME))* }
    method OWNER.NAME(p0, ...) { BLOCK+ }
    root OWNER.NAME

    BLOCK  := LABEL ':' BEGIN STMT* END
    BEGIN  := start(p0, ...) | merge [v = phi(a, ...), ...] | label
    STMT   := v = INT | v = any | v = new T | v = null
            | v = r.x | r.x = v | v = r.m(a, ...)
    END    := return v | jump L | if COND then L1 else L2
    COND   := a == b | a < b | a instanceof T

The brackets around a merge's phi list are optional on input and always
printed when the list is non-empty.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .ir import (
    INT,
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
    Violation,
    validate,
)
from .lattice import INT64_MAX, INT64_MIN

KEYWORDS = frozenset(
    "type extends field int method root start merge label phi any new null "
    "return jump if then else instanceof".split()
)


@dataclass(frozen=True)
class SourceFile:
    text: str
    origin: str = "<string>"

    @classmethod
    def read(cls, path: Union[str, Path]) -> "SourceFile":
        p = Path(path)
        return cls(p.read_text(encoding="utf-8"), str(p))


class SfirError(Exception):
    """Base class for parse and validation failures."""


class SfirSyntaxError(SfirError):
    def __init__(self, message: str, origin: str, line: int, col: int):
        super().__init__(f"{origin}:{line}:{col}: {message}")
        self.origin = origin
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Diagnostic:
    origin: str
    line: int
    col: int
    violation: Violation

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.col}: {self.violation}"


class SfirValidationError(SfirError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|[{}()\[\],:=.<])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # "int", "name", "op", "eof"
    text: str
    line: int
    col: int


def _tokenize(src: SourceFile) -> list[_Tok]:
    toks: list[_Tok] = []
    text = src.text
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SfirSyntaxError(f"unexpected character {text[pos]!r}", src.origin, line, pos - line_start + 1)
        kind = m.lastgroup
        tok_text = m.group()
        if kind in ("int", "name", "op"):
            toks.append(_Tok(kind, tok_text, line, pos - line_start + 1))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            line_start = pos + tok_text.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: SourceFile):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0
        self.positions: dict = {}

    # -- token helpers

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[_Tok] = None) -> SfirSyntaxError:
        t = tok or self.tok
        found = t.text or "end of input"
        return SfirSyntaxError(f"{msg} (found {found!r})", self.src.origin, t.line, t.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            raise self.error(f"expected {what}")
        self.advance()
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            raise self.error("expected integer")
        value = int(t.text)
        if not INT64_MIN <= value <= INT64_MAX:
            raise self.error("integer literal out of 64-bit range")
        self.advance()
        return value

    def name_list(self) -> tuple[str, ...]:
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.ident("variable"))
            while self.at(","):
                self.advance()
                out.append(self.ident("variable"))
        self.expect(")")
        return tuple(out)

    # -- top level

    def program(self) -> Program:
        types, methods, roots = [], [], []
        while self.tok.kind != "eof":
            if self.at("type"):
                types.append(self.type_decl())
            elif self.at("method"):
                methods.append(self.method())
            elif self.at("root"):
                start = self.advance()
                owner = self.ident("type name")
                self.expect(".")
                roots.append(MethodRef(owner, self.ident("method name")))
                self.positions[("root", len(roots) - 1)] = (start.line, start.col)
            else:
                raise self.error("expected 'type', 'method' or 'root'")
        return Program(tuple(types), tuple(methods), tuple(roots), positions=self.positions)

    def type_decl(self) -> TypeDecl:
        start = self.expect("type")
        name = self.ident("type name")
        self.positions[("type", name)] = (start.line, start.col)
        sup = None
        if self.at("extends"):
            self.advance()
            sup = self.ident("type name")
        self.expect("{")
        fields = []
        while self.at("field"):
            self.advance()
            fname = self.ident("field name")
            self.expect(":")
            if self.at("int"):
                self.advance()
                kind = INT
            else:
                kind = self.ident("field kind")
            fields.append(FieldDecl(fname, kind))
        self.expect("}")
        return TypeDecl(name, sup, tuple(fields))

    def method(self) -> MethodDef:
        start = self.expect("method")
        owner = self.ident("type name")
        self.expect(".")
        name = self.ident("method name")
        ref = MethodRef(owner, name)
        self.positions[("method", ref)] = (start.line, start.col)
        header_tok = self.tok
        header = self.name_list()
        self.expect("{")
        blocks = []
        while not self.at("}"):
            blocks.append(self.block(ref))
        if not blocks:
            raise self.error("expected at least one block")
        self.expect("}")
        entry = next((i for i, b in enumerate(blocks) if isinstance(b.begin, Start)), 0)
        m = MethodDef(owner, name, tuple(blocks), entry)
        if isinstance(blocks[entry].begin, Start) and blocks[entry].begin.params != header:
            raise SfirSyntaxError(
                f"header parameters {list(header)} differ from start parameters {list(m.params)}",
                self.src.origin,
                header_tok.line,
                header_tok.col,
            )
        return m

    def block(self, ref: MethodRef) -> Block:
        tok = self.tok
        label = self.ident("block label")
        self.positions[("block", ref, label)] = (tok.line, tok.col)
        self.expect(":")
        begin = self.begin()
        stmts = []
        while not (self.at("return") or self.at("jump") or self.at("if")):
            if self.tok.kind == "eof" or self.at("}"):
                raise self.error("expected statement or block end")
            stmts.append(self.statement())
        return Block(label, begin, tuple(stmts), self.end())

    def begin(self):
        if self.at("start"):
            self.advance()
            return Start(self.name_list())
        if self.at("label"):
            self.advance()
            return Label()
        if self.at("merge"):
            self.advance()
            bracketed = self.at("[")
            if bracketed:
                self.advance()
            phis = []
            while self.tok.kind == "name" and self.peek().text == "=" and self.peek(2).text == "phi":
                dst = self.ident("variable")
                self.expect("=")
                self.expect("phi")
                phis.append(Phi(dst, self.name_list()))
                if self.at(","):
                    self.advance()
                elif bracketed and not self.at("]"):
                    raise self.error("expected ',' or ']'")
            if bracketed:
                self.expect("]")
            return Merge(tuple(phis))
        raise self.error("expected 'start', 'merge' or 'label'")

    def statement(self):
        first = self.tok
        lhs = self.ident("variable")
        if self.at("."):
            self.advance()
            fname = self.ident("field name")
            self.expect("=")
            return Store(lhs, fname, self.ident("variable"))
        self.expect("=")
        t = self.tok
        if t.kind == "int":
            return Assign(lhs, Const(self.integer()))
        if self.at("any"):
            self.advance()
            return Assign(lhs, AnyExpr())
        if self.at("null"):
            self.advance()
            return Assign(lhs, NullExpr())
        if self.at("new"):
            self.advance()
            return Assign(lhs, New(self.ident("type name")))
        if t.kind == "name" and t.text not in KEYWORDS:
            obj = self.ident()
            self.expect(".")
            member = self.ident("field or method name")
            if self.at("("):
                return Invoke(lhs, obj, member, self.name_list())
            return Load(lhs, obj, member)
        raise self.error(f"expected expression after '{first.text} ='")

    def end(self):
        if self.at("return"):
            self.advance()
            return Return(self.ident("variable"))
        if self.at("jump"):
            self.advance()
            return Jump(self.ident("label"))
        self.expect("if")
        cond = self.cond()
        self.expect("then")
        then = self.ident("label")
        self.expect("else")
        return If(cond, then, self.ident("label"))

    def cond(self):
        left = self.ident("variable")
        if self.at("instanceof"):
            self.advance()
            if self.at("null"):
                self.advance()
                return InstanceOf(left, "null")
            return InstanceOf(left, self.ident("type name"))
        if self.at("=="):
            self.advance()
            return Compare("==", left, self.ident("variable"))
        if self.at("<"):
            self.advance()
            return Compare("<", left, self.ident("variable"))
        raise self.error("expected '==', '<' or 'instanceof'")


def _position(program: Program, v: Violation) -> tuple[int, int]:
    pos = program.positions
    if v.method is not None:
        if v.block is not None and ("block", v.method, v.block) in pos:
            return pos[("block", v.method, v.block)]
        if ("method", v.method) in pos:
            return pos[("method", v.method)]
    return (1, 1)


def parse_program(src: Union[SourceFile, str], *, check: bool = True) -> Program:
    """Parse and (by default) validate a program.

    Raises :class:`SfirSyntaxError` on malformed text and
    :class:`SfirValidationError` when the parsed program breaks a structural
    rule.
    """
    if isinstance(src, str):
        src = SourceFile(src)
    program = _Parser(src).program()
    if check:
        violations = validate(program)
        if violations:
            diags = [Diagnostic(src.origin, *_position(program, v), v) for v in violations]
            raise SfirValidationError(diags)
    return program


def load_program(path: Union[str, Path]) -> Program:
    return parse_program(SourceFile.read(path))


# -- printing ----------------------------------------------------------------


def _stmt(s) -> str:
    if isinstance(s, Assign):
        e = s.expr
        if isinstance(e, Const):
            rhs = str(e.value)
        elif isinstance(e, AnyExpr):
            rhs = "any"
        elif isinstance(e, New):
            rhs = f"new {e.type}"
        else:
            rhs = "null"
        return f"{s.dst} = {rhs}"
    if isinstance(s, Load):
        return f"{s.dst} = {s.obj}.{s.field}"
    if isinstance(s, Store):
        return f"{s.obj}.{s.field} = {s.src}"
    return f"{s.dst} = {s.receiver}.{s.method}({', '.join(s.args)})"


def _cond(c) -> str:
    if isinstance(c, InstanceOf):
        return f"{c.var} instanceof {c.type}"
    return f"{c.left} {c.op} {c.right}"


def _begin(b) -> str:
    if isinstance(b, Start):
        return f"start({', '.join(b.params)})"
    if isinstance(b, Label):
        return "label"
    if not b.phis:
        return "merge"
    phis = ", ".join(f"{p.dst} = phi({', '.join(p.args)})" for p in b.phis)
    return f"merge [{phis}]"


def _end(e) -> str:
    if isinstance(e, Return):
        return f"return {e.var}"
    if isinstance(e, Jump):
        return f"jump {e.target}"
    return f"if {_cond(e.cond)} then {e.then} else {e.orelse}"


def format_program(p: Program) -> str:
    lines: list[str] = []
    for t in p.types:
        head = f"type {t.name}" + (f" extends {t.supertype}" if t.supertype else "")
        if not t.fields:
            lines.append(head + " {}")
            continue
        lines.append(head + " {")
        for f in t.fields:
            lines.append(f"  field {f.name} : {f.kind}")
        lines.append("}")
    for m in p.methods:
        lines.append("")
        lines.append(f"method {m.owner}.{m.name}({', '.join(m.params)}) {{")
        for b in m.blocks:
            lines.append(f"  {b.label}: {_begin(b.begin)}")
            for s in b.statements:
                lines.append(f"    {_stmt(s)}")
            lines.append(f"    {_end(b.end)}")
        lines.append("}")
    if p.roots:
        lines.append("")
        for r in p.roots:
            lines.append(f"root {r.owner}.{r.name}")
    return "\n".join(lines) + "\n"


def print_program(p: Program, origin: str = "<printed>") -> SourceFile:
    return SourceFile(format_program(p), origin)
