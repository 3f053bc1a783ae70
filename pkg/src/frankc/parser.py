"""Recursive-descent parser producing an unresolved surface program.

Layout: a top-level item starts in column 0 and runs until the next token
that sits in column 0. Names are resolved (variable, command, constructor,
data type, type variable) later, by ``desugar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError, Span
from .lexer import Token, lex

# ---------------------------------------------------------------------------
# Surface syntax

_SPAN = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SInst:
    name: str
    args: tuple


@dataclass(frozen=True)
class SAbility:
    closed: bool  # written with a leading 0
    instances: tuple


@dataclass(frozen=True)
class STName:
    name: str
    args: tuple  # of STName | SThunk | SAbility


@dataclass(frozen=True)
class SThunk:
    comp: "SComp"


@dataclass(frozen=True)
class SPort:
    adj: tuple | None  # None: adjustment omitted
    vtype: object


@dataclass(frozen=True)
class SPeg:
    ability: SAbility | None  # None: brackets omitted
    vtype: object


@dataclass(frozen=True)
class SComp:
    ports: tuple
    peg: SPeg


# expressions


@dataclass(frozen=True)
class SIdent:
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SApp:
    head: object
    args: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SBang:
    expr: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SSeq:
    first: object
    second: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPlus:
    left: object
    right: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SLit:
    value: object  # int or 1-char str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SString:
    value: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SClause:
    patterns: tuple
    body: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SSuspend:
    clauses: tuple
    nullary: bool
    span: Span | None = field(**_SPAN)


# patterns


@dataclass(frozen=True)
class SPIdent:
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPCtor:
    name: str
    args: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPWild:
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPLit:
    value: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPString:
    value: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPRequest:
    command: str
    args: tuple
    cont: str | None  # None: wildcard continuation
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SPCatchAll:
    name: str | None
    span: Span | None = field(**_SPAN)


# items


@dataclass(frozen=True)
class SData:
    name: str
    params: tuple
    ctors: tuple  # (name, tuple of surface types)
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SInterface:
    name: str
    params: tuple
    commands: tuple  # (name, args, result)
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SSignature:
    name: str
    comp: SComp
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SEquation:
    name: str
    patterns: tuple
    body: object
    nullary: bool
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class SurfaceProgram:
    items: tuple


# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_sym(self, s: str) -> bool:
        return self.tok.is_sym(s)

    def expect_sym(self, s: str) -> Token:
        if not self.at_sym(s):
            self.fail({repr(s)})
        return self.advance()

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail({kind})
        return self.advance()

    def fail(self, expected):
        t = self.tok
        found = "end of item" if t.kind == "eof" else repr(t.text)
        exp = ", ".join(sorted(expected))
        raise ParseError(f"unexpected {found}; expected one of: {exp}", t.span, expected)

    # types
    def comp_type(self) -> SComp:
        items = [self.comp_item()]
        while self.at_sym("->"):
            self.advance()
            items.append(self.comp_item())
        *ports, last = items
        for p in ports:
            if isinstance(p, SPeg):
                if p.ability is not None:
                    raise ParseError("a peg may only appear last in a computation type", self.tok.span)
        ports = [SPort(None, p.vtype) if isinstance(p, SPeg) else p for p in ports]
        if isinstance(last, SPort):
            if last.adj is not None:
                raise ParseError("a computation type must end in a peg, not a port", self.tok.span)
            last = SPeg(None, last.vtype)
        return SComp(tuple(ports), last)

    def comp_item(self):
        if self.at_sym("<"):
            self.advance()
            adj = self.instances(closing=">")
            self.expect_sym(">")
            return SPort(tuple(adj), self.value_type())
        if self.at_sym("["):
            ab = self.bracket_ability()
            return SPeg(ab, self.value_type())
        return SPeg(None, self.value_type())

    def bracket_ability(self) -> SAbility:
        self.expect_sym("[")
        closed = False
        insts = []
        if self.tok.kind == "int" and self.tok.value == 0:
            self.advance()
            closed = True
            if self.at_sym(","):
                self.advance()
                insts = self.instances(closing="]")
        else:
            insts = self.instances(closing="]")
        self.expect_sym("]")
        return SAbility(closed, tuple(insts))

    def instances(self, closing: str) -> list:
        out = []
        if self.at_sym(closing):
            return out
        out.append(self.instance())
        while self.at_sym(",") or self.at_sym("+"):
            self.advance()
            out.append(self.instance())
        return out

    def instance(self) -> SInst:
        name = self.expect_kind("upper").text
        args = []
        while self.starts_type_arg():
            args.append(self.type_arg())
        return SInst(name, tuple(args))

    def starts_type_arg(self) -> bool:
        t = self.tok
        return t.kind == "upper" or t.is_sym("(") or t.is_sym("{") or t.is_sym("[")

    def type_arg(self):
        if self.at_sym("["):
            return self.bracket_ability()
        return self.atomic_type()

    def atomic_type(self):
        t = self.tok
        if t.kind == "upper":
            self.advance()
            return STName(t.text, ())
        if t.is_sym("("):
            self.advance()
            vt = self.value_type()
            self.expect_sym(")")
            return vt
        if t.is_sym("{"):
            self.advance()
            c = self.comp_type()
            self.expect_sym("}")
            return SThunk(c)
        self.fail({"type"})

    def value_type(self):
        t = self.tok
        if t.kind == "upper":
            self.advance()
            args = []
            while self.starts_type_arg():
                args.append(self.type_arg())
            return STName(t.text, tuple(args))
        return self.atomic_type()

    # expressions
    def expr(self):
        first = self.plus_expr()
        if self.at_sym(";"):
            span = self.advance().span
            return SSeq(first, self.expr(), span)
        return first

    def plus_expr(self):
        left = self.app_expr()
        while self.at_sym("+"):
            span = self.advance().span
            left = SPlus(left, self.app_expr(), span)
        return left

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("lower", "int", "char", "string") or t.is_sym("(") or t.is_sym("{")

    def app_expr(self):
        if not self.starts_atom():
            self.fail({"expression"})
        span = self.tok.span
        head = self.atom()
        args = []
        while self.starts_atom():
            args.append(self.atom())
        if args:
            return SApp(head, tuple(args), span)
        return head

    def atom(self):
        e = self.primary()
        while self.at_sym("!"):
            span = self.advance().span
            e = SBang(e, span)
        return e

    def primary(self):
        t = self.tok
        if t.kind == "lower":
            self.advance()
            return SIdent(t.text, t.span)
        if t.kind in ("int", "char"):
            self.advance()
            return SLit(t.value, t.span)
        if t.kind == "string":
            self.advance()
            return SString(t.value, t.span)
        if t.is_sym("("):
            self.advance()
            e = self.expr()
            self.expect_sym(")")
            return e
        if t.is_sym("{"):
            return self.suspension()
        self.fail({"expression"})

    def suspension(self):
        span = self.expect_sym("{").span
        if self.at_sym("}"):
            self.advance()
            return SSuspend((), False, span)
        clause = self.try_clause()
        if clause is None:
            body = self.expr()
            self.expect_sym("}")
            return SSuspend((SClause((), body, span),), True, span)
        clauses = [clause]
        while self.at_sym("|"):
            self.advance()
            c = self.try_clause()
            if c is None:
                self.fail({"pattern"})
            clauses.append(c)
        self.expect_sym("}")
        return SSuspend(tuple(clauses), False, span)

    def try_clause(self):
        save = self.pos
        span = self.tok.span
        try:
            pats = []
            while self.starts_pattern():
                pats.append(self.pattern_atom())
            if not pats or not self.at_sym("->"):
                raise ParseError("not a clause", span)
            self.advance()
        except ParseError:
            self.pos = save
            return None
        body = self.expr()
        return SClause(tuple(pats), body, span)

    # patterns
    def starts_pattern(self) -> bool:
        t = self.tok
        return (t.kind in ("lower", "int", "char", "string")
                or t.is_sym("(") or t.is_sym("<") or t.is_sym("_"))

    def pattern_atom(self):
        t = self.tok
        if t.kind == "lower":
            self.advance()
            return SPIdent(t.text, t.span)
        if t.is_sym("_"):
            self.advance()
            return SPWild(t.span)
        if t.kind in ("int", "char"):
            self.advance()
            return SPLit(t.value, t.span)
        if t.kind == "string":
            self.advance()
            return SPString(t.value, t.span)
        if t.is_sym("("):
            self.advance()
            if self.tok.kind == "lower":
                name = self.advance()
                args = []
                while self.starts_pattern():
                    args.append(self.pattern_atom())
                self.expect_sym(")")
                if args:
                    return SPCtor(name.text, tuple(args), name.span)
                return SPIdent(name.text, name.span)
            p = self.pattern_atom()
            self.expect_sym(")")
            return p
        if t.is_sym("<"):
            self.advance()
            if self.at_sym("_"):
                self.advance()
                self.expect_sym(">")
                return SPCatchAll(None, t.span)
            name = self.expect_kind("lower").text
            if self.at_sym(">"):
                self.advance()
                return SPCatchAll(name, t.span)
            args = []
            while not self.at_sym("->"):
                if not self.starts_pattern():
                    self.fail({"'->'", "pattern"})
                args.append(self.pattern_atom())
            self.advance()
            if self.at_sym("_"):
                self.advance()
                cont = None
            else:
                cont = self.expect_kind("lower").text
            self.expect_sym(">")
            return SPRequest(name, tuple(args), cont, t.span)
        self.fail({"pattern"})

    # items
    def item(self):
        t = self.tok
        if t.kind == "keyword" and t.text == "data":
            return self.data_decl()
        if t.kind == "keyword" and t.text == "interface":
            return self.interface_decl()
        if t.kind != "lower":
            self.fail({"'data'", "'interface'", "definition"})
        name = self.advance()
        if self.at_sym(":"):
            self.advance()
            return SSignature(name.text, self.comp_type(), name.span)
        if self.at_sym("!"):
            self.advance()
            self.expect_sym("=")
            return SEquation(name.text, (), self.expr(), True, name.span)
        pats = []
        while self.starts_pattern():
            pats.append(self.pattern_atom())
        self.expect_sym("=")
        return SEquation(name.text, tuple(pats), self.expr(), False, name.span)

    def params(self) -> tuple:
        out = []
        while self.tok.kind == "upper":
            out.append(self.advance().text)
        return tuple(out)

    def data_decl(self):
        span = self.advance().span
        name = self.expect_kind("upper").text
        params = self.params()
        self.expect_sym("=")
        ctors = []
        if self.tok.kind != "eof":
            ctors.append(self.ctor_decl())
            while self.at_sym("|"):
                self.advance()
                ctors.append(self.ctor_decl())
        return SData(name, params, tuple(ctors), span)

    def ctor_decl(self):
        name = self.expect_kind("lower").text
        args = []
        while self.starts_type_arg() and not self.at_sym("["):
            args.append(self.atomic_type())
        return (name, tuple(args))

    def interface_decl(self):
        span = self.advance().span
        name = self.expect_kind("upper").text
        params = self.params()
        self.expect_sym("=")
        cmds = [self.command_decl()]
        while self.at_sym("|"):
            self.advance()
            cmds.append(self.command_decl())
        return SInterface(name, params, tuple(cmds), span)

    def command_decl(self):
        name = self.expect_kind("lower").text
        self.expect_sym(":")
        types = [self.value_type()]
        while self.at_sym("->"):
            self.advance()
            types.append(self.value_type())
        return (name, tuple(types[:-1]), types[-1])

    def parse_item(self):
        it = self.item()
        if self.tok.kind != "eof":
            self.fail({"end of item"})
        return it


def split_items(tokens: list[Token]) -> list[list[Token]]:
    """Group tokens into top-level items by the column-0 layout rule."""
    groups: list[list[Token]] = []
    for t in tokens:
        if t.kind == "eof":
            break
        if t.span.col == 0 or not groups:
            if t.span.col != 0:
                raise ParseError("a top-level item must start in column 0", t.span)
            groups.append([])
        groups[-1].append(t)
    for g in groups:
        last = g[-1].span
        g.append(Token("eof", "", Span(last.line, last.col + len(g[-1].text))))
    return groups


def parse_program(tokens: list[Token]) -> SurfaceProgram:
    return SurfaceProgram(tuple(_Parser(g).parse_item() for g in split_items(tokens)))


def parse_source(source: str) -> SurfaceProgram:
    return parse_program(lex(source))


def parse_expression(source: str):
    p = _Parser(lex(source))
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail({"end of input"})
    return e


def parse_type(source: str) -> SComp:
    p = _Parser(lex(source))
    c = p.comp_type()
    if p.tok.kind != "eof":
        p.fail({"end of input"})
    return c
