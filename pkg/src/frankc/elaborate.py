"""Elaboration of checked Frank programs into Core Frank.

Operators become n-ary functions over suspended computations; their clause
matrices are compiled column by column, left to right, into nested case
splits and unary handlers. The same compiler, run without emitting terms,
decides coverage and redundancy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import core as C
from .core import core_adjustment, core_comp, core_peg, core_port, core_type
from .errors import CoverageError, InternalError
from .syntax import (
    Ability, App, Clause, Cmd, INT, CompType, CoreCompType, Ctor, DataType, EffectVar, Let, LetRec,
    Lit, PCatchAll, PCtor, PLit, PolyType, Port, PRequest, PVar, Peg, Suspend, ThunkType,
    TypeVar, Var, apply_adjustment, handled_commands, normalize_adjustment,
)

FRESH = "$"  # cannot start a source identifier


# ---------------------------------------------------------------------------
# Pattern types and matrices


@dataclass(frozen=True)
class Val:
    type: object


@dataclass(frozen=True)
class Prt:
    port: Port


@dataclass(frozen=True)
class Insc:
    """The inscrutable type of a continuation column."""


INSC = Insc()


@dataclass(frozen=True)
class Row:
    patterns: tuple
    body: object
    index: int
    lets: tuple = ()  # (name, bound, type), innermost first


@dataclass
class CoverageReport:
    status: str  # "complete" | "incomplete"
    witness: tuple = ()
    redundant: frozenset = frozenset()
    witness_patterns: tuple = ()  # holes appear as PVar("_")


@dataclass(frozen=True)
class _Hole:
    var: str


# ---------------------------------------------------------------------------
# Patterns / PatternTypes


def patterns_for_data(decls, name: str, fresh) -> list:
    """Patterns(D): every constructor applied to fresh variables."""
    return [(k.name, tuple(fresh() for _ in k.args)) for k in decls.datas[name].ctors]


def patterns_for_adjustment(decls, delta, fresh) -> list:
    """Patterns(Δ) after the leading value variable: one request per command."""
    out = []
    for c, (_, args, _) in handled_commands(decls, delta).items():
        out.append((c, tuple(fresh() for _ in args), fresh()))
    return out


def pattern_types_for_ctor(decls, dt: DataType, k: str) -> list:
    return [Val(a) for a in decls.ctor_fields(dt, k)]


def pattern_types_for_command(decls, delta, c: str) -> list:
    handled = handled_commands(decls, delta)
    if c not in handled:
        return []
    return [INSC] + [Val(a) for a in handled[c][1]]


# ---------------------------------------------------------------------------
# The let sugar

ON_NAME = FRESH + "on"
ON_TYPE = PolyType(
    (EffectVar("ε"), TypeVar("X"), TypeVar("Y")),
    ThunkType(CoreCompType(
        (TypeVar("X"), ThunkType(CoreCompType((TypeVar("X"),), Peg(Ability(EffectVar("ε")), TypeVar("Y"))))),
        Peg(Ability(EffectVar("ε")), TypeVar("Y")),
    )),
)
ON_BODY = C.Lam((FRESH + "a", FRESH + "f"), C.App(C.Var(FRESH + "f"), (C.Var(FRESH + "a"),)))


def let_sugar(name: str, bound, bound_type, body, peg: Peg):
    """``let x = n in n'`` as ``on n {x ↦ n'}`` with a local polymorphic ``on``."""
    use = C.App(C.PolyApp(ON_NAME, (peg.ability, bound_type, peg.vtype)), (bound, C.Lam((name,), body)))
    return C.Let(ON_NAME, ON_TYPE, ON_BODY, use)


# ---------------------------------------------------------------------------
# Pattern matching elaboration


class PatternCompiler:
    """PE over a matrix, either emitting Core (``build``) or just exploring."""

    def __init__(self, decls, peg: Peg, fresh, build: bool = True):
        self.decls = decls
        self.peg = peg  # Frank peg G
        self.cpeg = core_peg(peg) if build else None
        self.fresh = fresh
        self.build = build
        self.vartype: dict[str, object] = {}  # Core types, for let bindings
        self.catchall_type: dict[str, object] = {}
        self.kont: dict[str, tuple] = {}  # continuation var -> (B, Σ ⊕ Δ, A)
        self.witness: dict[str, object] = {}
        self.selected: set[int] = set()
        self.missing: tuple | None = None
        self.missing_patterns: tuple = ()
        self.roots: tuple = ()

    # -- projections (the @ operation) ----------------------------------------
    def _bind(self, row: Row, name: str, bound, typ) -> tuple:
        if not self.build:
            return row.lets
        return row.lets + ((name, bound, typ),)

    def project_var(self, rows, x) -> list:
        out = []
        for row in rows:
            head, rest = row.patterns[0], row.patterns[1:]
            match head:
                case PVar(y) if y == x:
                    out.append(Row(rest, row.body, row.index, row.lets))
                case PVar(y) if x in self.kont:
                    bound, typ = self.wrap_continuation(x) if self.build else (None, None)
                    out.append(Row(rest, row.body, row.index, self._bind(row, y, bound, typ)))
                case PVar(y):
                    out.append(Row(rest, row.body, row.index,
                                   self._bind(row, y, C.Var(x), self.vartype.get(x))))
                case PCatchAll(y):
                    out.append(Row(rest, row.body, row.index,
                                   self._bind(row, y, C.Lam((), C.Var(x)), self.catchall_type.get(x))))
                case _:
                    raise InternalError(f"pattern {head!r} in a column that is never scrutinised")
        return out

    def wrap_continuation(self, z):
        """``λt. z t!``: the raw continuation at its operator type."""
        b, sigma_delta, a = self.kont[z]
        t = self.fresh()
        port = ThunkType(CoreCompType((), Peg(sigma_delta, b)))
        lam = C.Lam((t,), C.App(C.Var(z), (C.App(C.Var(t), ()),)))
        return lam, ThunkType(CoreCompType((port,), Peg(sigma_delta, a)))

    def project_ctor(self, rows, k, ys, x) -> list:
        out = []
        for row in rows:
            head, rest = row.patterns[0], row.patterns[1:]
            fresh_cols = tuple(PVar(y) for y in ys)
            value = C.Ctor(k, tuple(C.Var(y) for y in ys))
            match head:
                case PCtor(k2, ps) if k2 == k:
                    out.append(Row(tuple(ps) + rest, row.body, row.index, row.lets))
                case PVar(y):
                    out.append(Row(fresh_cols + rest, row.body, row.index,
                                   self._bind(row, y, value, self.vartype.get(x))))
                case PCatchAll(y):
                    out.append(Row(fresh_cols + rest, row.body, row.index,
                                   self._bind(row, y, C.Lam((), value), self.catchall_type.get(x))))
        return out

    def project_lit(self, rows, lit, x) -> list:
        """Rows surviving a literal branch (``lit``) or the default (``None``)."""
        out = []
        for row in rows:
            head, rest = row.patterns[0], row.patterns[1:]
            match head:
                case PLit(v):
                    if lit is not None and v == lit:
                        out.append(Row(rest, row.body, row.index, row.lets))
                case PVar(y):
                    out.append(Row(rest, row.body, row.index,
                                   self._bind(row, y, C.Var(x), self.vartype.get(x))))
        return out

    def project_request(self, rows, c, ys, z, x) -> list:
        out = []
        for row in rows:
            head, rest = row.patterns[0], row.patterns[1:]
            match head:
                case PRequest(c2, ps, q) if c2 == c:
                    out.append(Row((PVar(q),) + tuple(ps) + rest, row.body, row.index, row.lets))
                case PCatchAll(y):
                    reissue = C.Lam((), C.App(C.Var(z), (C.App(C.Cmd(c), tuple(C.Var(v) for v in ys)),)))
                    cols = (PVar(z),) + tuple(PVar(v) for v in ys)
                    out.append(Row(cols + rest, row.body, row.index,
                                   self._bind(row, y, reissue, self.catchall_type.get(x))))
        return out

    # -- the compiler -------------------------------------------------------------
    @staticmethod
    def headless(rows) -> bool:
        return all(isinstance(r.patterns[0], (PVar, PCatchAll)) for r in rows)

    def inhabited(self, t, visiting=frozenset()) -> bool:
        if not isinstance(t, DataType):
            return True
        d = self.decls.datas[t.name]
        if d.literal:
            return True
        if t in visiting:
            return False
        return any(all(self.inhabited(f, visiting | {t}) for f in self.decls.ctor_fields(t, k.name))
                   for k in d.ctors)

    def run(self, xs, qs, rows):
        self.roots = tuple(xs)
        for x in xs:
            self.witness[x] = _Hole(x)
        return self.pe(tuple(xs), tuple(qs), list(rows))

    def pe(self, xs, qs, rows):
        if not xs:
            if not rows:
                if self.missing is None:
                    self.missing = tuple(self.show_witness(x) for x in self.roots)
                    self.missing_patterns = tuple(_public(self._resolve(_Hole(x))) for x in self.roots)
                if self.build:
                    raise InternalError("pattern matching elaboration reached an empty matrix")
                return None
            lead = rows[0]
            self.selected.add(lead.index)
            return self.finish(lead) if self.build else None
        x, q, xs1, qs1 = xs[0], qs[0], xs[1:], qs[1:]
        match q:
            case Prt(port):
                return self.pe_port(x, port, xs1, qs1, rows)
            case Val(DataType(name) as dt) if name in self.decls.datas:
                # an empty matrix is vacuously headless, but scrutinising an
                # uninhabited type is what makes it complete
                if (rows or self.inhabited(dt)) and self.headless(rows):
                    return self.pe(xs1, qs1, self.project_var(rows, x))
                if self.decls.datas[name].literal:
                    return self.pe_literal(x, dt, xs1, qs1, rows)
                return self.pe_data(x, dt, xs1, qs1, rows)
        return self.pe(xs1, qs1, self.project_var(rows, x))

    def pe_data(self, x, dt, xs1, qs1, rows):
        branches = []
        for k, ys in patterns_for_data(self.decls, dt.name, self.fresh):
            fts = pattern_types_for_ctor(self.decls, dt, k)
            if self.build:
                for y, ft in zip(ys, fts):
                    self.vartype[y] = core_type(ft.type)
            self.witness[x] = PCtor(k, tuple(_Hole(y) for y in ys))
            for y in ys:
                self.witness[y] = _Hole(y)
            body = self.pe(ys + xs1, tuple(fts) + qs1, self.project_ctor(rows, k, ys, x))
            branches.append(C.Branch(k, ys, body))
        self.witness[x] = _Hole(x)
        return C.Case(C.Var(x), tuple(branches)) if self.build else None

    def pe_literal(self, x, dt, xs1, qs1, rows):
        heads = []
        for r in rows:
            h = r.patterns[0]
            if isinstance(h, PLit) and h.value not in heads:
                heads.append(h.value)
        branches = []
        for lit in heads:
            self.witness[x] = PLit(lit)
            body = self.pe(xs1, qs1, self.project_lit(rows, lit, x))
            branches.append(C.LitBranch(lit, body))
        d = self.fresh()
        if self.build:
            self.vartype[d] = self.vartype.get(x)
        self.witness[x] = PLit(_unused_literal(dt, heads))
        body = self.pe(xs1, qs1, self.project_lit(rows, None, x))
        self.witness[x] = _Hole(x)
        if not self.build:
            return None
        # the default binds a fresh name; rows refer to the scrutinee itself
        return C.Case(C.Var(x), tuple(branches), C.Default(d, body))

    def pe_port(self, x, port, xs1, qs1, rows):
        delta = normalize_adjustment(port.adj)
        sigma_delta = apply_adjustment(self.cpeg.ability, core_adjustment(delta)) if self.build else None
        clauses = []
        for c, ys, z in patterns_for_adjustment(self.decls, delta, self.fresh):
            pts = pattern_types_for_command(self.decls, delta, c)
            if self.build:
                _, args, res = handled_commands(self.decls, delta)[c]
                for y, a in zip(ys, args):
                    self.vartype[y] = core_type(a)
                self.vartype[z] = ThunkType(CoreCompType((core_type(res),), Peg(sigma_delta, core_type(port.vtype))))
                self.kont[z] = (core_type(res), sigma_delta, core_type(port.vtype))
            else:
                self.kont[z] = None
            self.witness[x] = PRequest(c, tuple(_Hole(y) for y in ys), "_")
            for y in ys:
                self.witness[y] = _Hole(y)
            body = self.pe((z,) + ys + xs1, tuple(pts) + qs1, self.project_request(rows, c, ys, z, x))
            clauses.append(C.CmdClause(c, ys, z, body))
        w = self.fresh()
        if self.build:
            self.vartype[w] = core_type(port.vtype)
            self.catchall_type[w] = self.catchall_type.get(x)
        self.witness[x] = _Hole(w)
        self.witness[w] = _Hole(w)
        values = [r for r in rows if not isinstance(r.patterns[0], PRequest)]
        ret = self.pe((w,) + xs1, (Val(port.vtype),) + qs1, values)
        self.witness[x] = _Hole(x)
        if not self.build:
            return None
        return C.Handle(core_adjustment(delta), self.cpeg, C.App(C.Var(x), ()), tuple(clauses), w, ret,
                        core_type(port.vtype))

    def finish(self, row: Row):
        body = row.body
        for name, bound, typ in row.lets:
            body = let_sugar(name, bound, typ, body, self.cpeg)
        return body

    # -- witnesses ---------------------------------------------------------------------
    def show_witness(self, x) -> str:
        return _show_pattern(self._resolve(_Hole(x)), top=True)

    def _resolve(self, p):
        match p:
            case _Hole(v):
                w = self.witness.get(v, p)
                return p if w == p else self._resolve(w)
            case PCtor(k, args):
                return PCtor(k, tuple(self._resolve(a) for a in args))
            case PRequest(c, args, z):
                return PRequest(c, tuple(self._resolve(a) for a in args), z)
        return p


def _public(p):
    match p:
        case _Hole():
            return PVar("_")
        case PCtor(k, args):
            return PCtor(k, tuple(_public(a) for a in args))
        case PRequest(c, args, z):
            return PRequest(c, tuple(_public(a) for a in args), z)
    return p


def _unused_literal(dt: DataType, used) -> object:
    if dt.name == "Int":
        return next(i for i in itertools.count() if i not in used)
    return next(ch for ch in map(chr, itertools.count(ord("a"))) if ch not in used)


def _show_pattern(p, top=False) -> str:
    match p:
        case _Hole():
            return "_"
        case PLit(v):
            return C.show_lit(v)
        case PCtor(k, ()):
            return k
        case PCtor(k, args):
            s = " ".join([k] + [_show_pattern(a) for a in args])
            return s if top else f"({s})"
        case PRequest(c, args, z):
            return "<" + " ".join([c] + [_show_pattern(a) for a in args]) + " -> _>"
    return str(p)


def check_coverage(decls, comp: CompType, clauses, zonk=lambda t: t) -> CoverageReport:
    """Run PE without emitting terms; report a missing witness and unused rows."""
    counter = itertools.count()
    pc = PatternCompiler(decls, comp.peg, lambda: f"{FRESH}c{next(counter)}", build=False)
    xs = tuple(f"{FRESH}c{next(counter)}" for _ in comp.ports)
    qs = tuple(Prt(Port(zonk(p.adj), zonk(p.vtype))) for p in comp.ports)
    rows = [Row(tuple(cl.patterns), i, i) for i, cl in enumerate(clauses)]
    pc.run(xs, qs, rows)
    redundant = frozenset(range(len(rows))) - pc.selected
    if pc.missing is not None:
        return CoverageReport("incomplete", pc.missing, redundant, pc.missing_patterns)
    return CoverageReport("complete", (), redundant)


# ---------------------------------------------------------------------------
# Term elaboration


class Elaborator:
    def __init__(self, typed):
        self.typed = typed
        self.decls = typed.program.decls
        self.counter = itertools.count(1)

    def fresh(self, stem: str = "x") -> str:
        return f"{FRESH}{stem}{next(self.counter)}"

    def term(self, n):
        match n:
            case Var(name):
                if id(n) in self.typed.instantiations:
                    targs = tuple(core_type(a) for a in self.typed.instantiations[id(n)])
                    if name == C.INT_ADD_NAME:
                        return self.eta_int_add(targs)
                    return C.PolyApp(name, targs)
                return C.Var(name)
            case Cmd(name):
                return self.eta_command(n)
            case App(Cmd(name), args):
                return C.App(C.Cmd(name), tuple(self.term(a) for a in args))
            case App(Var(C.INT_ADD_NAME) as v, args) if id(v) in self.typed.instantiations:
                targs = tuple(core_type(a) for a in self.typed.instantiations[id(v)])
                return C.App(C.PolyApp(C.INT_ADD_NAME, targs), tuple(self.term(a) for a in args))
            case App(head, args):
                # operator arguments are passed as suspended computations
                return C.App(self.term(head), tuple(C.Lam((), self.term(a)) for a in args))
            case Ctor(k, args):
                return C.Ctor(k, tuple(self.term(a) for a in args))
            case Lit(v):
                return C.Lit(v)
            case Suspend():
                comp = self.comp_type(n)
                return C.Annot(self.computation(n, comp), ThunkType(core_comp(comp)))
            case Let(name, poly, bound, body):
                return C.Let(name, core_type(poly), self.term(bound), self.term(body))
            case LetRec(bindings, body):
                rec = tuple(C.RecBinding(b.name, core_type(b.poly), self.computation(b.comp, self.comp_type(b.comp)))
                            for b in bindings)
                return C.LetRec(rec, None if body is None else self.term(body))
        raise InternalError(f"cannot elaborate {n!r}")

    def eta_command(self, n: Cmd):
        """A first-class command as an operator over suspended arguments."""
        t = self.typed.command_types[id(n)]
        xs = tuple(self.fresh("a") for _ in t.comp.ports)
        body = C.App(C.Cmd(n.name), tuple(C.App(C.Var(x), ()) for x in xs))
        return C.Annot(C.Lam(xs, body), core_type(t))

    def eta_int_add(self, targs):
        sigma = targs[0]
        t = ThunkType(CoreCompType((_forced_int(sigma), _forced_int(sigma)), Peg(sigma, INT)))
        a, b = self.fresh("a"), self.fresh("a")
        body = C.App(C.PolyApp(C.INT_ADD_NAME, targs), (C.App(C.Var(a), ()), C.App(C.Var(b), ())))
        return C.Annot(C.Lam((a, b), body), t)

    def comp_type(self, susp) -> CompType:
        try:
            return self.typed.comp_types[id(susp)]
        except KeyError:
            raise InternalError("suspension without a recorded type") from None

    def computation(self, susp: Suspend, comp: CompType):
        """λ x̄. PE(x̄, ports, clauses, peg)."""
        xs = tuple(self.fresh("x") for _ in comp.ports)
        rows = [Row(tuple(cl.patterns), self.term(cl.body), i) for i, cl in enumerate(susp.clauses)]
        pc = PatternCompiler(self.decls, comp.peg, lambda: self.fresh("y"), build=True)
        sigma = core_peg(comp.peg).ability
        for x, p in zip(xs, comp.ports):
            pc.vartype[x] = core_port(p, sigma)
            pc.catchall_type[x] = core_port(p, sigma)
        try:
            body = pc.run(xs, tuple(Prt(p) for p in comp.ports), rows)
        except InternalError:
            raise CoverageError("patterns are not exhaustive", susp.span, pc.missing) from None
        return C.Lam(xs, body)


def _forced_int(sigma):
    return ThunkType(CoreCompType((), Peg(sigma, INT)))


def elaborate_program(typed) -> C.LetRec:
    return Elaborator(typed).term(typed.program.letrec)
