"""Core Frank: n-ary functions, case analysis and unary annotated handlers.

The checker here is syntax directed and performs no unification; it is used
to validate elaborator output and every intermediate term of evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import CoreTypeError, NotFound
from .syntax import (
    Ability, Adjustment, CHAR, CompType, CoreCompType, DataType, EffectVar, INT, Instance, Peg,
    PolyType, Port, ThunkType, TypeVar, apply_adjustment, handled_commands, instantiate,
    lookup_command, normalize_instances, ordered_free_vars, show_ability, show_adjustment, show_peg, show_type,
    _show_arg,
)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class PolyApp:
    """``f R̄``: a polymorphic variable at explicit type arguments."""

    name: str
    targs: tuple


@dataclass(frozen=True)
class Cmd:
    name: str


@dataclass(frozen=True)
class App:
    head: object
    args: tuple


@dataclass(frozen=True)
class Annot:
    term: object
    type: object


@dataclass(frozen=True)
class Ctor:
    name: str
    args: tuple


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Lam:
    params: tuple
    body: object


@dataclass(frozen=True)
class Branch:
    ctor: str
    vars: tuple
    body: object


@dataclass(frozen=True)
class LitBranch:
    value: object
    body: object


@dataclass(frozen=True)
class Default:
    var: str
    body: object


@dataclass(frozen=True)
class Case:
    scrut: object
    branches: tuple
    default: Default | None = None


@dataclass(frozen=True)
class CmdClause:
    command: str
    vars: tuple
    cont: str
    body: object


@dataclass(frozen=True)
class Handle:
    """``handle^Δ_G m with clauses | x ↦ n'``.

    ``value_type`` is A', the type of the handled computation's value; it is
    needed to annotate captured continuations.
    """

    adj: Adjustment
    peg: Peg
    scrut: object
    clauses: tuple
    ret_var: str
    ret_body: object
    value_type: object


@dataclass(frozen=True)
class Let:
    name: str
    poly: PolyType
    bound: object
    body: object


@dataclass(frozen=True)
class RecBinding:
    name: str
    poly: PolyType
    lam: Lam


@dataclass(frozen=True)
class LetRec:
    bindings: tuple
    body: object


USES = (Var, PolyApp, Cmd, App, Annot)

INT_ADD_NAME = "intAdd"
INT_ADD_TYPE = PolyType(
    (EffectVar("ε"),),
    ThunkType(CoreCompType((INT, INT), Peg(Ability(EffectVar("ε")), INT))),
)


# ---------------------------------------------------------------------------
# Free variables, cached on the (immutable) nodes


def _cached(t, slot, compute):
    d = t.__dict__
    if slot not in d:
        object.__setattr__(t, slot, frozenset(compute(t)))
    return d[slot]


def free_names(t) -> frozenset:
    """Free term variables, monomorphic and polymorphic alike."""
    if t is None:
        return frozenset()
    return _cached(t, "_fv", _free_names)


def _free_names(t):
    match t:
        case Var(x):
            return {x}
        case PolyApp(f, _):
            return set() if f == INT_ADD_NAME else {f}
        case Cmd() | Lit():
            return set()
        case App(h, args):
            return free_names(h).union(*(free_names(a) for a in args))
        case Annot(n, _):
            return free_names(n)
        case Ctor(_, args):
            return set().union(*(free_names(a) for a in args))
        case Lam(params, body):
            return free_names(body) - set(params)
        case Case(scrut, branches, default):
            out = set(free_names(scrut))
            for b in branches:
                out |= free_names(b.body) - set(getattr(b, "vars", ()))
            if default is not None:
                out |= free_names(default.body) - {default.var}
            return out
        case Handle(_, _, scrut, clauses, x, ret, _):
            out = set(free_names(scrut)) | (free_names(ret) - {x})
            for c in clauses:
                out |= free_names(c.body) - set(c.vars) - {c.cont}
            return out
        case Let(f, _, bound, body):
            return free_names(bound) | (free_names(body) - {f})
        case LetRec(bindings, body):
            names = {b.name for b in bindings}
            out = set(free_names(body))
            for b in bindings:
                out |= free_names(b.lam)
            return out - names
    raise TypeError(f"not a core term: {t!r}")


def free_tvars(t) -> frozenset:
    """Keys ``("v", X)`` / ``("e", E)`` of type variables free in a term."""
    if t is None:
        return frozenset()
    return _cached(t, "_ftv", _free_tvars)


def _tkeys(*types):
    return {("v", v.name) if isinstance(v, TypeVar) else ("e", v.name)
            for ty in types for v in ordered_free_vars(ty)}


def _free_tvars(t):
    match t:
        case Var() | Cmd() | Lit():
            return set()
        case PolyApp(_, targs):
            return _tkeys(*targs)
        case App(h, args):
            return free_tvars(h).union(*(free_tvars(a) for a in args))
        case Annot(n, a):
            return free_tvars(n) | _tkeys(a)
        case Ctor(_, args):
            return set().union(*(free_tvars(a) for a in args))
        case Lam(_, body):
            return free_tvars(body)
        case Case(scrut, branches, default):
            out = set(free_tvars(scrut)).union(*(free_tvars(b.body) for b in branches))
            return out | (free_tvars(default.body) if default is not None else set())
        case Handle(adj, peg, scrut, clauses, _, ret, a1):
            out = free_tvars(scrut) | free_tvars(ret) | _tkeys(adj, peg, a1)
            return out.union(*(free_tvars(c.body) for c in clauses))
        case Let(_, p, bound, body):
            return _tkeys(p) | (free_tvars(bound) - _binder_keys(p)) | free_tvars(body)
        case LetRec(bindings, body):
            out = set(free_tvars(body))
            for b in bindings:
                out |= _tkeys(b.poly) | (free_tvars(b.lam) - _binder_keys(b.poly))
            return out
    raise TypeError(f"not a core term: {t!r}")


def _binder_keys(p: PolyType) -> set:
    return {("v", b.name) if isinstance(b, TypeVar) else ("e", b.name) for b in p.binders}


# ---------------------------------------------------------------------------
# Type translation


def core_type(t):
    """⟦A⟧ on value types and type arguments."""
    match t:
        case DataType(name, args):
            return DataType(name, tuple(core_type(a) for a in args))
        case ThunkType(CompType() as c):
            return ThunkType(core_comp(c))
        case ThunkType(CoreCompType(args, peg)):
            return ThunkType(CoreCompType(tuple(core_type(a) for a in args), core_peg(peg)))
        case Ability(head, insts):
            return Ability(head, tuple(core_instance(i) for i in insts))
        case PolyType(binders, body):
            return PolyType(binders, core_type(body))
    return t


def core_instance(i: Instance) -> Instance:
    return Instance(i.iface, tuple(core_type(a) for a in i.args))


def core_adjustment(d: Adjustment) -> Adjustment:
    return Adjustment(tuple(core_instance(i) for i in d.instances))


def core_peg(g: Peg) -> Peg:
    return Peg(core_type(g.ability), core_type(g.vtype))


def core_port(p: Port, sigma: Ability):
    """⟦⟨Δ⟩A⟧(Σ) = {[Σ ⊕ Δ]A}."""
    return ThunkType(CoreCompType((), Peg(apply_adjustment(sigma, core_adjustment(p.adj)), core_type(p.vtype))))


def core_comp(c: CompType) -> CoreCompType:
    """⟦T̄ → [Σ]A⟧: each port is given the peg's ability as ambient."""
    peg = core_peg(c.peg)
    return CoreCompType(tuple(core_port(p, peg.ability) for p in c.ports), peg)


# ---------------------------------------------------------------------------
# Type equality up to shadowing


@lru_cache(maxsize=None)
def canonical(t):
    """Normal form in which every ability and adjustment is shadow-normalized."""
    match t:
        case DataType(name, args):
            return DataType(name, tuple(canonical(a) for a in args))
        case ThunkType(c):
            return ThunkType(canonical(c))
        case CoreCompType(args, peg):
            return CoreCompType(tuple(canonical(a) for a in args), canonical(peg))
        case CompType(ports, peg):
            return CompType(tuple(canonical(p) for p in ports), canonical(peg))
        case Port(adj, vt):
            return Port(canonical(adj), canonical(vt))
        case Peg(ab, vt):
            return Peg(canonical(ab), canonical(vt))
        case Ability(head, insts):
            return Ability(head, _sorted_instances(insts))
        case Adjustment(insts):
            return Adjustment(_sorted_instances(insts))
        case Instance(name, args):
            return Instance(name, tuple(canonical(a) for a in args))
    return t


def _sorted_instances(insts) -> tuple:
    # one instance per interface survives, so order carries no meaning
    return tuple(sorted((canonical(i) for i in normalize_instances(insts)), key=lambda i: i.iface))


def type_eq(a, b) -> bool:
    return a == b or canonical(a) == canonical(b)


def ability_eq(a: Ability, b: Ability) -> bool:
    return a == b or canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Checking


class CoreChecker:
    """Core type checker. With ``memo``, closed subterms already accepted at the
    same ambient and type are not checked again; nodes are immutable and kept
    alive by the memo, so identity is a sound key."""

    def __init__(self, decls, memo: dict | None = None):
        self.decls = decls
        self.memo = memo

    def fail(self, msg):
        raise CoreTypeError(msg)

    def fields(self, dt: DataType, k: str) -> tuple:
        return tuple(core_type(a) for a in self.decls.ctor_fields(dt, k))

    def lookup_poly(self, env, name):
        entry = env.get(name)
        if entry is None and name == INT_ADD_NAME:
            return INT_ADD_TYPE
        if entry is None or entry[0] != "poly":
            self.fail(f"unbound polymorphic variable {name}")
        return entry[1]

    def infer(self, env: dict, amb: Ability, m):
        match m:
            case Var(x):
                entry = env.get(x)
                if entry is None:
                    self.fail(f"unbound variable {x}")
                if entry[0] != "mono":
                    self.fail(f"polymorphic variable {x} used without type arguments")
                return entry[1]
            case PolyApp(f, targs):
                p = self.lookup_poly(env, f)
                if len(p.binders) != len(targs):
                    self.fail(f"{f} expects {len(p.binders)} type argument(s), given {len(targs)}")
                for b, a in zip(p.binders, targs):
                    if isinstance(b, EffectVar) != isinstance(a, Ability):
                        self.fail(f"type argument kind mismatch for {f}")
                return instantiate(p, targs)
            case Cmd(c):
                try:
                    args, res = lookup_command(self.decls, amb, c)
                except NotFound:
                    self.fail(f"command {c} not in ambient [{show_ability(amb)}]")
                return ThunkType(CoreCompType(tuple(core_type(a) for a in args), Peg(amb, core_type(res))))
            case App(head, args):
                t = self.infer(env, amb, head)
                if not (isinstance(t, ThunkType) and isinstance(t.comp, CoreCompType)):
                    self.fail(f"applying a non-function of type {show_type(t)}")
                c = t.comp
                if not ability_eq(c.peg.ability, amb):
                    self.fail(f"function ability [{show_ability(c.peg.ability)}] differs from "
                              f"ambient [{show_ability(amb)}]")
                if len(c.args) != len(args):
                    self.fail(f"function expects {len(c.args)} argument(s), given {len(args)}")
                for a, n in zip(c.args, args):
                    self.check(env, amb, n, a)
                return c.peg.vtype
            case Annot(n, a):
                self.check(env, amb, n, a)
                return a
        self.fail(f"not a use: {type(m).__name__}")

    def check(self, env: dict, amb: Ability, n, expected):
        if self.memo is None or free_names(n):
            return self._check(env, amb, n, expected)
        entry = self.memo.get(id(n))
        key = (amb, expected)
        if entry is not None and key in entry[1]:
            return
        self._check(env, amb, n, expected)
        if entry is None:
            entry = self.memo[id(n)] = (n, set())
        entry[1].add(key)

    def _check(self, env: dict, amb: Ability, n, expected):
        match n:
            case Var() | PolyApp() | Cmd() | App() | Annot():
                t = self.infer(env, amb, n)
                if not type_eq(t, expected):
                    self.fail(f"expected {show_type(expected)}, found {show_type(t)}")
            case Ctor(k, args):
                owner = self.decls.ctor_owner.get(k)
                if not (isinstance(expected, DataType) and expected.name == owner):
                    self.fail(f"constructor {k} at type {show_type(expected)}")
                fs = self.fields(expected, k)
                if len(fs) != len(args):
                    self.fail(f"constructor {k} arity")
                for a, f in zip(args, fs):
                    self.check(env, amb, a, f)
            case Lit(v):
                want = INT if isinstance(v, int) else CHAR
                if expected != want:
                    self.fail(f"literal at type {show_type(expected)}")
            case Lam(params, body):
                if not (isinstance(expected, ThunkType) and isinstance(expected.comp, CoreCompType)):
                    self.fail(f"function at non-function type {show_type(expected)}")
                c = expected.comp
                if len(c.args) != len(params):
                    self.fail(f"function has {len(params)} parameter(s) but type has {len(c.args)}")
                env2 = {**env, **{x: ("mono", a) for x, a in zip(params, c.args)}}
                self.check(env2, c.peg.ability, body, c.peg.vtype)
            case Case(scrut, branches, default):
                t = self.infer(env, amb, scrut)
                if not isinstance(t, DataType):
                    self.fail(f"case on non-data type {show_type(t)}")
                decl = self.decls.datas[t.name]
                if decl.literal:
                    if default is None:
                        self.fail("literal case needs a default branch")
                    for b in branches:
                        if not isinstance(b, LitBranch):
                            self.fail("non-literal branch in literal case")
                        if (INT if isinstance(b.value, int) else CHAR) != t:
                            self.fail("literal branch of the wrong type")
                        self.check(env, amb, b.body, expected)
                    self.check({**env, default.var: ("mono", t)}, amb, default.body, expected)
                    return
                if default is not None:
                    self.fail("data case with a default branch")
                names = [b.ctor for b in branches]
                if sorted(names) != sorted(k.name for k in decl.ctors):
                    self.fail(f"case branches {names} do not match the constructors of {t.name}")
                for b in branches:
                    fs = self.fields(t, b.ctor)
                    if len(fs) != len(b.vars):
                        self.fail(f"branch {b.ctor} binds {len(b.vars)} variable(s)")
                    env2 = {**env, **{x: ("mono", a) for x, a in zip(b.vars, fs)}}
                    self.check(env2, amb, b.body, expected)
            case Handle(adj, peg, scrut, clauses, x, ret, a1):
                if not ability_eq(peg.ability, amb) or not type_eq(peg.vtype, expected):
                    self.fail(f"handler annotation [{show_ability(peg.ability)}]{show_type(peg.vtype)} "
                              f"differs from [{show_ability(amb)}]{show_type(expected)}")
                inner = apply_adjustment(amb, adj)
                t = self.infer(env, inner, scrut)
                if not type_eq(t, a1):
                    self.fail(f"handled computation has type {show_type(t)}, annotation says {show_type(a1)}")
                handled = handled_commands(self.decls, adj)
                names = [cl.command for cl in clauses]
                if sorted(names) != sorted(handled):
                    self.fail(f"handler clauses {names} do not match adjustment {show_adjustment(adj)}")
                for cl in clauses:
                    _, args, res = handled[cl.command]
                    if len(args) != len(cl.vars):
                        self.fail(f"clause for {cl.command} binds {len(cl.vars)} argument(s)")
                    kont = ThunkType(CoreCompType((core_type(res),), Peg(inner, a1)))
                    env2 = {**env, **{v: ("mono", core_type(a)) for v, a in zip(cl.vars, args)},
                            cl.cont: ("mono", kont)}
                    self.check(env2, amb, cl.body, expected)
                self.check({**env, x: ("mono", a1)}, amb, ret, expected)
            case Let(f, poly, bound, body):
                self.check(env, amb, bound, poly.body)
                self.check({**env, f: ("poly", poly)}, amb, body, expected)
            case LetRec(bindings, body):
                env2 = {**env, **{b.name: ("poly", b.poly) for b in bindings}}
                for b in bindings:
                    if not isinstance(b.lam, Lam):
                        self.fail(f"recursive binding {b.name} is not a function")
                    self.check(env2, amb, b.lam, b.poly.body)
                if body is not None:
                    self.check(env2, amb, body, expected)
            case _:
                self.fail(f"not a construction: {type(n).__name__}")


def check_core(decls, term, expected, ambient: Ability, env: dict | None = None, memo: dict | None = None):
    CoreChecker(decls, memo).check(env or {}, ambient, term, expected)


# ---------------------------------------------------------------------------
# Printing


def show_lit(v) -> str:
    if isinstance(v, int):
        return str(v)
    esc = {"\b": "\\b", "\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0", "\\": "\\\\", "'": "\\'"}
    return "'" + esc.get(v, v) + "'"


def show_targ(a) -> str:
    return _show_arg(a)


def _atom(n) -> bool:
    return isinstance(n, (Var, Cmd, Lit, Annot)) or (isinstance(n, (Ctor, PolyApp)) and not
                                                     (n.args if isinstance(n, Ctor) else n.targs))


def _inline(n) -> str:
    s = show_core(n)
    if "\n" in s or not _atom(n):
        return "(" + s + ")"
    return s


def show_core(n, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    match n:
        case Var(x) | Cmd(x):
            return x
        case PolyApp(f, targs):
            return " ".join([f] + [show_targ(a) for a in targs])
        case App(head, ()):
            return _inline(head) + "!"
        case App(head, args):
            return " ".join([_inline(head)] + [_inline(a) for a in args])
        case Annot(t, a):
            return f"({show_core(t, indent)} : {show_type(a)})"
        case Ctor(k, args):
            return " ".join([k] + [_inline(a) for a in args])
        case Lit(v):
            return show_lit(v)
        case Lam((), body):
            return "{" + show_core(body, indent) + "}"
        case Lam(params, body):
            return "\\" + " ".join(params) + ". " + show_core(body, indent)
        case Case(scrut, branches, default):
            lines = [f"case {_inline(scrut)} of"]
            for b in branches:
                head = " ".join([b.ctor] + list(b.vars)) if isinstance(b, Branch) else show_lit(b.value)
                lines.append(f"{pad}{head} -> {show_core(b.body, indent + 1)}")
            if default is not None:
                lines.append(f"{pad}{default.var} -> {show_core(default.body, indent + 1)}")
            return "\n".join(lines)
        case Handle(adj, peg, scrut, clauses, x, ret, _):
            lines = [f"handle^{{{show_adjustment(adj)}}}_{{{show_peg(peg)}}} {_inline(scrut)} with"]
            for cl in clauses:
                pat = " ".join([cl.command] + list(cl.vars))
                lines.append(f"{pad}<{pat} -> {cl.cont}> -> {show_core(cl.body, indent + 1)}")
            lines.append(f"{pad}{x} -> {show_core(ret, indent + 1)}")
            return "\n".join(lines)
        case Let(f, poly, bound, body):
            return (f"let {f} : {show_type(poly)} = {show_core(bound, indent + 1)} in\n"
                    f"{'  ' * indent}{show_core(body, indent)}")
        case LetRec(bindings, body):
            lines = ["letrec"]
            for b in bindings:
                lines.append(f"{pad}{b.name} : {show_type(b.poly)}")
                lines.append(f"{pad}  = {show_core(b.lam, indent + 2)}")
            if body is not None:
                lines.append(f"{'  ' * indent}in {show_core(body, indent)}")
            return "\n".join(lines)
    raise TypeError(f"not a core term: {n!r}")
