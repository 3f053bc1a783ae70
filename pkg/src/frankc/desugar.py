"""Turn a surface program into declarations plus one mutually recursive letrec.

Implements the notational conventions: omitted adjustments are the identity,
omitted ability heads are the signature's implicit effect variable, data and
interface definitions mentioning that variable gain it as first parameter,
``m!`` is nullary application, ``a; b`` is ``snd a b``, ``a + b`` is
``intAdd a b`` and string literals are lists of characters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import parser as P
from .errors import DesugarError
from .syntax import (
    EMPTY, Ability, Adjustment, App, Binding, Clause, Cmd, CommandDecl, CompType, Ctor,
    CtorDecl, DataDecl, DataType, Declarations, EffectVar, Instance, InterfaceDecl, LetRec,
    Lit, PCatchAll, PCtor, PLit, Port, Peg, PolyType, PRequest, PVar, Suspend, ThunkType,
    TypeVar, Var, ordered_free_vars, pattern_vars,
)

BUILTIN_VALUES = ("intAdd",)
WILD_PREFIX = "_w"


@dataclass
class Program:
    decls: Declarations
    letrec: LetRec

    @property
    def bindings(self):
        return self.letrec.bindings

    def binding(self, name: str) -> Binding:
        return next(b for b in self.letrec.bindings if b.name == name)


class _Desugarer:
    def __init__(self, items):
        self.items = items
        self.counter = itertools.count(1)
        self.datas = {i.name: i for i in items if isinstance(i, P.SData)}
        self.ifaces = {i.name: i for i in items if isinstance(i, P.SInterface)}
        for name in self.datas:
            if name in self.ifaces or name in ("Int", "Char"):
                raise DesugarError(f"type name {name} is declared twice", self.datas[name].span)
        self.implicit = self._implicit_effect_params()
        self.decls: Declarations | None = None

    def fresh_eps(self) -> str:
        return f"ε{next(self.counter)}"

    def fresh_wild(self) -> str:
        return f"{WILD_PREFIX}{next(self.counter)}"

    # -- implicit effect parameters --------------------------------------
    def _arity(self, name: str) -> int | None:
        if name in self.datas:
            return len(self.datas[name].params)
        if name in self.ifaces:
            return len(self.ifaces[name].params)
        return None

    def _mentions_eps(self, t, implicit: set) -> bool:
        match t:
            case P.STName(name, args):
                if name in implicit and len(args) == self._arity(name):
                    return True
                return any(self._mentions_eps(a, implicit) for a in args)
            case P.SThunk(comp):
                return self._mentions_eps(comp, implicit)
            case P.SComp(ports, peg):
                return any(self._mentions_eps(p, implicit) for p in ports) or self._mentions_eps(peg, implicit)
            case P.SPort(adj, vt):
                return any(self._mentions_eps(i, implicit) for i in adj or ()) or self._mentions_eps(vt, implicit)
            case P.SPeg(ab, vt):
                if ab is None or not ab.closed:
                    return True
                return self._mentions_eps(ab, implicit) or self._mentions_eps(vt, implicit)
            case P.SAbility(closed, insts):
                return not closed or any(self._mentions_eps(i, implicit) for i in insts)
            case P.SInst(name, args):
                if name in implicit and len(args) == self._arity(name):
                    return True
                return any(self._mentions_eps(a, implicit) for a in args)
        return False

    def _implicit_effect_params(self) -> set:
        implicit: set = set()
        changed = True
        while changed:
            changed = False
            for d in self.datas.values():
                if d.name not in implicit and any(
                    self._mentions_eps(t, implicit) for _, ts in d.ctors for t in ts
                ):
                    implicit.add(d.name)
                    changed = True
            for i in self.ifaces.values():
                if i.name not in implicit and any(
                    self._mentions_eps(t, implicit) for _, args, res in i.commands for t in (*args, res)
                ):
                    implicit.add(i.name)
                    changed = True
        return implicit

    # -- types --------------------------------------------------------------
    def vtype(self, t, eps: str, tvars: set | None, span=None):
        """``tvars`` None means unknown uppercase names become type variables."""
        match t:
            case P.STName(name, args):
                if name in self.datas or name in ("Int", "Char"):
                    conv = [self.targ(a, eps, tvars, span) for a in args]
                    arity = self._arity(name) if name in self.datas else 0
                    if name in self.implicit and len(conv) == arity:
                        conv.insert(0, Ability(EffectVar(eps)))
                    expected = arity + (1 if name in self.implicit else 0)
                    if len(conv) != expected:
                        raise DesugarError(
                            f"type {name} expects {expected} argument(s), got {len(conv)}", span)
                    return DataType(name, tuple(conv))
                if name in self.ifaces:
                    raise DesugarError(f"interface {name} used as a value type", span)
                if args:
                    raise DesugarError(f"unknown type constructor {name}", span)
                if tvars is not None and name not in tvars:
                    raise DesugarError(f"unbound type variable {name}", span)
                return TypeVar(name)
            case P.SThunk(comp):
                return ThunkType(self.comp(comp, eps, tvars, span))
        raise DesugarError(f"expected a value type, found {t!r}", span)

    def targ(self, a, eps, tvars, span):
        if isinstance(a, P.SAbility):
            return self.ability(a, eps, tvars, span)
        return self.vtype(a, eps, tvars, span)

    def instance(self, i: P.SInst, eps, tvars, span) -> Instance:
        if i.name not in self.ifaces:
            raise DesugarError(f"unknown interface {i.name}", span)
        args = [self.targ(a, eps, tvars, span) for a in i.args]
        arity = self._arity(i.name)
        if i.name in self.implicit and len(args) == arity:
            args.insert(0, Ability(EffectVar(eps)))
        expected = arity + (1 if i.name in self.implicit else 0)
        if len(args) != expected:
            raise DesugarError(f"interface {i.name} expects {expected} argument(s), got {len(args)}", span)
        return Instance(i.name, tuple(args))

    def ability(self, a: P.SAbility, eps, tvars, span) -> Ability:
        head = EMPTY if a.closed else EffectVar(eps)
        return Ability(head, tuple(self.instance(i, eps, tvars, span) for i in a.instances))

    def comp(self, c: P.SComp, eps, tvars, span) -> CompType:
        ports = []
        for p in c.ports:
            adj = Adjustment(tuple(self.instance(i, eps, tvars, span) for i in p.adj or ()))
            ports.append(Port(adj, self.vtype(p.vtype, eps, tvars, span)))
        ab = Ability(EffectVar(eps)) if c.peg.ability is None else self.ability(c.peg.ability, eps, tvars, span)
        return CompType(tuple(ports), Peg(ab, self.vtype(c.peg.vtype, eps, tvars, span)))

    # -- declarations ---------------------------------------------------------
    def declarations(self) -> Declarations:
        datas, ifaces = [], []
        for d in self.datas.values():
            eps = self.fresh_eps()
            params = tuple(TypeVar(p) for p in d.params)
            tvars = set(d.params)
            if d.name in self.implicit:
                params = (EffectVar(eps),) + params
            ctors = tuple(
                CtorDecl(k, tuple(self.vtype(t, eps, tvars, d.span) for t in ts)) for k, ts in d.ctors
            )
            datas.append(DataDecl(d.name, params, ctors))
        for i in self.ifaces.values():
            eps = self.fresh_eps()
            params = tuple(TypeVar(p) for p in i.params)
            tvars = set(i.params)
            if i.name in self.implicit:
                params = (EffectVar(eps),) + params
            cmds = tuple(
                CommandDecl(c, tuple(self.vtype(t, eps, tvars, i.span) for t in args),
                            self.vtype(res, eps, tvars, i.span))
                for c, args, res in i.commands
            )
            ifaces.append(InterfaceDecl(i.name, params, cmds))
        try:
            return Declarations(datas, ifaces)
        except Exception as e:  # DeclarationError carries the message
            raise DesugarError(str(e)) from e

    def signature(self, sig: P.SSignature) -> PolyType:
        eps = self.fresh_eps()
        body = ThunkType(self.comp(sig.comp, eps, None, sig.span))
        fvs = ordered_free_vars(body)
        binders = [v for v in fvs if isinstance(v, EffectVar)] + [v for v in fvs if isinstance(v, TypeVar)]
        return PolyType(tuple(binders), body)

    # -- terms ----------------------------------------------------------------
    def expr(self, e, scope: frozenset):
        d = self.decls
        match e:
            case P.SIdent(name, span):
                if name in scope:
                    return Var(name, span)
                if name in d.ctor_owner:
                    if d.ctor_decl(name).args:
                        raise DesugarError(f"constructor {name} must be fully applied", span)
                    return Ctor(name, (), span)
                if name in d.command_owner:
                    return Cmd(name, span)
                return Var(name, span)
            case P.SApp(head, args, span):
                conv = tuple(self.expr(a, scope) for a in args)
                if isinstance(head, P.SIdent) and head.name not in scope and head.name in d.ctor_owner:
                    arity = len(d.ctor_decl(head.name).args)
                    if arity != len(conv):
                        raise DesugarError(
                            f"constructor {head.name} expects {arity} argument(s), got {len(conv)}", span)
                    return Ctor(head.name, conv, span)
                return App(self.expr(head, scope), conv, span)
            case P.SBang(inner, span):
                h = self.expr(inner, scope)
                if isinstance(h, (Ctor, Lit)):
                    raise DesugarError("only uses and suspensions can be forced", span)
                return App(h, (), span)
            case P.SSeq(a, b, span):
                return App(Var("snd", span), (self.expr(a, scope), self.expr(b, scope)), span)
            case P.SPlus(a, b, span):
                return App(Var("intAdd", span), (self.expr(a, scope), self.expr(b, scope)), span)
            case P.SLit(v, span):
                return Lit(v, span)
            case P.SString(s, span):
                return self.string(s, span)
            case P.SSuspend(clauses, _, span):
                return Suspend(tuple(self.clause(c, scope) for c in clauses), span)
        raise DesugarError(f"cannot desugar {e!r}")

    def string(self, s: str, span):
        out = Ctor("nil", (), span)
        for ch in reversed(s):
            out = Ctor("cons", (Lit(ch, span), out), span)
        return out

    def clause(self, c: P.SClause, scope):
        pats = tuple(self.pattern(p) for p in c.patterns)
        names = {v for p in pats for v in pattern_vars(p)}
        return Clause(pats, self.expr(c.body, scope | names), c.span)

    def pattern(self, p):
        d = self.decls
        match p:
            case P.SPIdent(name, span):
                if name in d.ctor_owner:
                    if d.ctor_decl(name).args:
                        raise DesugarError(f"constructor {name} must be fully applied in a pattern", span)
                    return PCtor(name, (), span)
                return PVar(name, span)
            case P.SPWild(span):
                return PVar(self.fresh_wild(), span)
            case P.SPCtor(name, args, span):
                if name not in d.ctor_owner:
                    raise DesugarError(f"unknown constructor {name}", span)
                if len(d.ctor_decl(name).args) != len(args):
                    raise DesugarError(f"constructor {name} expects {len(d.ctor_decl(name).args)} argument(s)", span)
                return PCtor(name, tuple(self.pattern(a) for a in args), span)
            case P.SPLit(v, span):
                return PLit(v, span)
            case P.SPString(s, span):
                out = PCtor("nil", (), span)
                for ch in reversed(s):
                    out = PCtor("cons", (PLit(ch, span), out), span)
                return out
            case P.SPRequest(c, args, cont, span):
                if c not in d.command_owner:
                    raise DesugarError(f"unknown command {c} in request pattern", span)
                z = cont if cont is not None else self.fresh_wild()
                return PRequest(c, tuple(self.pattern(a) for a in args), z, span)
            case P.SPCatchAll(name, span):
                return PCatchAll(name if name is not None else self.fresh_wild(), span)
        raise DesugarError(f"cannot desugar pattern {p!r}")

    # -- program ----------------------------------------------------------------
    def run(self) -> Program:
        self.decls = self.declarations()
        groups: list[tuple[P.SSignature, list[P.SEquation]]] = []
        for it in self.items:
            if isinstance(it, P.SSignature):
                if any(g[0].name == it.name for g in groups):
                    raise DesugarError(f"{it.name} is defined twice", it.span)
                if it.name in self.decls.command_owner or it.name in self.decls.ctor_owner:
                    raise DesugarError(f"definition {it.name} clashes with a command or constructor", it.span)
                groups.append((it, []))
            elif isinstance(it, P.SEquation):
                if not groups or groups[-1][0].name != it.name:
                    raise DesugarError(f"equation for {it.name} without a preceding signature", it.span)
                groups[-1][1].append(it)
        bindings = []
        for sig, eqs in groups:
            if not eqs:
                raise DesugarError(f"signature for {sig.name} has no equations", sig.span)
            widths = {len(e.patterns) for e in eqs}
            if len(widths) != 1:
                raise DesugarError(f"equations for {sig.name} have differing numbers of patterns", eqs[0].span)
            poly = self.signature(sig)
            clauses = []
            for e in eqs:
                pats = tuple(self.pattern(p) for p in e.patterns)
                names = {v for p in pats for v in pattern_vars(p)}
                clauses.append(Clause(pats, self.expr(e.body, frozenset(names)), e.span))
            bindings.append(Binding(sig.name, poly, Suspend(tuple(clauses), sig.span), sig.span))
        body = None
        if any(b.name == "main" for b in bindings):
            body = App(Var("main"), ())
        return Program(self.decls, LetRec(tuple(bindings), body))


def desugar(surface: P.SurfaceProgram) -> Program:
    return _Desugarer(surface.items).run()


def desugar_source(source: str) -> Program:
    return desugar(P.parse_source(source))
