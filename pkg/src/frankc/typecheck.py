"""Bidirectional effect type checking against an ambient ability.

Implicit instantiation of polymorphic variables is realised with fresh
meta-variables, solved by first-order unification of value types and by
shadow-aware unification of abilities.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    AbilityMismatch, AmbiguousAbility, AmbiguousInstantiation, ArityMismatch,
    CommandNotInAdjustment, ConstructorMismatch, CoverageError, DuplicatePatternVariable,
    FrankTypeError, NotAThunk, NotASuspension, NotFound, OccursError, UnboundVariable,
    UnificationError,
)
from .syntax import (
    EMPTY, IDENTITY, Ability, AbilityMeta, Adjustment, App, Binding, CHAR, Clause, Cmd, CompType,
    Ctor, DataType, EffectVar, INT, Instance, Let, LetRec, Lit, PCatchAll, PCtor, PLit, Peg, Port,
    PolyType, PRequest, PVar, Suspend, ThunkType, TypeMeta, TypeVar, Var, apply_adjustment,
    handled_commands, instantiation_map, lookup_command, normalize_instances, show_ability,
    show_type, subst_type,
)

INT_ADD = PolyType(
    (EffectVar("ε"),),
    ThunkType(CompType((Port(IDENTITY, INT), Port(IDENTITY, INT)), Peg(Ability(EffectVar("ε")), INT))),
)
BUILTIN_ENV = {"intAdd": ("poly", INT_ADD)}


@dataclass
class TypedProgram:
    """A checked program plus everything elaboration needs.

    ``instantiations`` maps ``id`` of each polymorphic variable occurrence to
    its solved type arguments; ``comp_types`` maps ``id`` of each suspension
    to the computation type it was checked at.
    """

    program: object
    top_ability: Ability
    instantiations: dict
    comp_types: dict
    main_type: object
    command_types: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    ambient_trace: list = field(default_factory=list)


class Checker:
    def __init__(self, decls, trace_ambient: bool = False):
        self.decls = decls
        self.solutions: dict[int, object] = {}
        self.order: list[int] = []
        self.ids = itertools.count()
        self.instantiations: dict[int, tuple] = {}
        self.comp_types: dict[int, CompType] = {}
        self.command_types: dict[int, ThunkType] = {}
        self.warnings: list[str] = []
        self.trace_ambient = trace_ambient
        self.ambient_trace: list = []

    # -- metas --------------------------------------------------------------
    def fresh_type(self) -> TypeMeta:
        i = next(self.ids)
        self.order.append(i)
        return TypeMeta(i)

    def fresh_ability(self) -> Ability:
        i = next(self.ids)
        self.order.append(i)
        return Ability(AbilityMeta(i))

    def fresh_for(self, binder):
        return self.fresh_type() if isinstance(binder, TypeVar) else self.fresh_ability()

    def zonk(self, t):
        match t:
            case TypeMeta(i):
                sol = self.solutions.get(i)
                return t if sol is None else self.zonk(sol)
            case Ability(AbilityMeta(i), insts) if i in self.solutions:
                sol = self.solutions[i]
                return self.zonk(Ability(sol.head, sol.instances + insts))
            case Ability(head, insts):
                return Ability(head, tuple(self.zonk(x) for x in insts))
            case DataType(name, args):
                return DataType(name, tuple(self.zonk(a) for a in args))
            case ThunkType(c):
                return ThunkType(self.zonk(c))
            case CompType(ports, peg):
                return CompType(tuple(self.zonk(p) for p in ports), self.zonk(peg))
            case Port(adj, vt):
                return Port(self.zonk(adj), self.zonk(vt))
            case Peg(ab, vt):
                return Peg(self.zonk(ab), self.zonk(vt))
            case Adjustment(insts):
                return Adjustment(tuple(self.zonk(x) for x in insts))
            case Instance(name, args):
                return Instance(name, tuple(self.zonk(a) for a in args))
        return t

    def metas_in(self, t) -> set:
        t = self.zonk(t)
        out = set()

        def go(x):
            match x:
                case TypeMeta(i):
                    out.add(i)
                case Ability(head, insts):
                    if isinstance(head, AbilityMeta):
                        out.add(head.id)
                    for y in insts:
                        go(y)
                case DataType(_, args) | Instance(_, args):
                    for y in args:
                        go(y)
                case ThunkType(c):
                    go(c)
                case CompType(ports, peg):
                    for p in ports:
                        go(p)
                    go(peg)
                case Port(adj, vt):
                    go(adj)
                    go(vt)
                case Peg(ab, vt):
                    go(ab)
                    go(vt)
                case Adjustment(insts):
                    for y in insts:
                        go(y)

        go(t)
        return out

    # -- unification ----------------------------------------------------------
    def bind(self, meta_id: int, sol):
        if meta_id in self.metas_in(sol):
            raise OccursError(f"occurs check: ?{meta_id} in {show_type(self.zonk(sol))}")
        self.solutions[meta_id] = sol

    def unify_types(self, a, b):
        a, b = self.zonk(a), self.zonk(b)
        if a == b:
            return
        if isinstance(a, TypeMeta):
            return self.bind(a.id, b)
        if isinstance(b, TypeMeta):
            return self.bind(b.id, a)
        match a, b:
            case DataType(n1, args1), DataType(n2, args2) if n1 == n2 and len(args1) == len(args2):
                for x, y in zip(args1, args2):
                    self.unify_args(x, y)
                return
            case ThunkType(c1), ThunkType(c2):
                return self.unify_comp(c1, c2)
        raise UnificationError(f"cannot match {show_type(a)} with {show_type(b)}")

    def unify_args(self, x, y):
        if isinstance(x, Ability) and isinstance(y, Ability):
            return self.unify_abilities(x, y)
        if isinstance(x, Ability) or isinstance(y, Ability):
            raise UnificationError("ability argument matched against value argument")
        self.unify_types(x, y)

    def unify_comp(self, c1: CompType, c2: CompType):
        if len(c1.ports) != len(c2.ports):
            raise UnificationError(
                f"computation types with {len(c1.ports)} and {len(c2.ports)} ports")
        for p1, p2 in zip(c1.ports, c2.ports):
            self.unify_adjustments(p1.adj, p2.adj)
            self.unify_types(p1.vtype, p2.vtype)
        self.unify_abilities(c1.peg.ability, c2.peg.ability)
        self.unify_types(c1.peg.vtype, c2.peg.vtype)

    def unify_adjustments(self, d1: Adjustment, d2: Adjustment):
        i1 = normalize_instances(d1.instances)
        i2 = normalize_instances(d2.instances)
        if [i.iface for i in i1] != [i.iface for i in i2]:
            raise UnificationError(
                f"adjustments differ: {' + '.join(['ι'] + [i.iface for i in i1])} vs "
                f"{' + '.join(['ι'] + [i.iface for i in i2])}")
        for x, y in zip(i1, i2):
            self.unify_instance_args(x, y)

    def unify_instance_args(self, x: Instance, y: Instance):
        for a, b in zip(x.args, y.args):
            self.unify_args(a, b)

    def unify_abilities(self, s1: Ability, s2: Ability):
        s1, s2 = self.zonk(s1), self.zonk(s2)
        i1 = {i.iface: i for i in normalize_instances(s1.instances)}
        i2 = {i.iface: i for i in normalize_instances(s2.instances)}
        flex1 = isinstance(s1.head, AbilityMeta)
        flex2 = isinstance(s2.head, AbilityMeta)
        mismatch = UnificationError(f"abilities differ: [{show_ability(s1)}] vs [{show_ability(s2)}]")
        if not flex1 and not flex2:
            if s1.head != s2.head or set(i1) != set(i2):
                raise mismatch
            for name in i1:
                self.unify_instance_args(i1[name], i2[name])
            return
        if flex1 and not flex2:
            return self._unify_flex_rigid(s1, i1, s2, i2, mismatch)
        if flex2 and not flex1:
            return self._unify_flex_rigid(s2, i2, s1, i1, mismatch)
        only1 = [i for i in normalize_instances(s1.instances) if i.iface not in i2]
        only2 = [i for i in normalize_instances(s2.instances) if i.iface not in i1]
        # Shared instances, right-to-left by interface id.
        for name in reversed(list(i1)):
            if name in i2:
                self.unify_instance_args(i1[name], i2[name])
        if s1.head == s2.head:
            if only1 or only2:
                raise mismatch
            return
        rest = self.fresh_ability()
        self.bind(s1.head.id, Ability(rest.head, tuple(only2)))
        self.bind(s2.head.id, Ability(rest.head, tuple(only1)))

    def _unify_flex_rigid(self, flex, iflex, rigid, irigid, mismatch):
        for name in iflex:
            if name not in irigid:
                raise mismatch
        for name in reversed(list(iflex)):
            try:
                self.unify_instance_args(iflex[name], irigid[name])
            except UnificationError as e:
                raise AmbiguousAbility(
                    f"instance {name} appears on both sides with clashing arguments: {e.message}") from e
        remainder = tuple(i for i in normalize_instances(rigid.instances) if i.iface not in iflex)
        self.bind(flex.head.id, Ability(rigid.head, remainder))

    # -- helpers ----------------------------------------------------------------
    def _ambient(self, rule, amb_in, amb_out):
        if self.trace_ambient and amb_in != amb_out:
            self.ambient_trace.append((rule, amb_in, amb_out))

    def instantiate_data(self, name: str) -> DataType:
        d = self.decls.datas[name]
        return DataType(name, tuple(self.fresh_for(p) for p in d.params))

    def resolved_ambient(self, amb: Ability, span) -> Ability:
        amb = self.zonk(amb)
        if isinstance(amb.head, AbilityMeta):
            raise AmbiguousAbility(f"ability [{show_ability(amb)}] is not determined here", span)
        return amb

    # -- uses -----------------------------------------------------------------
    def infer(self, env: dict, amb: Ability, m):
        span = getattr(m, "span", None)
        try:
            return self._infer(env, amb, m)
        except FrankTypeError as e:
            if e.span is None:
                e.span = span
            raise

    def _infer(self, env, amb, m):
        match m:
            case Var(name, span):
                entry = env.get(name) or BUILTIN_ENV.get(name)
                if entry is None:
                    raise UnboundVariable(f"unbound variable {name}", span)
                kind, t = entry
                if kind == "mono":
                    return t
                args = tuple(self.fresh_for(b) for b in t.binders)
                self.instantiations[id(m)] = args
                return subst_type(t.body, instantiation_map(t.binders, args))
            case Cmd(name, span):
                amb = self.resolved_ambient(amb, span)
                try:
                    args, res = lookup_command(self.decls, amb, name)
                except NotFound:
                    raise AbilityMismatch(
                        f"command {name} is not permitted by the ambient ability [{show_ability(amb)}]",
                        span) from None
                ports = tuple(Port(IDENTITY, a) for a in args)
                t = ThunkType(CompType(ports, Peg(amb, res)))
                self.command_types[id(m)] = t
                return t
            case App(head, args, span):
                t = self.zonk(self.infer(env, amb, head))
                if not (isinstance(t, ThunkType) and isinstance(t.comp, CompType)):
                    raise NotAThunk(f"cannot apply a value of type {show_type(t)}", span)
                comp = t.comp
                if len(comp.ports) != len(args):
                    raise ArityMismatch(
                        f"operator expects {len(comp.ports)} argument(s), given {len(args)}", span)
                try:
                    self.unify_abilities(comp.peg.ability, amb)
                except AmbiguousAbility:
                    raise
                except UnificationError as e:
                    raise AbilityMismatch(
                        f"operator requires ability [{show_ability(self.zonk(comp.peg.ability))}] but "
                        f"the ambient ability is [{show_ability(self.zonk(amb))}]", span) from e
                for port, arg in zip(comp.ports, args):
                    inner = apply_adjustment(amb, self.zonk(port.adj))
                    self._ambient("App", amb, inner)
                    self.check(env, inner, arg, port.vtype)
                return comp.peg.vtype
        raise FrankTypeError(f"not a use: {m!r}", getattr(m, "span", None))

    # -- constructions --------------------------------------------------------
    def check(self, env: dict, amb: Ability, n, expected):
        span = getattr(n, "span", None)
        try:
            self._check(env, amb, n, expected)
        except FrankTypeError as e:
            if e.span is None:
                e.span = span
            raise

    def _check(self, env, amb, n, expected):
        match n:
            case Var() | Cmd() | App():
                t = self.infer(env, amb, n)
                try:
                    self.unify_types(t, expected)
                except UnificationError as e:
                    raise type(e)(
                        f"expected {show_type(self.zonk(expected))}, found {show_type(self.zonk(t))}",
                        n.span) from e
            case Ctor(k, args, span):
                owner = self.decls.ctor_owner.get(k)
                exp = self.zonk(expected)
                if isinstance(exp, TypeMeta) and owner is not None:
                    self.unify_types(exp, self.instantiate_data(owner))
                    exp = self.zonk(exp)
                if not isinstance(exp, DataType) or owner != exp.name:
                    raise ConstructorMismatch(
                        f"constructor {k} does not build a value of type {show_type(exp)}", span)
                fields = self.decls.ctor_fields(exp, k)
                if len(fields) != len(args):
                    raise ArityMismatch(f"constructor {k} expects {len(fields)} argument(s)", span)
                for a, ft in zip(args, fields):
                    self.check(env, amb, a, ft)
            case Lit(v, span):
                self.unify_types(INT if isinstance(v, int) else CHAR, expected)
            case Suspend(_, span):
                exp = self.zonk(expected)
                if not (isinstance(exp, ThunkType) and isinstance(exp.comp, CompType)):
                    raise NotASuspension(f"a suspension cannot have type {show_type(exp)}", span)
                self.check_computation(env, n, exp.comp)
            case Let(name, poly, bound, body, span):
                self.check(env, amb, bound, poly.body)
                self.check({**env, name: ("poly", poly)}, amb, body, expected)
            case LetRec(bindings, body, span):
                env2 = dict(env)
                for b in bindings:
                    env2[b.name] = ("poly", b.poly)
                for b in bindings:
                    self.check_binding(env2, b)
                if body is not None:
                    self.check(env2, amb, body, expected)
            case _:
                raise FrankTypeError(f"not a construction: {n!r}", getattr(n, "span", None))

    def check_binding(self, env, b: Binding):
        body = b.poly.body
        if not (isinstance(body, ThunkType) and isinstance(body.comp, CompType)):
            raise NotASuspension(f"recursive definition {b.name} must have a computation type", b.span)
        try:
            self.check_computation(env, b.comp, body.comp)
        except FrankTypeError as e:
            e.message = f"in {b.name}: {e.message}"
            e.args = (e.message,)
            raise

    # -- computations and patterns ----------------------------------------------
    def check_computation(self, env, susp: Suspend, comp: CompType):
        comp = self.zonk(comp)
        self.comp_types[id(susp)] = comp
        if not susp.clauses and not comp.ports:
            raise ArityMismatch("a computation without ports needs a clause", susp.span)
        peg_amb = self.resolved_ambient(comp.peg.ability, susp.span)
        self._ambient("Comp", None, peg_amb)
        for clause in susp.clauses:
            if len(clause.patterns) != len(comp.ports):
                raise ArityMismatch(
                    f"clause has {len(clause.patterns)} pattern(s) but the type has "
                    f"{len(comp.ports)} port(s)", clause.span)
            bound: dict = {}
            for r, port in zip(clause.patterns, comp.ports):
                for x, t in self.check_pattern(r, port, peg_amb).items():
                    if x in bound:
                        raise DuplicatePatternVariable(f"pattern variable {x} bound twice", clause.span)
                    bound[x] = t
            env2 = {**env, **{x: ("mono", t) for x, t in bound.items()}}
            self.check(env2, peg_amb, clause.body, comp.peg.vtype)
        from .elaborate import check_coverage

        report = check_coverage(self.decls, self.zonk(comp), susp.clauses, self.zonk)
        if report.status == "incomplete":
            wit = " ".join(str(w) for w in report.witness)
            raise CoverageError(f"patterns are not exhaustive; missing: {wit}", susp.span, report.witness)
        if report.redundant:
            self.warnings.append(
                f"{susp.span or '?'}: warning: redundant clause(s) {sorted(report.redundant)}")

    def check_pattern(self, r, port: Port, amb: Ability) -> dict:
        span = getattr(r, "span", None)
        match r:
            case PRequest(c, ps, z):
                adj = self.zonk(port.adj)
                handled = handled_commands(self.decls, adj)
                if c not in handled:
                    raise CommandNotInAdjustment(
                        f"command {c} is not handled at a port with adjustment "
                        f"{' + '.join(['ι'] + [i.iface for i in adj.instances])}", span)
                _, args, res = handled[c]
                if len(args) != len(ps):
                    raise ArityMismatch(f"command {c} takes {len(args)} argument(s)", span)
                out: dict = {}
                for p, a in zip(ps, args):
                    self._merge(out, self.check_value_pattern(p, a), span)
                kont = ThunkType(CompType((Port(IDENTITY, res),), Peg(apply_adjustment(amb, adj), port.vtype)))
                self._merge(out, {z: kont}, span)
                return out
            case PCatchAll(x):
                adj = self.zonk(port.adj)
                return {x: ThunkType(CompType((), Peg(apply_adjustment(amb, adj), port.vtype)))}
        return self.check_value_pattern(r, port.vtype)

    def _merge(self, out: dict, new: dict, span):
        for x, t in new.items():
            if x in out:
                raise DuplicatePatternVariable(f"pattern variable {x} bound twice", span)
            out[x] = t

    def check_value_pattern(self, p, a) -> dict:
        span = getattr(p, "span", None)
        match p:
            case PVar(x):
                return {x: a}
            case PLit(v):
                self.unify_types(INT if isinstance(v, int) else CHAR, a)
                return {}
            case PCtor(k, ps):
                owner = self.decls.ctor_owner.get(k)
                exp = self.zonk(a)
                if isinstance(exp, TypeMeta) and owner is not None:
                    self.unify_types(exp, self.instantiate_data(owner))
                    exp = self.zonk(exp)
                if not isinstance(exp, DataType) or exp.name != owner:
                    raise ConstructorMismatch(f"pattern {k} cannot match type {show_type(exp)}", span)
                fields = self.decls.ctor_fields(exp, k)
                if len(fields) != len(ps):
                    raise ArityMismatch(f"constructor {k} expects {len(fields)} argument(s)", span)
                out: dict = {}
                for q, ft in zip(ps, fields):
                    self._merge(out, self.check_value_pattern(q, ft), span)
                return out
        raise ConstructorMismatch(f"a request or catch-all pattern cannot appear inside a value pattern", span)


def check_program(program, top_ability: Ability = Ability(EMPTY), trace_ambient: bool = False) -> TypedProgram:
    """Check the whole letrec (and ``main!`` when present) at ``top_ability``."""
    ch = Checker(program.decls, trace_ambient=trace_ambient)
    result = ch.fresh_type()
    ch.check({}, top_ability, program.letrec, result)
    insts = {}
    for key, args in ch.instantiations.items():
        z = tuple(ch.zonk(a) for a in args)
        if any(ch.metas_in(a) for a in z):
            raise AmbiguousInstantiation(
                "a polymorphic variable is used at a type that is never determined")
        insts[key] = z
    comps = {}
    for key, c in ch.comp_types.items():
        z = ch.zonk(c)
        if ch.metas_in(z):
            raise AmbiguousInstantiation("a suspension has an undetermined type")
        comps[key] = z
    cmds = {key: ch.zonk(t) for key, t in ch.command_types.items()}
    main_type = ch.zonk(result) if program.letrec.body is not None else None
    return TypedProgram(program, top_ability, insts, comps, main_type, cmds, ch.warnings, ch.ambient_trace)
