"""Unification-free validator for checked programs.

Re-derives every typing judgement of a program from the instantiations the
checker recorded, reading the rules declaratively: all types are known, so
each premise is a plain equality test.
"""

from __future__ import annotations

from frankc.syntax import (
    CHAR, INT, IDENTITY, Ability, AbilityMeta, Adjustment, App, Cmd, CompType, Ctor, DataType,
    Instance, Let, LetRec, Lit, PCatchAll, PCtor, PLit, Peg, Port, PRequest, PVar, Suspend,
    ThunkType, TypeMeta, TypeVar, Var, apply_adjustment, handled_commands, instantiation_map,
    lookup_command, subst_type,
)
from frankc.typecheck import BUILTIN_ENV


class Invalid(Exception):
    pass


def _survivors(instances):
    """Last instance per interface, as an order-insensitive mapping."""
    out = {}
    for i in instances:
        out[i.iface] = i
    return out


def ability_equal(a: Ability, b: Ability) -> bool:
    if a.head != b.head:
        return False
    sa, sb = _survivors(a.instances), _survivors(b.instances)
    return sa.keys() == sb.keys() and all(instance_equal(sa[k], sb[k]) for k in sa)


def instance_equal(a: Instance, b: Instance) -> bool:
    return a.iface == b.iface and len(a.args) == len(b.args) and all(
        type_equal(x, y) for x, y in zip(a.args, b.args))


def type_equal(a, b) -> bool:
    match a, b:
        case Ability(), Ability():
            return ability_equal(a, b)
        case DataType(n, xs), DataType(m, ys):
            return n == m and len(xs) == len(ys) and all(type_equal(x, y) for x, y in zip(xs, ys))
        case ThunkType(c), ThunkType(d):
            return comp_equal(c, d)
        case TypeVar(x), TypeVar(y):
            return x == y
    return False


def comp_equal(c: CompType, d: CompType) -> bool:
    if len(c.ports) != len(d.ports):
        return False
    for p, q in zip(c.ports, d.ports):
        if len(p.adj.instances) != len(q.adj.instances):
            return False
        if not all(instance_equal(x, y) for x, y in zip(p.adj.instances, q.adj.instances)):
            return False
        if not type_equal(p.vtype, q.vtype):
            return False
    return ability_equal(c.peg.ability, d.peg.ability) and type_equal(c.peg.vtype, d.peg.vtype)


def _no_metas(t):
    match t:
        case TypeMeta():
            return False
        case Ability(h, xs):
            return not isinstance(h, AbilityMeta) and all(_no_metas(x) for x in xs)
        case DataType(_, xs) | Instance(_, xs) | Adjustment(xs):
            return all(_no_metas(x) for x in xs)
        case ThunkType(c):
            return _no_metas(c)
        case CompType(ps, g):
            return all(_no_metas(p) for p in ps) and _no_metas(g)
        case Port(d, v) | Peg(d, v):
            return _no_metas(d) and _no_metas(v)
    return True


class Validator:
    def __init__(self, typed):
        self.typed = typed
        self.decls = typed.program.decls
        self.judgements = 0

    def fail(self, msg, node):
        raise Invalid(f"{msg} at {getattr(node, 'span', None)}")

    def infer(self, env, amb, m):
        self.judgements += 1
        match m:
            case Var(x):
                kind, t = env.get(x) or BUILTIN_ENV[x]
                if kind == "mono":
                    return t
                args = self.typed.instantiations.get(id(m))
                if args is None or len(args) != len(t.binders) or not all(_no_metas(a) for a in args):
                    self.fail(f"no complete instantiation for {x}", m)
                return subst_type(t.body, instantiation_map(t.binders, args))
            case Cmd(c):
                args, res = lookup_command(self.decls, amb, c)
                return ThunkType(CompType(tuple(Port(IDENTITY, a) for a in args), Peg(amb, res)))
            case App(h, args):
                t = self.infer(env, amb, h)
                if not isinstance(t, ThunkType) or len(t.comp.ports) != len(args):
                    self.fail("head is not an operator of the right arity", m)
                if not ability_equal(t.comp.peg.ability, amb):
                    self.fail("peg ability differs from the ambient", m)
                for port, a in zip(t.comp.ports, args):
                    self.check(env, apply_adjustment(amb, port.adj), a, port.vtype)
                return t.comp.peg.vtype
        self.fail("not a use", m)

    def check(self, env, amb, n, expected):
        self.judgements += 1
        match n:
            case Var() | Cmd() | App():
                if not type_equal(self.infer(env, amb, n), expected):
                    self.fail("switch types differ", n)
            case Ctor(k, args):
                if not isinstance(expected, DataType) or self.decls.ctor_owner.get(k) != expected.name:
                    self.fail(f"constructor {k} at the wrong type", n)
                for a, t in zip(args, self.decls.ctor_fields(expected, k), strict=True):
                    self.check(env, amb, a, t)
            case Lit(v):
                if expected != (INT if isinstance(v, int) else CHAR):
                    self.fail("literal type", n)
            case Suspend():
                if not isinstance(expected, ThunkType):
                    self.fail("suspension at non-thunk type", n)
                recorded = self.typed.comp_types.get(id(n))
                if recorded is None or not comp_equal(recorded, expected.comp):
                    self.fail("recorded computation type differs", n)
                self.computation(env, n, expected.comp)
            case Let(x, p, bound, body):
                self.check(env, amb, bound, p.body)
                self.check({**env, x: ("poly", p)}, amb, body, expected)
            case LetRec(bs, body):
                env = {**env, **{b.name: ("poly", b.poly) for b in bs}}
                for b in bs:
                    self.check(env, amb, b.comp, b.poly.body)
                if body is not None:
                    self.check(env, amb, body, expected)
            case _:
                self.fail("not a construction", n)

    def computation(self, env, susp, comp: CompType):
        amb = comp.peg.ability
        for clause in susp.clauses:
            bound = {}
            for r, port in zip(clause.patterns, comp.ports, strict=True):
                bound.update(self.pattern(r, port, amb))
            self.check({**env, **{x: ("mono", t) for x, t in bound.items()}}, amb, clause.body,
                       comp.peg.vtype)

    def pattern(self, r, port, amb):
        self.judgements += 1
        match r:
            case PRequest(c, ps, z):
                _, args, res = handled_commands(self.decls, port.adj)[c]
                out = {}
                for p, a in zip(ps, args, strict=True):
                    out.update(self.value_pattern(p, a))
                out[z] = ThunkType(CompType((Port(IDENTITY, res),), Peg(apply_adjustment(amb, port.adj), port.vtype)))
                return out
            case PCatchAll(x):
                return {x: ThunkType(CompType((), Peg(apply_adjustment(amb, port.adj), port.vtype)))}
        return self.value_pattern(r, port.vtype)

    def value_pattern(self, p, a):
        match p:
            case PVar(x):
                return {x: a}
            case PLit(v):
                if a != (INT if isinstance(v, int) else CHAR):
                    self.fail("literal pattern type", p)
                return {}
            case PCtor(k, ps):
                if not isinstance(a, DataType) or self.decls.ctor_owner.get(k) != a.name:
                    self.fail(f"pattern {k} at the wrong type", p)
                out = {}
                for q, t in zip(ps, self.decls.ctor_fields(a, k), strict=True):
                    out.update(self.value_pattern(q, t))
                return out
        self.fail("bad value pattern", p)


def validate(typed) -> int:
    """Raise Invalid on the first underivable judgement; return the judgement count."""
    v = Validator(typed)
    expected = typed.main_type if typed.main_type is not None else DataType("Unit")
    v.check({}, typed.top_ability, typed.program.letrec, expected)
    return v.judgements
