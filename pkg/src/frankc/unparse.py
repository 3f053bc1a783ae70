"""Print desugared programs back as concrete source.

Implicit effect variables, identity adjustments and fresh wildcard names are
turned back into their omitted forms, so reparsing yields an alpha-equivalent
program.
"""

from __future__ import annotations

from .core import show_lit
from .desugar import WILD_PREFIX, Program
from .syntax import (
    EMPTY, Ability, App, Cmd, CompType, Ctor, DataType, EffectVar, Instance, Lit, PCatchAll,
    PCtor, PLit, PRequest, PVar, Suspend, ThunkType, TypeVar, Var,
)


class Unparser:
    def __init__(self, decls):
        self.decls = decls

    # -- types --------------------------------------------------------------
    def _args(self, params, args, eps):
        if params and isinstance(params[0], EffectVar) and args and args[0] == Ability(EffectVar(eps)):
            args = args[1:]
        return [self.targ(a, eps) for a in args]

    def targ(self, a, eps) -> str:
        if isinstance(a, Ability):
            return self.ability(a, eps)
        return self.vtype(a, eps, atomic=True)

    def vtype(self, t, eps, atomic=False) -> str:
        match t:
            case TypeVar(x):
                return x
            case DataType(name, args):
                params = self.decls.datas[name].params
                shown = self._args(params, args, eps)
                out = " ".join([name, *shown])
                return f"({out})" if atomic and shown else out
            case ThunkType(c):
                return "{" + self.comp(c, eps) + "}"
        raise ValueError(f"cannot print type {t!r}")

    def instance(self, i: Instance, eps) -> str:
        params = self.decls.interfaces[i.iface].params
        return " ".join([i.iface, *self._args(params, i.args, eps)])

    def ability(self, a: Ability, eps) -> str:
        insts = [self.instance(i, eps) for i in a.instances]
        if a.head == EMPTY:
            insts.insert(0, "0")
        elif a.head != EffectVar(eps):
            raise ValueError(f"effect variable {a.head} has no concrete syntax")
        return "[" + ", ".join(insts) + "]"

    def comp(self, c: CompType, eps) -> str:
        items = []
        for p in c.ports:
            vt = self.vtype(p.vtype, eps)
            if p.adj.instances:
                vt = "<" + ", ".join(self.instance(i, eps) for i in p.adj.instances) + ">" + vt
            items.append(vt)
        peg = self.vtype(c.peg.vtype, eps)
        if c.peg.ability != Ability(EffectVar(eps)):
            peg = self.ability(c.peg.ability, eps) + self.vtype(c.peg.vtype, eps, atomic=True)
        return " -> ".join([*items, peg])

    # -- terms --------------------------------------------------------------
    def term(self, n, atomic=False) -> str:
        match n:
            case Var(x) | Cmd(x):
                return x
            case Lit(v):
                return show_lit(v)
            case Ctor(k, ()):
                return k
            case Ctor(k, args):
                s = _string(n)
                if s is not None:
                    return s
                out = " ".join([k, *(self.term(a, True) for a in args)])
                return f"({out})" if atomic else out
            case App(h, ()):
                head = self.term(h, True)
                return head + "!"
            case App(h, args):
                head = self.term(h, True)
                out = " ".join([head, *(self.term(a, True) for a in args)])
                return f"({out})" if atomic else out
            case Suspend(clauses):
                if not clauses:
                    return "{}"
                if len(clauses) == 1 and not clauses[0].patterns:
                    return "{" + self.term(clauses[0].body) + "}"
                return "{" + " | ".join(self.clause(c, " -> ") for c in clauses) + "}"
        raise ValueError(f"cannot print term {n!r}")

    def clause(self, c, arrow) -> str:
        pats = " ".join(self.pattern(p, True) for p in c.patterns)
        return f"{pats}{arrow}{self.term(c.body)}"

    def pattern(self, p, atomic=False) -> str:
        match p:
            case PVar(x):
                return "_" if x.startswith(WILD_PREFIX) else x
            case PLit(v):
                return show_lit(v)
            case PCtor(k, ()):
                return k
            case PCtor(k, args):
                s = _string_pattern(p)
                if s is not None:
                    return s
                out = " ".join([k, *(self.pattern(a, True) for a in args)])
                return f"({out})" if atomic else out
            case PRequest(c, args, z):
                z = "_" if z.startswith(WILD_PREFIX) else z
                return "<" + " ".join([c, *(self.pattern(a, True) for a in args), "->", z]) + ">"
            case PCatchAll(x):
                return "<_>" if x.startswith(WILD_PREFIX) else f"<{x}>"
        raise ValueError(f"cannot print pattern {p!r}")

    # -- declarations ---------------------------------------------------------
    def program(self, program: Program) -> str:
        lines = []
        for d in self.decls.datas.values():
            if d.literal:
                continue
            eps, params = _implicit(d.params)
            ctors = [" ".join([k.name, *(self.vtype(a, eps, atomic=True) for a in k.args)]) for k in d.ctors]
            lines.append(" ".join(["data", d.name, *params, "="]) + (" " + " | ".join(ctors) if ctors else ""))
        for i in self.decls.interfaces.values():
            eps, params = _implicit(i.params)
            cmds = [f"{c.name} : " + " -> ".join(self.vtype(t, eps) for t in (*c.args, c.result))
                    for c in i.commands]
            lines.append(" ".join(["interface", i.name, *params, "="]) + " " + " | ".join(cmds))
        for b in program.bindings:
            effs = [v.name for v in b.poly.binders if isinstance(v, EffectVar)]
            eps = effs[0] if effs else None
            lines.append(f"{b.name} : {self.comp(b.poly.body.comp, eps)}")
            for c in b.comp.clauses:
                if c.patterns:
                    lines.append(f"{b.name} {self.clause(c, ' = ')}")
                else:
                    lines.append(f"{b.name}! = {self.term(c.body)}")
        return "\n".join(lines) + "\n"


def _implicit(params):
    if params and isinstance(params[0], EffectVar):
        return params[0].name, [p.name for p in params[1:]]
    return None, [p.name for p in params]


def _chars(n, ctor, lit):
    chars = []
    while isinstance(n, ctor) and n.name == "cons" and len(n.args) == 2:
        head = n.args[0]
        if not (isinstance(head, lit) and isinstance(head.value, str)):
            return None
        chars.append(head.value)
        n = n.args[1]
    if not chars or not (isinstance(n, ctor) and n.name == "nil"):
        return None
    return '"' + "".join(show_lit(c)[1:-1].replace('"', '\\"') for c in chars) + '"'


def _string(n):
    return _chars(n, Ctor, Lit)


def _string_pattern(p):
    return _chars(p, PCtor, PLit)


def show_program(program: Program) -> str:
    return Unparser(program.decls).program(program)
