"""Brute-force coverage oracle: enumerate bounded inputs per port and match rows."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from frankc.syntax import (
    DataType, PCatchAll, PCtor, PLit, PRequest, PVar, handled_commands, normalize_adjustment,
)

OPAQUE = ("opaque",)


@dataclass(frozen=True)
class Request:
    command: str
    args: tuple


def literals_in(patterns, kind):
    out = set()

    def go(p):
        match p:
            case PLit(v) if isinstance(v, kind):
                out.add(v)
            case PCtor(_, ps) | PRequest(_, ps, _):
                for q in ps:
                    go(q)
    for p in patterns:
        go(p)
    return out


class Oracle:
    def __init__(self, decls, comp, clauses, depth=3):
        self.decls = decls
        self.comp = comp
        self.rows = [cl.patterns for cl in clauses]
        flat = [p for r in self.rows for p in r]
        self.ints = sorted(literals_in(flat, int)) + [max(literals_in(flat, int), default=0) + 1]
        chars = literals_in(flat, str)
        self.chars = sorted(chars) + [next(c for c in "zyxwv~" if c not in chars)]
        self.depth = depth

    def values(self, t, depth):
        if isinstance(t, DataType) and t.name == "Int":
            return [("lit", i) for i in self.ints]
        if isinstance(t, DataType) and t.name == "Char":
            return [("lit", c) for c in self.chars]
        if not isinstance(t, DataType):
            return [OPAQUE]
        if depth == 0:
            return []
        out = []
        for k in self.decls.datas[t.name].ctors:
            fields = self.decls.ctor_fields(t, k.name)
            for args in itertools.product(*(self.values(f, depth - 1) for f in fields)):
                out.append(("ctor", k.name, args))
        return out

    def port_inputs(self, port):
        out = list(self.values(port.vtype, self.depth))
        for c, (_, args, _) in handled_commands(self.decls, normalize_adjustment(port.adj)).items():
            for vs in itertools.product(*(self.values(a, self.depth - 1) for a in args)):
                out.append(Request(c, vs))
        return out

    def inputs(self):
        return itertools.product(*(self.port_inputs(p) for p in self.comp.ports))

    def matches_value(self, p, v) -> bool:
        match p:
            case PVar():
                return True
            case PLit(x):
                return v == ("lit", x)
            case PCtor(k, ps):
                return v[0] == "ctor" and v[1] == k and all(self.matches_value(q, w) for q, w in zip(ps, v[2]))
        return False

    def matches(self, p, v) -> bool:
        match p:
            case PCatchAll():
                return True
            case PRequest(c, ps, _):
                return isinstance(v, Request) and v.command == c and all(
                    self.matches_value(q, w) for q, w in zip(ps, v.args))
        return not isinstance(v, Request) and self.matches_value(p, v)

    def covered(self, vec) -> bool:
        return any(all(self.matches(p, v) for p, v in zip(row, vec)) for row in self.rows)

    def uncovered(self):
        return [vec for vec in self.inputs() if not self.covered(vec)]

    def instances_of(self, witness):
        """Bounded inputs described by a witness pattern vector."""
        self.ints = sorted(set(self.ints) | literals_in(witness, int))
        self.chars = sorted(set(self.chars) | literals_in(witness, str))
        return [vec for vec in self.inputs() if all(self.matches(p, v) for p, v in zip(witness, vec))]
