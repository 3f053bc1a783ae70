"""Alpha-normalisation of desugared programs for structural comparison."""

from __future__ import annotations

import dataclasses
import itertools

from frankc.desugar import WILD_PREFIX
from frankc.syntax import Ability, EffectVar


def _rename_effects(obj, table, counter):
    """Rename effect variables by order of first appearance; drop spans."""
    if isinstance(obj, EffectVar):
        if obj.name not in table:
            table[obj.name] = f"e{next(counter)}"
        return EffectVar(table[obj.name])
    if isinstance(obj, str) and obj.startswith(WILD_PREFIX):
        if obj not in table:
            table[obj] = f"w{next(counter)}"
        return table[obj]
    if isinstance(obj, tuple):
        return tuple(_rename_effects(o, table, counter) for o in obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        vals = {f.name: _rename_effects(getattr(obj, f.name), table, counter)
                for f in dataclasses.fields(obj) if f.name != "span"}
        return type(obj)(**vals)
    return obj


def normal_form(program):
    """Comparable form: declarations and bindings, each renamed independently."""
    d = program.decls
    items = []
    for group in (d.datas.values(), d.interfaces.values(), program.bindings):
        for x in group:
            items.append(_rename_effects(x, {}, itertools.count()))
    return items, program.letrec.body is not None
