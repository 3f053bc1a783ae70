"""Frank types, abilities, adjustments, source terms and declarations.

The type language is shared with Core Frank: a Core computation type is a
``CoreCompType`` (bare argument types) sitting inside the same ``ThunkType``
wrapper as a Frank ``CompType`` (ports).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import DeclarationError, NotFound, Span

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class DataType:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class ThunkType:
    comp: "CompType | CoreCompType"


@dataclass(frozen=True)
class TypeVar:
    name: str


@dataclass(frozen=True)
class TypeMeta:
    """Value-type unification variable; only exists while checking."""

    id: int


@dataclass(frozen=True)
class EmptyHead:
    pass


EMPTY = EmptyHead()


@dataclass(frozen=True)
class EffectVar:
    name: str


@dataclass(frozen=True)
class AbilityMeta:
    id: int


@dataclass(frozen=True)
class Instance:
    iface: str
    args: tuple = ()


@dataclass(frozen=True)
class Ability:
    head: Union[EmptyHead, EffectVar, AbilityMeta]
    instances: tuple = ()


@dataclass(frozen=True)
class Adjustment:
    instances: tuple = ()


IDENTITY = Adjustment()


@dataclass(frozen=True)
class Port:
    adj: Adjustment
    vtype: "ValueType"


@dataclass(frozen=True)
class Peg:
    ability: Ability
    vtype: "ValueType"


@dataclass(frozen=True)
class CompType:
    ports: tuple
    peg: Peg


@dataclass(frozen=True)
class CoreCompType:
    args: tuple
    peg: Peg


@dataclass(frozen=True)
class PolyType:
    binders: tuple  # of TypeVar | EffectVar
    body: "ValueType"


ValueType = Union[DataType, ThunkType, TypeVar, TypeMeta]
TypeArg = Union[DataType, ThunkType, TypeVar, TypeMeta, Ability]

INT = DataType("Int")
CHAR = DataType("Char")
LITERAL_TYPES = ("Int", "Char")


def ability(*instances: Instance, head=None) -> Ability:
    return Ability(EMPTY if head is None else head, tuple(instances))


def adjustment(*instances: Instance) -> Adjustment:
    return Adjustment(tuple(instances))


# ---------------------------------------------------------------------------
# The ability algebra


def apply_adjustment(sigma: Ability, delta: Adjustment) -> Ability:
    return Ability(sigma.head, sigma.instances + delta.instances)


def normalize_instances(instances) -> tuple:
    seen = set()
    kept = []
    for inst in reversed(instances):
        if inst.iface not in seen:
            seen.add(inst.iface)
            kept.append(inst)
    return tuple(reversed(kept))


def normalize_ability(sigma: Ability) -> Ability:
    """Shadowing: each interface keeps only its last instance, in place."""
    return Ability(sigma.head, normalize_instances(sigma.instances))


def normalize_adjustment(delta: Adjustment) -> Adjustment:
    return Adjustment(normalize_instances(delta.instances))


def lookup_command(decls: "Declarations", sigma: Ability, command: str):
    """Signature ``(args, result)`` of ``command`` in ``sigma``.

    Raises NotFound when no surviving instance declares the command.
    """
    for inst in reversed(normalize_ability(sigma).instances):
        if decls.command_owner.get(command) == inst.iface:
            return decls.command_signature(inst, command)
    raise NotFound(f"command {command} is not offered by ability {show_ability(sigma)}")


def handled_commands(decls: "Declarations", delta: Adjustment) -> dict:
    """Command name -> (instance, args, result), over ``∅ ⊕ delta``."""
    out = {}
    for inst in normalize_adjustment(delta).instances:
        for cmd in decls.interfaces[inst.iface].commands:
            args, res = decls.command_signature(inst, cmd.name)
            out[cmd.name] = (inst, args, res)
    return out


# ---------------------------------------------------------------------------
# Free variables and substitution on types


def free_type_vars(t) -> set:
    """Names of free value and effect variables."""
    return {v.name for v in ordered_free_vars(t)}


def ordered_free_vars(t) -> list:
    """Free variables as ``TypeVar``/``EffectVar`` in first-occurrence order."""
    out: list = []

    def go(x):
        match x:
            case TypeVar():
                if x not in out:
                    out.append(x)
            case DataType(_, args):
                for a in args:
                    go(a)
            case ThunkType(c):
                go(c)
            case CompType(ports, peg):
                for p in ports:
                    go(p)
                go(peg)
            case CoreCompType(args, peg):
                for a in args:
                    go(a)
                go(peg)
            case Port(adj, vt):
                go(adj)
                go(vt)
            case Peg(ab, vt):
                go(ab)
                go(vt)
            case Ability(head, insts):
                if isinstance(head, EffectVar) and head not in out:
                    out.append(head)
                for i in insts:
                    go(i)
            case Adjustment(insts):
                for i in insts:
                    go(i)
            case Instance(_, args):
                for a in args:
                    go(a)
            case PolyType(binders, body):
                inner = ordered_free_vars(body)
                for v in inner:
                    if v not in binders and v not in out:
                        out.append(v)
            case _:
                pass

    go(t)
    return out


def subst_type(t, mapping: dict):
    """Simultaneously replace free variables by name.

    ``mapping`` sends value-variable names to value types and effect-variable
    names to abilities. Metas are left untouched.
    """
    if not mapping:
        return t
    match t:
        case TypeVar(name):
            return mapping.get(("v", name), t)
        case TypeMeta():
            return t
        case DataType(name, args):
            return DataType(name, tuple(subst_type(a, mapping) for a in args))
        case ThunkType(c):
            return ThunkType(subst_type(c, mapping))
        case CompType(ports, peg):
            return CompType(tuple(subst_type(p, mapping) for p in ports), subst_type(peg, mapping))
        case CoreCompType(args, peg):
            return CoreCompType(tuple(subst_type(a, mapping) for a in args), subst_type(peg, mapping))
        case Port(adj, vt):
            return Port(subst_type(adj, mapping), subst_type(vt, mapping))
        case Peg(ab, vt):
            return Peg(subst_type(ab, mapping), subst_type(vt, mapping))
        case Ability(head, insts):
            insts = tuple(subst_type(i, mapping) for i in insts)
            if isinstance(head, EffectVar) and ("e", head.name) in mapping:
                sol = mapping[("e", head.name)]
                return Ability(sol.head, sol.instances + insts)
            return Ability(head, insts)
        case Adjustment(insts):
            return Adjustment(tuple(subst_type(i, mapping) for i in insts))
        case Instance(name, args):
            return Instance(name, tuple(subst_type(a, mapping) for a in args))
        case PolyType(binders, body):
            inner = {k: v for k, v in mapping.items() if k not in binder_keys(binders)}
            clash = set()
            for v in inner.values():
                clash |= {_key(x) for x in ordered_free_vars(v)}
            fresh_binders = []
            renames = {}
            for b in binders:
                if _key(b) in clash:
                    nb = fresh_like(b, clash | {_key(x) for x in ordered_free_vars(body)})
                    renames[_key(b)] = nb if isinstance(nb, TypeVar) else Ability(nb)
                    fresh_binders.append(nb)
                else:
                    fresh_binders.append(b)
            body = subst_type(body, renames) if renames else body
            return PolyType(tuple(fresh_binders), subst_type(body, inner))
    raise TypeError(f"not a type form: {t!r}")


def _key(v):
    return ("v", v.name) if isinstance(v, TypeVar) else ("e", v.name)


def binder_keys(binders) -> set:
    return {_key(b) for b in binders}


_fresh_counter = [0]


def fresh_like(b, avoid: set):
    while True:
        _fresh_counter[0] += 1
        name = f"{b.name.rstrip('0123456789')}{_fresh_counter[0]}"
        cand = TypeVar(name) if isinstance(b, TypeVar) else EffectVar(name)
        if _key(cand) not in avoid:
            return cand


def instantiation_map(binders, args) -> dict:
    if len(binders) != len(args):
        raise ValueError("instantiation must be total on the binder list")
    return {_key(b): a for b, a in zip(binders, args)}


def instantiate(poly: PolyType, args) -> "ValueType":
    """``P(R̄)``: the body with each binder replaced by its argument."""
    return subst_type(poly.body, instantiation_map(poly.binders, args))


# ---------------------------------------------------------------------------
# Pretty printing of types (explicit form: ι and effect heads shown)


def _atomic(t) -> bool:
    return not (isinstance(t, DataType) and t.args)


def show_type(t, explicit: bool = True) -> str:
    match t:
        case TypeVar(name):
            return name
        case TypeMeta(i):
            return f"?{i}"
        case DataType(name, args):
            if not args:
                return name
            return " ".join([name] + [_show_arg(a, explicit) for a in args])
        case ThunkType(c):
            return "{" + show_type(c, explicit) + "}"
        case CompType(ports, peg):
            return " -> ".join([show_port(p, explicit) for p in ports] + [show_peg(peg, explicit)])
        case CoreCompType(args, peg):
            return " -> ".join([show_type(a, explicit) for a in args] + [show_peg(peg, explicit)])
        case Peg():
            return show_peg(t, explicit)
        case Port():
            return show_port(t, explicit)
        case Ability():
            return show_ability(t)
        case Adjustment():
            return show_adjustment(t)
        case Instance():
            return show_instance(t)
        case PolyType(binders, body):
            if not binders:
                return show_type(body, explicit)
            bs = " ".join(b.name for b in binders)
            return f"forall {bs}.{show_type(body, explicit)}"
    raise TypeError(f"not a type form: {t!r}")


def _show_arg(a, explicit=True) -> str:
    if isinstance(a, Ability):
        return "[" + show_ability(a) + "]"
    s = show_type(a, explicit)
    return s if _atomic(a) else f"({s})"


def show_instance(inst: Instance) -> str:
    return " ".join([inst.iface] + [_show_arg(a) for a in inst.args])


def show_head(h) -> str:
    match h:
        case EmptyHead():
            return "0"
        case EffectVar(name):
            return name
        case AbilityMeta(i):
            return f"?e{i}"
    raise TypeError(h)


def show_ability(sigma: Ability) -> str:
    return ", ".join([show_head(sigma.head)] + [show_instance(i) for i in sigma.instances])


def show_adjustment(delta: Adjustment) -> str:
    return " + ".join(["ι"] + [show_instance(i) for i in delta.instances])


def show_port(p: Port, explicit=True) -> str:
    vt = show_type(p.vtype, explicit)
    if not _atomic(p.vtype) and explicit:
        vt = f"({vt})"
    if explicit:
        return f"<{show_adjustment(p.adj)}>{vt}"
    return vt


def show_peg(g: Peg, explicit=True) -> str:
    vt = show_type(g.vtype, explicit)
    if explicit:
        if not _atomic(g.vtype):
            vt = f"({vt})"
        return f"[{show_ability(g.ability)}]{vt}"
    return vt


# ---------------------------------------------------------------------------
# Source terms

_SPAN = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    """Monomorphic or polymorphic variable; the environment decides."""

    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Cmd:
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class App:
    head: object
    args: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Ctor:
    name: str
    args: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Lit:
    """Builtin Int (python int) or Char (length-1 str) literal."""

    value: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Clause:
    patterns: tuple
    body: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Suspend:
    clauses: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Let:
    name: str
    poly: PolyType
    bound: object
    body: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class Binding:
    name: str
    poly: PolyType
    comp: Suspend
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class LetRec:
    bindings: tuple
    body: object  # None when the program has no main
    span: Span | None = field(**_SPAN)


USES = (Var, Cmd, App)


# Patterns


@dataclass(frozen=True)
class PVar:
    name: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PCtor:
    name: str
    args: tuple
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PLit:
    value: object
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PRequest:
    command: str
    args: tuple
    cont: str
    span: Span | None = field(**_SPAN)


@dataclass(frozen=True)
class PCatchAll:
    name: str
    span: Span | None = field(**_SPAN)


def pattern_vars(p) -> list:
    match p:
        case PVar(x) | PCatchAll(x):
            return [x]
        case PCtor(_, args):
            return [v for a in args for v in pattern_vars(a)]
        case PRequest(_, args, z):
            return [v for a in args for v in pattern_vars(a)] + [z]
        case PLit():
            return []
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class CtorDecl:
    name: str
    args: tuple


@dataclass(frozen=True)
class DataDecl:
    name: str
    params: tuple  # TypeVar | EffectVar
    ctors: tuple
    literal: bool = False


@dataclass(frozen=True)
class CommandDecl:
    name: str
    args: tuple
    result: "ValueType"


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    params: tuple
    commands: tuple


class Declarations:
    """Global data and interface definitions, with name-resolution tables."""

    def __init__(self, datas=(), interfaces=()):
        self.datas: dict[str, DataDecl] = {}
        self.interfaces: dict[str, InterfaceDecl] = {}
        self.ctor_owner: dict[str, str] = {}
        self.command_owner: dict[str, str] = {}
        for name in LITERAL_TYPES:
            self.add_data(DataDecl(name, (), (), literal=True))
        for d in datas:
            self.add_data(d)
        for i in interfaces:
            self.add_interface(i)

    def add_data(self, d: DataDecl):
        if d.name in self.datas or d.name in self.interfaces:
            raise DeclarationError(f"type {d.name} is declared twice")
        self.datas[d.name] = d
        for k in d.ctors:
            if k.name in self.ctor_owner or k.name in self.command_owner:
                raise DeclarationError(f"constructor {k.name} is declared twice")
            self.ctor_owner[k.name] = d.name

    def add_interface(self, i: InterfaceDecl):
        if i.name in self.datas or i.name in self.interfaces:
            raise DeclarationError(f"interface {i.name} is declared twice")
        self.interfaces[i.name] = i
        for c in i.commands:
            if c.name in self.command_owner or c.name in self.ctor_owner:
                raise DeclarationError(f"command {c.name} is declared twice")
            self.command_owner[c.name] = i.name

    def ctor_decl(self, k: str) -> CtorDecl:
        d = self.datas[self.ctor_owner[k]]
        return next(c for c in d.ctors if c.name == k)

    def ctor_fields(self, dt: DataType, k: str) -> tuple:
        """𝒟(D R̄, k): constructor argument types at the given arguments."""
        d = self.datas[dt.name]
        m = instantiation_map(d.params, dt.args)
        ctor = next(c for c in d.ctors if c.name == k)
        return tuple(subst_type(a, m) for a in ctor.args)

    def command_signature(self, inst: Instance, c: str):
        """ℐ(I R̄, c) as ``(args, result)``."""
        i = self.interfaces[inst.iface]
        m = instantiation_map(i.params, inst.args)
        cmd = next(x for x in i.commands if x.name == c)
        return tuple(subst_type(a, m) for a in cmd.args), subst_type(cmd.result, m)
