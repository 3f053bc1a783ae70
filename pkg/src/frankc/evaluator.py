"""Substitution-based small-step semantics for Core Frank.

Each step re-decomposes the term into an evaluation context and a redex,
left to right and innermost first. Commands travel outward to the nearest
handler frame with a clause for them; one that escapes every frame is a
normal form.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass

from . import core as C
from .core import core_type
from .errors import ArithmeticOverflow, FuelExhausted, Stuck
from .syntax import (
    Ability, CoreCompType, DataType, EffectVar, INT, Peg, PolyType, ThunkType, TypeVar,
    apply_adjustment, binder_keys, fresh_like, handled_commands, instantiate, instantiation_map,
    ordered_free_vars, subst_type, _key,
)

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


# ---------------------------------------------------------------------------
# Values


def is_value(t) -> bool:
    """Construction values; ``(v : A)`` with ``v`` a use value is a redex instead."""
    d = getattr(t, "__dict__", None)
    if d is None:
        return _is_value(t)
    if "_val" not in d:
        object.__setattr__(t, "_val", _is_value(t))
    return d["_val"]


def _is_value(t) -> bool:
    match t:
        case C.Var() | C.PolyApp() | C.Cmd() | C.Lit() | C.Lam():
            return True
        case C.Ctor(_, args):
            return all(is_value(a) for a in args)
        case C.Annot(w, _):
            return isinstance(w, (C.Ctor, C.Lit, C.Lam)) and is_value(w)
    return False


def is_use_value(t) -> bool:
    return isinstance(t, (C.Var, C.PolyApp, C.Cmd)) or (isinstance(t, C.Annot) and is_value(t))


def erase(w):
    """Drop annotations from a value, for display and comparisons."""
    match w:
        case C.Annot(t, _):
            return erase(t)
        case C.Ctor(k, args):
            return C.Ctor(k, tuple(erase(a) for a in args))
    return w


# ---------------------------------------------------------------------------
# Substitution


def subst(t, env: dict, poly: dict | None = None):
    """Replace free variables by closed terms.

    ``env`` maps monomorphic names to terms; ``poly`` maps polymorphic names
    to ``(w, P)`` and replaces each ``f R̄`` by ``(w[R̄/Z̄] : P(R̄))``.
    """
    poly = poly or {}
    if not env and not poly:
        return t

    def without(names):
        e = {k: v for k, v in env.items() if k not in names} if any(n in env for n in names) else env
        p = {k: v for k, v in poly.items() if k not in names} if any(n in poly for n in names) else poly
        return e, p

    def go(t, env, poly):
        if not env and not poly:
            return t
        fv = C.free_names(t)
        if not any(k in fv for k in env) and not any(k in fv for k in poly):
            return t
        match t:
            case C.Var(x):
                return env.get(x, t)
            case C.PolyApp(f, targs):
                if f in poly:
                    w, p = poly[f]
                    m = instantiation_map(p.binders, targs)
                    return C.Annot(subst_types(w, m), instantiate(p, targs))
                return t
            case C.Cmd() | C.Lit():
                return t
            case C.App(h, args):
                return C.App(go(h, env, poly), tuple(go(a, env, poly) for a in args))
            case C.Annot(n, a):
                return C.Annot(go(n, env, poly), a)
            case C.Ctor(k, args):
                return C.Ctor(k, tuple(go(a, env, poly) for a in args))
            case C.Lam(params, body):
                return C.Lam(params, go(body, *without(params)))
            case C.Case(scrut, branches, default):
                bs = []
                for b in branches:
                    if isinstance(b, C.Branch):
                        bs.append(C.Branch(b.ctor, b.vars, go(b.body, *without(b.vars))))
                    else:
                        bs.append(C.LitBranch(b.value, go(b.body, env, poly)))
                d = None if default is None else C.Default(default.var, go(default.body, *without((default.var,))))
                return C.Case(go(scrut, env, poly), tuple(bs), d)
            case C.Handle(adj, peg, scrut, clauses, x, ret, a1):
                cls = tuple(C.CmdClause(c.command, c.vars, c.cont, go(c.body, *without(c.vars + (c.cont,))))
                            for c in clauses)
                return C.Handle(adj, peg, go(scrut, env, poly), cls, x, go(ret, *without((x,))), a1)
            case C.Let(f, p, bound, body):
                return C.Let(f, p, go(bound, env, poly), go(body, *without((f,))))
            case C.LetRec(bindings, body):
                inner = without(tuple(b.name for b in bindings))
                bs = tuple(C.RecBinding(b.name, b.poly, go(b.lam, *inner)) for b in bindings)
                return C.LetRec(bs, None if body is None else go(body, *inner))
        raise TypeError(f"not a core term: {t!r}")

    return go(t, env, poly)


def subst_types(t, m: dict):
    """Instantiate free type variables throughout a term, avoiding capture."""
    if not m:
        return t
    ftv = C.free_tvars(t)
    if not any(k in ftv for k in m):
        return t
    ty = lambda a: subst_type(a, m)  # noqa: E731
    match t:
        case C.Var() | C.Cmd() | C.Lit():
            return t
        case C.PolyApp(f, targs):
            return C.PolyApp(f, tuple(ty(a) for a in targs))
        case C.App(h, args):
            return C.App(subst_types(h, m), tuple(subst_types(a, m) for a in args))
        case C.Annot(n, a):
            return C.Annot(subst_types(n, m), ty(a))
        case C.Ctor(k, args):
            return C.Ctor(k, tuple(subst_types(a, m) for a in args))
        case C.Lam(params, body):
            return C.Lam(params, subst_types(body, m))
        case C.Case(scrut, branches, default):
            bs = tuple(C.Branch(b.ctor, b.vars, subst_types(b.body, m)) if isinstance(b, C.Branch)
                       else C.LitBranch(b.value, subst_types(b.body, m)) for b in branches)
            d = None if default is None else C.Default(default.var, subst_types(default.body, m))
            return C.Case(subst_types(scrut, m), bs, d)
        case C.Handle(adj, peg, scrut, clauses, x, ret, a1):
            cls = tuple(C.CmdClause(c.command, c.vars, c.cont, subst_types(c.body, m)) for c in clauses)
            return C.Handle(ty(adj), ty(peg), subst_types(scrut, m), cls, x, subst_types(ret, m), ty(a1))
        case C.Let(f, p, bound, body):
            p2, bound2 = _under_binders(p, bound, m)
            return C.Let(f, p2, bound2, subst_types(body, m))
        case C.LetRec(bindings, body):
            bs = []
            for b in bindings:
                p2, lam2 = _under_binders(b.poly, b.lam, m)
                bs.append(C.RecBinding(b.name, p2, lam2))
            return C.LetRec(tuple(bs), None if body is None else subst_types(body, m))
    raise TypeError(f"not a core term: {t!r}")


def _under_binders(p: PolyType, t, m: dict):
    """Substitute under a polytype's binders, renaming any that would capture."""
    inner = {k: v for k, v in m.items() if k not in binder_keys(p.binders)}
    if not inner:
        return p, t
    clash = {_key(v) for val in inner.values() for v in ordered_free_vars(val)}
    renames, binders = {}, []
    for b in p.binders:
        if _key(b) in clash:
            nb = fresh_like(b, clash | {_key(v) for v in ordered_free_vars(p.body)})
            renames[_key(b)] = nb if isinstance(nb, TypeVar) else Ability(nb)
            binders.append(nb)
        else:
            binders.append(b)
    body, t = p.body, t
    if renames:
        body, t = subst_type(body, renames), subst_types(t, renames)
    return PolyType(tuple(binders), subst_type(body, inner)), subst_types(t, inner)


# ---------------------------------------------------------------------------
# Evaluation contexts


@dataclass(frozen=True)
class Frame:
    kind: str  # app_head, app_arg, annot, ctor_arg, case, handle, let
    node: object
    index: int = 0


def plug(frame: Frame, t):
    n = frame.node
    match frame.kind:
        case "app_head":
            return C.App(t, n.args)
        case "app_arg":
            return C.App(n.head, n.args[:frame.index] + (t,) + n.args[frame.index + 1:])
        case "annot":
            return C.Annot(t, n.type)
        case "ctor_arg":
            return C.Ctor(n.name, n.args[:frame.index] + (t,) + n.args[frame.index + 1:])
        case "case":
            return C.Case(t, n.branches, n.default)
        case "handle":
            return C.Handle(n.adj, n.peg, t, n.clauses, n.ret_var, n.ret_body, n.value_type)
        case "let":
            return C.Let(n.name, n.poly, t, n.body)
    raise ValueError(frame.kind)


def plug_all(frames, t):
    """Fill a context given innermost-first."""
    for f in frames:
        t = plug(f, t)
    return t


def handled_by_context(frames) -> set:
    """HC(ℰ): commands with a clause in some handler frame."""
    out = set()
    for f in frames:
        if f.kind == "handle":
            out |= {c.command for c in f.node.clauses}
    return out


@dataclass(frozen=True)
class Request:
    """A command ``c w̄`` escaping its context ``frames`` (innermost first)."""

    command: str
    args: tuple
    frames: tuple


@dataclass(frozen=True)
class Stepped:
    """A reduct; internally ``term`` sits under ``path`` (innermost first)."""

    term: object
    rule: str
    path: tuple = ()


# ---------------------------------------------------------------------------
# One step


class Stepper:
    def __init__(self, decls):
        self.decls = decls
        self.names = itertools.count()

    def step(self, t):
        """One reduction: ``Stepped``, ``Request`` (normal), or ``None`` (a value)."""
        r = self._step(t, True)
        if isinstance(r, Stepped) and r.path:
            return Stepped(plug_all(r.path, r.term), r.rule)
        return r

    def _sub(self, t, frame: Frame, cpos: bool):
        r = self._step(t, cpos)
        if r is None:
            return None
        if isinstance(r, Stepped):
            return Stepped(r.term, r.rule, r.path + (frame,))
        return Request(r.command, r.args, r.frames + (frame,))

    def _args(self, node, args, kind):
        for i, a in enumerate(args):
            if isinstance(a, C.Annot) and isinstance(a.term, (C.Ctor, C.Lit)) and is_value(a.term):
                return Stepped(plug(Frame(kind, node, i), a.term), "erase")
            if not is_value(a):
                return self._sub(a, Frame(kind, node, i), True)
        return None

    def _step(self, t, cpos: bool):
        match t:
            case C.Var() | C.PolyApp() | C.Cmd() | C.Lit() | C.Lam():
                return None
            case C.Annot(w, a):
                if is_use_value(w):
                    return Stepped(w, "erase")
                if is_value(w):
                    if cpos and isinstance(w, (C.Ctor, C.Lit)):
                        return Stepped(w, "erase")
                    return None
                return self._sub(w, Frame("annot", t), True)
            case C.Ctor(_, args):
                return self._args(t, args, "ctor_arg")
            case C.App(head, args):
                if not is_use_value(head):
                    return self._sub(head, Frame("app_head", t), False)
                r = self._args(t, args, "app_arg")
                if r is not None:
                    return r
                return self.apply(t, head, args)
            case C.Case(scrut, branches, default):
                if not is_use_value(scrut):
                    return self._sub(scrut, Frame("case", t), False)
                return self.select(t, scrut)
            case C.Handle():
                return self.handle(t)
            case C.Let(f, p, bound, body):
                if not is_value(bound) or (isinstance(bound, C.Annot) and not isinstance(bound.term, C.Lam)):
                    return self._sub(bound, Frame("let", t), True)
                return Stepped(subst(body, {}, {f: (bound, p)}), "let")
            case C.LetRec(bindings, body):
                unfold = {}
                for b in bindings:
                    lam = C.Lam(b.lam.params, C.LetRec(bindings, b.lam.body))
                    unfold[b.name] = (lam, b.poly)
                return Stepped(subst(body, {}, unfold), "letrec")
        raise Stuck(f"no rule applies to {type(t).__name__}")

    def apply(self, t, head, args):
        match head:
            case C.Annot(C.Lam(params, body), ThunkType(CoreCompType(arg_types, peg))):
                env = {x: C.Annot(w, a) for x, w, a in zip(params, args, arg_types)}
                return Stepped(C.Annot(subst(body, env), peg.vtype), "beta")
            case C.Cmd(c):
                return Request(c, args, ())
            case C.PolyApp(C.INT_ADD_NAME, _):
                a, b = (erase(x) for x in args)
                if not (isinstance(a, C.Lit) and isinstance(b, C.Lit)):
                    raise Stuck("intAdd applied to non-literals")
                total = a.value + b.value
                if not INT_MIN <= total <= INT_MAX:
                    raise ArithmeticOverflow(f"{a.value} + {b.value} overflows 64 bits")
                return Stepped(C.Annot(C.Lit(total), INT), "delta")
        raise Stuck(f"cannot apply {C.show_core(head)}")

    def select(self, t: C.Case, scrut):
        match scrut:
            case C.Annot(C.Ctor(k, ws), DataType() as dt):
                for b in t.branches:
                    if isinstance(b, C.Branch) and b.ctor == k:
                        fields = tuple(core_type(a) for a in self.decls.ctor_fields(dt, k))
                        env = {x: C.Annot(w, a) for x, w, a in zip(b.vars, ws, fields)}
                        return Stepped(subst(b.body, env), "case")
            case C.Annot(C.Lit(v), _):
                for b in t.branches:
                    if isinstance(b, C.LitBranch) and b.value == v:
                        return Stepped(b.body, "case")
                if t.default is not None:
                    return Stepped(subst(t.default.body, {t.default.var: scrut}), "case")
        raise Stuck(f"case on {C.show_core(scrut)}")

    def handle(self, t: C.Handle):
        scrut = t.scrut
        if is_use_value(scrut):
            return Stepped(subst(t.ret_body, {t.ret_var: scrut}), "handle-return")
        frame = Frame("handle", t)
        r = self._step(scrut, False)
        if r is None:
            raise Stuck("handled computation is neither a value nor reducible")
        if isinstance(r, Stepped):
            return Stepped(r.term, r.rule, r.path + (frame,))
        clause = next((c for c in t.clauses if c.command == r.command), None)
        if clause is None:
            return Request(r.command, r.args, r.frames + (frame,))
        _, arg_types, res = handled_commands(self.decls, t.adj)[r.command]
        y = f"$k{next(self.names)}"
        sigma_delta = apply_adjustment(t.peg.ability, t.adj)
        kont_type = ThunkType(CoreCompType((core_type(res),), Peg(sigma_delta, t.value_type)))
        kont = C.Annot(C.Lam((y,), plug_all(r.frames, C.Var(y))), kont_type)
        env = {x: C.Annot(w, core_type(a)) for x, w, a in zip(clause.vars, r.args, arg_types)}
        env[clause.cont] = kont
        return Stepped(subst(clause.body, env), "handle-command")


# ---------------------------------------------------------------------------
# Driving


@dataclass
class Normal:
    term: object
    request: Request | None  # None when the term is a value
    steps: int


# whether a frame's hole is in checking position
_CHILD_CPOS = {"annot": True, "ctor_arg": True, "app_arg": True, "let": True,
               "app_head": False, "case": False, "handle": False}


def _descends(kind: str, child) -> bool:
    """Whether the enclosing frame's rule would still step inside ``child``."""
    match kind:
        case "annot":
            return not is_use_value(child) and not is_value(child)
        case "ctor_arg" | "app_arg":
            erasable = isinstance(child, C.Annot) and isinstance(child.term, (C.Ctor, C.Lit))
            return not is_value(child) and not erasable
        case "let":
            return not is_value(child) or (isinstance(child, C.Annot) and not isinstance(child.term, C.Lam))
    return not is_use_value(child)


def eval_to_normal(decls, t, fuel: int = 10 ** 7, trace=None, stepper: Stepper | None = None) -> Normal:
    """Step until a value or an escaping command; ``trace(term, rule)`` sees every step.

    The evaluation context is kept as a stack so that each step resumes at the
    previous redex instead of re-descending from the root; the sequence of
    terms is exactly that of repeated ``Stepper.step``.
    """
    stepper = stepper or Stepper(decls)
    stack: list[Frame] = []  # outermost first
    focus = t
    steps = 0
    while True:
        r = stepper._step(focus, _CHILD_CPOS[stack[-1].kind] if stack else True)
        if r is None:
            if not stack:
                return Normal(focus, None, steps)
            focus = plug(stack.pop(), focus)
            continue
        if isinstance(r, Request):
            outer = r.frames + tuple(reversed(stack))
            hc = [i for i, f in enumerate(outer) if f.kind == "handle"
                  and any(c.command == r.command for c in f.node.clauses)]
            if not hc:
                whole = plug_all(tuple(reversed(stack)), focus)
                return Normal(whole, Request(r.command, r.args, outer), steps)
            for _ in range(hc[0] + 1 - len(r.frames)):
                focus = plug(stack.pop(), focus)
            continue
        if steps >= fuel:
            whole = plug_all(tuple(reversed(stack)), focus)
            raise FuelExhausted(f"fuel of {fuel} steps exhausted", term=whole, steps=steps)
        stack.extend(reversed(r.path))
        focus = r.term
        while stack and not _descends(stack[-1].kind, focus):
            focus = plug(stack.pop(), focus)
        steps += 1
        if trace is not None:
            trace(plug_all(tuple(reversed(stack)), focus), r.rule)


def reachable_bindings(letrec: C.LetRec) -> C.LetRec:
    """Drop recursive bindings the body can never reach."""
    by_name = {b.name: b for b in letrec.bindings}
    seen: set[str] = set()
    todo = list(_poly_names(letrec.body))
    while todo:
        f = todo.pop()
        if f in by_name and f not in seen:
            seen.add(f)
            todo.extend(_poly_names(by_name[f].lam))
    return C.LetRec(tuple(b for b in letrec.bindings if b.name in seen), letrec.body)


def _poly_names(t):
    match t:
        case C.PolyApp(f, _):
            yield f
        case C.Var() | C.Cmd() | C.Lit() | None:
            return
        case C.App(h, args):
            yield from _poly_names(h)
            for a in args:
                yield from _poly_names(a)
        case C.Annot(n, _):
            yield from _poly_names(n)
        case C.Ctor(_, args):
            for a in args:
                yield from _poly_names(a)
        case C.Lam(_, body):
            yield from _poly_names(body)
        case C.Case(scrut, branches, default):
            yield from _poly_names(scrut)
            for b in branches:
                yield from _poly_names(b.body)
            if default is not None:
                yield from _poly_names(default.body)
        case C.Handle(_, _, scrut, clauses, _, ret, _):
            yield from _poly_names(scrut)
            for c in clauses:
                yield from _poly_names(c.body)
            yield from _poly_names(ret)
        case C.Let(_, _, bound, body):
            yield from _poly_names(bound)
            yield from _poly_names(body)
        case C.LetRec(bindings, body):
            for b in bindings:
                yield from _poly_names(b.lam)
            yield from _poly_names(body)
