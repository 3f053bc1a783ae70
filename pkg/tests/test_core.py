"""The Core checker on hand-built terms and on all elaboration output."""

import pytest

from frankc import core as C
from frankc.errors import CoreTypeError
from frankc.runtime import CONSOLE, compile_program, load_program
from frankc.syntax import (
    EMPTY, INT, Ability, Adjustment, CoreCompType, DataType, EffectVar, Instance, Peg, ThunkType,
    TypeVar,
)

DECLS = load_program("").decls
PURE = Ability(EMPTY)
BOOL = DataType("Bool")


def fun(args, ab, res):
    return ThunkType(CoreCompType(tuple(args), Peg(ab, res)))


def test_annotated_identity_checks():
    t = fun([INT], PURE, INT)
    C.check_core(DECLS, C.Annot(C.Lam(("x",), C.Var("x")), t), t, PURE)


def test_application_of_annotated_lambda():
    t = fun([INT], PURE, INT)
    C.check_core(DECLS, C.App(C.Annot(C.Lam(("x",), C.Var("x")), t), (C.Lit(3),)), INT, PURE)


def test_wrong_ambient_rejected():
    t = fun([INT], Ability(EffectVar("ε")), INT)
    with pytest.raises(CoreTypeError):
        C.check_core(DECLS, C.App(C.Annot(C.Lam(("x",), C.Var("x")), t), (C.Lit(3),)), INT, PURE)


def _handler(clauses, adj=Adjustment((Instance("Abort"),))):
    x = TypeVar("X")
    amb = Ability(EffectVar("ε"))
    scrut_t = fun([], Ability(EffectVar("ε"), adj.instances), x)
    lam = C.Lam(("m",), C.Handle(adj, Peg(amb, x), C.App(C.Var("m"), ()), clauses, "v", C.Var("v"), x))
    return lam, fun([scrut_t], amb, x), amb


def test_handle_checks():
    lam, t, amb = _handler((C.CmdClause("aborting", (), "k", C.Var("d")),))
    lam = C.Lam(("m", "d"), lam.body)
    t = ThunkType(CoreCompType(t.comp.args + (TypeVar("X"),), t.comp.peg))
    C.check_core(DECLS, lam, t, amb)


def test_handler_clause_runs_at_outer_ambient():
    # aborting is handled, so it is absent from the clause body's ambient
    reissue = C.Case(C.App(C.Cmd("aborting"), ()), ())
    lam, t, amb = _handler((C.CmdClause("aborting", (), "k", reissue),))
    with pytest.raises(CoreTypeError, match="aborting"):
        C.check_core(DECLS, lam, t, amb)


def test_handle_with_clause_outside_adjustment_rejected():
    lam, t, amb = _handler((C.CmdClause("get", (), "k", C.Var("k")),))
    with pytest.raises(CoreTypeError):
        C.check_core(DECLS, lam, t, amb)


def test_handle_missing_clause_rejected():
    lam, t, amb = _handler(())
    with pytest.raises(CoreTypeError):
        C.check_core(DECLS, lam, t, amb)


def test_case_requires_every_constructor():
    t = fun([BOOL], PURE, INT)
    partial = C.Annot(C.Lam(("b",), C.Case(C.Var("b"), (C.Branch("tt", (), C.Lit(1)),))), t)
    with pytest.raises(CoreTypeError):
        C.check_core(DECLS, partial, t, PURE)
    full = C.Annot(C.Lam(("b",), C.Case(C.Var("b"), (C.Branch("tt", (), C.Lit(1)), C.Branch("ff", (), C.Lit(2))))), t)
    C.check_core(DECLS, full, t, PURE)


def test_literal_case_requires_default():
    t = fun([INT], PURE, INT)
    no_default = C.Lam(("n",), C.Case(C.Var("n"), (C.LitBranch(0, C.Lit(1)),)))
    with pytest.raises(CoreTypeError):
        C.check_core(DECLS, no_default, t, PURE)
    ok = C.Lam(("n",), C.Case(C.Var("n"), (C.LitBranch(0, C.Lit(1)),), C.Default("m", C.Var("m"))))
    C.check_core(DECLS, ok, t, PURE)


def test_polymorphic_application_checks_kinds():
    env = {"f": ("poly", load_program("").binding("map").poly)}
    with pytest.raises(CoreTypeError):
        C.CoreChecker(DECLS).infer(env, PURE, C.PolyApp("f", (INT, INT, INT)))


def test_command_outside_ambient_rejected():
    with pytest.raises(CoreTypeError):
        C.CoreChecker(DECLS).infer({}, PURE, C.Cmd("get"))


def test_type_equality_is_up_to_shadowing():
    a = Ability(EMPTY, (Instance("Abort"), Instance("Abort")))
    assert C.ability_eq(a, Ability(EMPTY, (Instance("Abort"),)))
    assert not C.ability_eq(a, PURE)


CORPUS_OK = ["unit", "map", "index", "catch", "shortand", "sends", "pipe_dobe", "spacer_left",
             "spacer_right", "zeros", "mapi", "counter", "long_pipe", "sum_state"]


@pytest.mark.parametrize("name", CORPUS_OK)
def test_elaborated_program_checks(corpus, name):
    c = compile_program((corpus / f"{name}.fk").read_text())
    C.check_core(c.program.decls, c.core, C.core_type(c.typed.main_type), c.typed.top_ability)


def test_elaborated_pipe_checks_at_expected_type():
    c = compile_program("")
    b = next(b for b in c.core.bindings if b.name == "pipe")
    eps = next(v for v in b.poly.binders if isinstance(v, EffectVar))
    X, Y = TypeVar("X"), TypeVar("Y")
    ab = lambda *i: Ability(eps, (Instance("Abort"),) + i)  # noqa: E731
    expected = ThunkType(CoreCompType(
        (fun([], ab(Instance("Send", (X,))), DataType("Unit")), fun([], ab(Instance("Receive", (X,))), Y)),
        Peg(ab(), Y)))
    assert b.poly.body == expected
    env = {x.name: ("poly", x.poly) for x in c.core.bindings}
    C.check_core(c.program.decls, b.lam, expected, CONSOLE, env)
