"""Coverage and redundancy checks against a brute-force enumeration oracle."""

import pytest

from coverage_oracle import Oracle
from frankc.elaborate import check_coverage
from frankc.runtime import load_program
from frankc.syntax import PRequest, PVar

PRELUDE_DECLS = load_program("").decls

# Each source defines `f`; every one is missing at least one case.
INCOMPLETE = {
    "bool": "f : Bool -> Int\nf tt = 1",
    "two_lists": "f : List X -> List X -> Int\nf nil nil = 1\nf (cons _ _) (cons _ _) = 2",
    "nested_bool": "f : List Bool -> Int\nf nil = 1\nf (cons tt xs) = 2",
    "pair": "f : Pair Bool Bool -> Int\nf (pair tt _) = 1\nf (pair _ tt) = 2",
    "state_without_put": "f : S -> <State S>X -> X\nf _ x = x\nf s <get -> k> = f s (k s)",
    "no_value_clause": "f : <Abort>X -> X -> X\nf <aborting -> k> d = d",
    "char_literal": "f : Char -> Int\nf 'a' = 1\nf 'b' = 2",
    "int_literal": "f : Int -> Bool\nf 0 = tt",
    "pipe_missing_row": ("f : <Send X>Unit -> <Receive X>Y -> [Abort]Y\n"
                         "f <send x -> s> <receive -> r> = f (s unit) (r x)\nf <_> y = y"),
    "nat_depth_two": "f : Nat -> Int\nf zero = 1\nf (suc zero) = 2",
    "request_argument": ("f : <State Bool>X -> X\nf x = x\nf <get -> k> = f (k tt)\n"
                         "f <put tt -> k> = f (k unit)"),
}


def matrix(src, name="f"):
    prog = load_program(src)
    b = prog.binding(name)
    return prog.decls, b.poly.body.comp, b.comp.clauses


@pytest.mark.parametrize("name", sorted(INCOMPLETE))
def test_incomplete_matrix_witness(name):
    decls, comp, clauses = matrix(INCOMPLETE[name])
    report = check_coverage(decls, comp, clauses)
    oracle = Oracle(decls, comp, clauses)
    assert oracle.uncovered(), "oracle must agree the matrix is incomplete"
    assert report.status == "incomplete"
    instances = oracle.instances_of(report.witness_patterns)
    assert instances, f"witness {report.witness} describes no input"
    assert not any(oracle.covered(v) for v in instances), f"witness {report.witness} is matched by a row"


def test_curated_set_has_at_least_ten():
    assert len(INCOMPLETE) >= 10


def test_witness_text():
    decls, comp, clauses = matrix(INCOMPLETE["bool"])
    assert check_coverage(decls, comp, clauses).witness == ("ff",)
    decls, comp, clauses = matrix(INCOMPLETE["no_value_clause"])
    report = check_coverage(decls, comp, clauses)
    assert isinstance(report.witness_patterns[0], PVar)
    decls, comp, clauses = matrix(INCOMPLETE["state_without_put"])
    w = check_coverage(decls, comp, clauses).witness_patterns
    assert isinstance(w[1], PRequest) and w[1].command == "put"


@pytest.mark.parametrize("name", ["state", "pipe", "catch", "map", "append", "if", "iffy"])
def test_prelude_operators_complete(name):
    prog = load_program("")
    b = prog.binding(name)
    report = check_coverage(prog.decls, b.poly.body.comp, b.comp.clauses)
    assert report.status == "complete" and not report.redundant
    oracle = Oracle(prog.decls, b.poly.body.comp, b.comp.clauses)
    assert not oracle.uncovered()


def test_uninhabited_peg_without_value_clause_is_complete(corpus):
    prog = load_program((corpus / "mapi.fk").read_text())
    b = prog.binding("first")
    assert check_coverage(prog.decls, b.poly.body.comp, b.comp.clauses).status == "complete"


@pytest.mark.parametrize("src, redundant", [
    ("f : Bool -> Int\nf tt = 1\nf tt = 1\nf ff = 2", {1}),
    ("f : Bool -> Int\nf x = 1\nf tt = 2", {1}),
])
def test_duplicated_rows_redundant(src, redundant):
    decls, comp, clauses = matrix(src)
    report = check_coverage(decls, comp, clauses)
    assert report.status == "complete" and report.redundant == frozenset(redundant)


def test_duplicate_request_rows_redundant():
    src = "f : <State Int>X -> X\nf x = x\nf <get -> k> = f (k 1)\nf <get -> k> = f (k 2)\nf <put _ -> k> = f (k unit)"
    decls, comp, clauses = matrix(src)
    assert check_coverage(decls, comp, clauses).redundant == frozenset({2})


@pytest.mark.parametrize("src", [
    "f : Bool -> Bool -> Int\nf tt tt = 1\nf _ ff = 2\nf ff _ = 3",
    "f : List Bool -> Int\nf nil = 0\nf (cons tt _) = 1\nf (cons ff nil) = 2\nf (cons ff (cons _ _)) = 3",
    "f : Char -> Int\nf 'a' = 1\nf c = 2",
])
def test_complete_matrices_agree_with_oracle(src):
    decls, comp, clauses = matrix(src)
    assert check_coverage(decls, comp, clauses).status == "complete"
    assert not Oracle(decls, comp, clauses).uncovered()
