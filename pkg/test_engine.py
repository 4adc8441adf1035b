import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from engine import (
    FormulaSpace, bd_fixpoint, check_adequacy, check_expressivity, check_morphism_invariance, distinguishing_formula,
    eval_formula, evaluate, is_coalgebra_morphism, iterate_bd, logical_distance, morphism_violation,
    partition_refinement, quotient_coalgebra
)
from formulas import TOP, parse_formula
from generators import random_coalgebra
from harness import fig1_document
from models import InputError, PreconditionError, UnsupportedOperation
from systems import DEFAULT_GRID, FunctorKind, PredicateLifting, lifted_matrix, load_coalgebra
from vcat import Predicate, validate_vcat

F = Fraction
FIXTURES = Path(__file__).parent / "fixtures"

LTS_CLASSES = [["p0"], ["p1"], ["p2", "p3", "q3", "q4"], ["q0"], ["q1"], ["q2"]]


def load(name):
    return load_coalgebra(json.loads((FIXTURES / f"{name}.json").read_text()))


@pytest.fixture
def fig1():
    return load_coalgebra(fig1_document(F(1, 10)))


@pytest.fixture
def lts():
    return load("lts_small")


# bd

@pytest.mark.parametrize("epsilon", [F(0), F(1, 10), F(1, 4), F(1, 2)])
def test_fig1_roots_are_epsilon_apart(epsilon):
    bd = bd_fixpoint(load_coalgebra(fig1_document(epsilon)))
    assert bd.converged
    assert bd.value("root_left", "root_right") == epsilon
    assert bd.value("stop", "loop") == 1


def test_fig1_converges_in_three_steps(fig1):
    bd = bd_fixpoint(fig1)
    assert bd.steps == 3
    assert bd.residual == 0


def test_metric_ts_distances():
    bd = bd_fixpoint(load("metric_ts"))
    assert bd.value("p", "r") == F(3, 4)
    assert bd.value("q", "s") == F(3, 4)
    assert bd.value("p", "q") == 1
    assert bd.value("p", "p") == 0


def test_signed_weighted_distances():
    bd = bd_fixpoint(load("signed_weighted"))
    assert bd.value("s", "u") == F(1, 4)
    assert bd.value("s", "t") == F(1, 4)
    assert bd.value("t", "u") == F(1, 32)


def test_paraconsistent_distances_under_box_sup_alone():
    c = load("paraconsistent")
    bd = bd_fixpoint(c, liftings=[PredicateLifting("box_sup", FunctorKind.PARA_POWERSET)])
    assert bd.value("x", "y") == "N"
    assert bd.value("x", "z") == "B"
    assert bd.value("y", "z") == "bot"
    assert bd.value("x", "w") == "bot"
    assert bd.value("w", "w") == "top"


def test_paraconsistent_arrow_lifting_separates_everything():
    bd = bd_fixpoint(load("paraconsistent"))
    assert bd.equivalence() == [["x"], ["y"], ["z"], ["w"]]
    assert bd.value("x", "y") == "bot"


def test_lts_bd_matches_partition_refinement(lts):
    assert bd_fixpoint(lts).equivalence() == LTS_CLASSES
    assert partition_refinement(lts) == LTS_CLASSES


@pytest.mark.parametrize("seed", range(10))
def test_random_lts_bd_matches_partition_refinement(seed):
    c = random_coalgebra(FunctorKind.LTS, 8, random.Random(seed))
    assert bd_fixpoint(c).equivalence() == partition_refinement(c)


def test_partition_refinement_is_lts_only():
    with pytest.raises(UnsupportedOperation):
        partition_refinement(load("metric_ts"))


def test_iterates_descend_and_end_at_the_fixpoint(fig1):
    history = iterate_bd(fig1)
    assert all(u == 0 for row in history[0] for u in row)
    for before, after in zip(history, history[1:]):
        assert all(a <= b for row_a, row_b in zip(before, after) for a, b in zip(row_a, row_b))
    assert history[-1] == bd_fixpoint(fig1).matrix


def test_invalid_coalgebra_is_a_precondition_failure():
    raw = fig1_document(F(1, 10))
    raw["transitions"]["root_left"] = {"a": {"stop": "1/2"}}
    with pytest.raises(PreconditionError):
        bd_fixpoint(load_coalgebra(raw))


def test_max_iter_reports_non_convergence(fig1):
    bd = bd_fixpoint(fig1, max_iter=1)
    assert not bd.converged
    assert bd.steps == 1


def test_distance_document(fig1):
    document = bd_fixpoint(fig1).to_document()
    assert document.provenance == "bd"
    assert document.order == "reversed-numeric"
    assert document.matrix[0][1] == "1/10"


# formulas

def test_nested_expectation_gives_half_and_half_plus_epsilon(fig1):
    phi = parse_formula("(m exp a (m exp a (top)))", fig1.quantale)
    predicate = eval_formula(phi, fig1)
    assert predicate("root_left") == F(1, 2)
    assert predicate("root_right") == F(3, 5)
    assert predicate.nonexpansive


def test_modal_resolution_errors(lts):
    with pytest.raises(InputError):
        evaluate(parse_formula("(m dia (top))", lts.quantale), lts)
    with pytest.raises(InputError):
        evaluate(parse_formula("(m exp a (top))", lts.quantale), lts)


def test_diamond_evaluation(lts):
    predicate = eval_formula(parse_formula("(m dia a (top))", lts.quantale), lts)
    assert [lts.states[i] for i, u in enumerate(predicate.values) if u == "top"] == ["p0", "q0"]


# ld and distinguishing formulas

def test_ld_equals_bd_on_finite_lts(lts):
    bd = bd_fixpoint(lts)
    ld, basis = logical_distance(lts, depth=bd.steps)
    assert ld.matrix == bd.matrix
    assert ld.converged
    assert basis[0] == TOP


def test_ld_depth_zero_is_indiscrete(fig1):
    ld, basis = logical_distance(fig1, depth=0)
    assert basis == [TOP]
    assert all(u == 0 for row in ld.matrix for u in row)
    with pytest.raises(InputError):
        logical_distance(fig1, depth=-1)


def test_distinguishing_formula_for_branching(lts):
    formula, gap = distinguishing_formula(lts, "p0", "q0")
    assert gap == "bot"
    values = evaluate(formula, lts)
    assert values[lts.base.index("p0")] != values[lts.base.index("q0")]


def test_distinguishing_formula_reaches_epsilon(fig1):
    formula, gap = distinguishing_formula(fig1, "root_left", "root_right", depth=2)
    assert gap == F(1, 10)
    assert formula.depth == 2


def test_distinguishing_edge_cases(lts):
    with pytest.raises(InputError):
        distinguishing_formula(lts, "p0", "p0")
    assert distinguishing_formula(lts, "p0", "q0", budget=0) == (TOP, "top")


# checks

@pytest.mark.parametrize("name", ["metric_ts", "signed_weighted", "paraconsistent", "lts_small"])
def test_adequacy_on_fixtures(name):
    report = check_adequacy(load(name), depth=2)
    assert report.passed, report.violations
    assert report.formulas_checked > 1


def test_adequacy_on_fig1(fig1):
    assert check_adequacy(fig1, depth=2).passed


def test_expressivity_is_exact_on_finite_lts(lts):
    steps = bd_fixpoint(lts).steps
    report = check_expressivity(lts, schedule=range(steps + 1))
    assert report.passed
    assert report.entries[-1].exact
    assert report.entries[0].depth == 0


def test_expressivity_gap_shrinks_on_fig1(fig1):
    report = check_expressivity(fig1, schedule=(0, 1, 2))
    assert report.monotone
    assert report.entries[-1].gap == "0"


# morphisms

def test_quotient_by_bisimilarity_is_a_morphism(lts):
    d, mapping = quotient_coalgebra(lts, LTS_CLASSES)
    assert d.states == ("p0", "p1", "p2", "q0", "q1", "q2")
    assert mapping["q4"] == "p2"
    assert is_coalgebra_morphism(lts, d, mapping)
    report = check_morphism_invariance(lts, d, mapping, depth=2)
    assert report.passed
    assert report.pairs_checked == lts.size ** 2


def test_quotient_needs_a_partition(lts):
    with pytest.raises(InputError):
        quotient_coalgebra(lts, [["p0", "p1"]])


def test_invalid_morphism_is_rejected(lts):
    collapse = {x: "p0" for x in lts.states}
    assert morphism_violation(lts, lts, collapse) == ["p0"]
    with pytest.raises(PreconditionError):
        check_morphism_invariance(lts, lts, collapse)


# invariants

@pytest.mark.parametrize("kind", list(FunctorKind))
@pytest.mark.parametrize("seed", range(3))
def test_every_bd_iterate_is_a_vcategory(kind, seed):
    c = random_coalgebra(kind, 4, random.Random(seed))
    for matrix in iterate_bd(c):
        assert validate_vcat(c.base.with_matrix(matrix)).valid


@pytest.mark.parametrize("kind", [FunctorKind.LTS, FunctorKind.PARA_POWERSET])
@pytest.mark.parametrize("seed", range(3))
def test_finite_bd_is_a_fixpoint(kind, seed):
    c = random_coalgebra(kind, 4, random.Random(seed))
    bd = bd_fixpoint(c)
    again = lifted_matrix(c, bd.vcat, c.liftings, "lp", DEFAULT_GRID)
    assert tuple(map(tuple, again)) == tuple(map(tuple, bd.matrix))


@pytest.mark.parametrize("kind", [FunctorKind.LTS, FunctorKind.PARA_POWERSET])
@pytest.mark.parametrize("seed", range(3))
def test_enumerated_formulas_are_nonexpansive_for_bd(kind, seed):
    c = random_coalgebra(kind, 4, random.Random(seed))
    bd = bd_fixpoint(c)
    space = FormulaSpace(c)
    space.expand_to(2)
    assert len(space.explored) > 1
    for vector, formula in space.explored.items():
        assert Predicate(bd.vcat, vector).nonexpansive, formula


@pytest.mark.parametrize("name", ["lts_small", "paraconsistent", "metric_ts"])
def test_fixture_formulas_are_nonexpansive_for_bd(name):
    c = load(name)
    bd = bd_fixpoint(c)
    space = FormulaSpace(c)
    space.expand_to(2)
    for vector, formula in space.explored.items():
        assert Predicate(bd.vcat, vector).nonexpansive, formula


@pytest.mark.parametrize("name, depth", [("lts_small", 4), ("fig1", 2)])
def test_ld_is_antitone_in_depth(name, depth, fig1):
    c = fig1 if name == "fig1" else load(name)
    q = c.quantale
    space = FormulaSpace(c)
    space.expand_to(depth)
    for shallow, deep in zip(space.layers, space.layers[1:]):
        for row_s, row_d in zip(shallow, deep):
            assert all(q.leq(u, v) for u, v in zip(row_d, row_s))


def test_formula_space_stops_expanding_once_saturated(lts):
    first = FormulaSpace(lts)
    first.expand_to(40)
    second = FormulaSpace(lts)
    second.expand_to(80)
    assert first.saturated and second.saturated
    assert second.evaluations == first.evaluations
    assert len(second.layers) == 81
    assert second.basis_sizes[-1] == first.basis_sizes[-1]
    assert second.layers[-1] == first.layers[-1]
    assert lts.base.with_matrix(second.layers[-1]).matrix == bd_fixpoint(lts).matrix


@pytest.mark.parametrize("seed", range(3))
def test_ld_at_carrier_depth_equals_bd_on_random_lts(seed):
    c = random_coalgebra(FunctorKind.LTS, 12, random.Random(seed))
    ld, _ = logical_distance(c, depth=c.size)
    assert ld.matrix == bd_fixpoint(c).matrix
    assert ld.steps == c.size


# weighted modalities with arbitrary shift

def test_weighted_modality_accepts_any_shift():
    c = load("signed_weighted")
    q = c.quantale
    up = eval_formula(parse_formula('(m wgt a "1/8" (tensor "1/2" (top)))', q), c)
    assert [up(x) for x in c.states] == [F(1, 4), F(1, 8), F(1, 8)]
    down = eval_formula(parse_formula('(m wgt a "-1/16" (tensor "1/2" (top)))', q), c)
    assert [down(x) for x in c.states] == [F(1, 16), 0, 0]
    unlabelled = evaluate(parse_formula('(m wgt "1/8" (tensor "1/2" (top)))', q), c)
    assert unlabelled == up.values
    assert evaluate(parse_formula('(m wgt a "1/2" (top))', q), c) == (F(1, 2),) * 3


def test_weighted_modality_needs_a_known_label():
    c = load("signed_weighted")
    with pytest.raises(InputError):
        evaluate(parse_formula('(m wgt b "1/8" (top))', c.quantale), c)
