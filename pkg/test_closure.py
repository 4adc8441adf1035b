import random
from fractions import Fraction

import pytest

from closure import (
    ClosureTag, PredicateSet, check_c_continuity, check_characterizes_initiality, check_closure_laws,
    check_decomposition, close, initiality_trial, is_dense, parse_closure, prop_algebra_closure,
    sample_initial_instance, sample_noninitial_instance
)
from generators import random_coalgebra
from harness import fig1_document
from models import InputError, StructuralError, UnsupportedOperation
from quantale import bool2, diamond4, luk01
from systems import FunctorKind, load_coalgebra
from vcat import discrete, indiscrete, predicate_structure

F = Fraction
T, B = "top", "bot"


@pytest.fixture
def pair():
    return discrete(bool2(), ["x", "y"])


def test_parse_closure():
    assert parse_closure("CINFSUP") == ClosureTag.CINFSUP
    with pytest.raises(InputError):
        parse_closure("sup")


def test_predicate_set_validation(pair):
    with pytest.raises(StructuralError):
        PredicateSet.of(pair, [(T,)])
    with pytest.raises(StructuralError):
        PredicateSet.of(pair, [(T, "N")])
    A = PredicateSet.of(pair, [(T, B), [T, B]])
    assert len(A) == 1 and (T, B) in A


def test_propositional_closure_of_one_separating_map(pair):
    A = prop_algebra_closure(pair, [(T, B)])
    assert set(A.members) == {(T, T), (T, B), (B, T), (B, B)}
    assert not A.truncated


def test_propositional_closure_truncates(pair):
    A = prop_algebra_closure(pair, [(T, B)], width=2)
    assert A.truncated
    assert len(A) == 2


def test_identity_closure(pair):
    A = PredicateSet.of(pair, [(T, B)])
    assert close(ClosureTag.ID, pair, A) is A


def test_inf_closure_adds_meets_and_top(pair):
    A = PredicateSet.of(pair, [(T, B), (B, T)])
    assert set(close(ClosureTag.INF, pair, A).members) == {(T, T), (T, B), (B, T), (B, B)}


def test_cinfsup_closure_adds_joins_and_bottom(pair):
    A = PredicateSet.of(pair, [(T, B)])
    assert set(close(ClosureTag.CINFSUP, pair, A).members) == {(T, B), (B, B)}
    A = PredicateSet.of(pair, [(T, B), (B, T)])
    assert (T, T) in close(ClosureTag.CINFSUP, pair, A)


def test_l_closure_in_bool2_adds_nothing_new(pair):
    A = PredicateSet.of(pair, [(T, B)])
    assert set(close(ClosureTag.L, pair, A).members) == {(T, B)}


def test_fun_closure_is_every_functor_of_the_induced_structure():
    X = indiscrete(bool2(), ["x", "y"])
    A = PredicateSet.of(X, [(T, T)])
    assert set(close(ClosureTag.FUN, X, A).members) == {(T, T), (B, B)}


def test_enumerated_closures_need_a_finite_quantale():
    X = discrete(luk01(), ["x"])
    A = PredicateSet.of(X, [(F(1, 2),)])
    with pytest.raises(UnsupportedOperation):
        close(ClosureTag.INF, X, A)
    assert (F(1, 2),) in close(ClosureTag.L, X, A)


def test_density(pair):
    algebra = prop_algebra_closure(pair, [(T, B)])
    assert all(is_dense(op, pair, algebra) for op in ClosureTag)
    assert not is_dense(ClosureTag.INF, pair, PredicateSet.of(pair, [(T, T)]))


@pytest.mark.parametrize("op", list(ClosureTag))
def test_density_characterizes_initiality_over_bool2(op):
    report = check_characterizes_initiality(op, bool2(), size_bound=3, trials=8, seed=5)
    assert report.passed, [t.witness for t in report.trials if not t.passed]
    assert report.suite == f"sw-{op.value}"


def test_initiality_check_is_finite_only():
    with pytest.raises(UnsupportedOperation):
        check_characterizes_initiality(ClosureTag.L, luk01())


def test_initiality_trial_is_reproducible():
    first = initiality_trial(ClosureTag.INF, diamond4(), 3, seed=42)
    second = initiality_trial(ClosureTag.INF, diamond4(), 3, seed=42)
    assert first.summary == second.summary


def test_sampled_instances():
    rng = random.Random(1)
    X, maps = sample_initial_instance(diamond4(), 3, rng, generators=2)
    assert len(maps) == 2
    assert X == predicate_structure(diamond4(), X.states, maps)
    Y, _ = sample_noninitial_instance(diamond4(), 3, rng)
    assert Y.size == 3


def test_decomposition_on_initial_bool2_instance(pair):
    A = PredicateSet.of(pair, [(T, B)])
    for f in [(T, B), (B, T), (T, T), (B, B)]:
        assert check_decomposition(pair, A, f).holds


def test_decomposition_preconditions():
    X = indiscrete(bool2(), ["x", "y"])
    report = check_decomposition(X, PredicateSet.of(X, [(T, B)]), (T, T))
    assert report.holds is None
    assert report.precondition == "predicate set is not initial"

    X = discrete(bool2(), ["x", "y"])
    A = PredicateSet.of(X, [(T, T)])
    report = check_decomposition(X, A, (T, B))
    assert report.holds is None

    Y = discrete(luk01(), ["x"])
    assert check_decomposition(Y, PredicateSet.of(Y, [(F(0),)]), (F(0),)).holds is None


@pytest.mark.parametrize("op", [ClosureTag.INF, ClosureTag.CINFSUP, ClosureTag.L, ClosureTag.FUN])
def test_closure_laws_on_diamond4(op):
    rng = random.Random(9)
    X = discrete(diamond4(), ["x", "y"])
    values = diamond4().elements()
    samples = []
    for _ in range(4):
        small = [tuple(rng.choice(values) for _ in range(2)) for _ in range(2)]
        large = small + [tuple(rng.choice(values) for _ in range(2))]
        samples.append((PredicateSet.of(X, small), PredicateSet.of(X, large)))
    report = check_closure_laws(op, samples)
    assert report.passed, report.laws


def test_diamond_is_cinfsup_continuous():
    rng = random.Random(4)
    c = random_coalgebra(FunctorKind.LTS, 3, rng, labels=("a",))
    values = bool2().elements()
    samples = []
    for _ in range(3):
        members = [tuple(rng.choice(values) for _ in range(3)) for _ in range(2)]
        samples.append((c, PredicateSet.of(c.base, members)))
    report = check_c_continuity(c.liftings[0], ClosureTag.CINFSUP, samples)
    assert report.passed
    assert report.checks > 0


def test_expectation_is_l_continuous():
    c = load_coalgebra(fig1_document(F(1, 4)))
    A = PredicateSet.of(c.base, [(F(0), F(1, 4), F(1), F(1, 2)), (F(1, 8), F(1, 4), F(3, 4), F(1, 2))])
    report = check_c_continuity(c.liftings[0], ClosureTag.L, [(c, A)])
    assert report.passed
    assert report.checks == len(c.transitions)


@pytest.mark.parametrize("q", [bool2(), diamond4()])
def test_constant_generators_on_a_discrete_carrier_are_never_initial(q):
    rng = random.Random(3)
    for size in (1, 2, 3):
        X, maps = sample_noninitial_instance(q, size, rng, constant=True)
        assert X.size >= 2
        assert predicate_structure(q, X.states, maps).matrix != X.matrix
        A = prop_algebra_closure(X, maps)
        assert not is_dense(ClosureTag.FUN, X, A)


def test_initiality_trials_exercise_non_initial_instances():
    report = check_characterizes_initiality(ClosureTag.INF, diamond4(), trials=9, seed=0)
    assert report.passed
    assert sum(not t.summary["initial"] for t in report.trials) >= 3
    assert all(not t.summary["fun_dense"] for t in report.trials if t.seed % 3 == 1)
