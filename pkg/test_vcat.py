import random
from fractions import Fraction

import pytest

from generators import random_symmetric_vcat
from models import InputError, PreconditionError, StructuralError, UnsupportedOperation
from quantale import bool2, diamond4, luk01
from vcat import (
    VCat, VsSpace, check_continuity_of_vfunctors, check_vs_closed, discrete, enumerate_nonexpansive, equivalence_classes,
    in_power_closure, indiscrete, initial_structure, is_nonexpansive, l_closure, matrix_from_rows,
    natural_order, power_hom, predicate_structure, separated_quotient, symmetrize, transitive_closure, validate_vcat, vcat_from_document,
    vcat_to_document
)

F = Fraction


def luk(rows):
    q = luk01()
    return VCat(q, tuple(f"x{i}" for i in range(len(rows))), matrix_from_rows(q, rows))


def test_discrete_and_indiscrete_are_valid():
    for X in (discrete(diamond4(), ["a", "b", "c"]), indiscrete(luk01(), ["a", "b"])):
        report = validate_vcat(X, require_symmetric=True)
        assert report.valid and report.symmetric


def test_triangle_violation_has_witness():
    X = luk([["0", "1/4", "1"], ["1/4", "0", "1/4"], ["1", "1/4", "0"]])
    report = validate_vcat(X)
    assert not report.valid
    transitivity = next(law for law in report.laws if law.law == "transitivity")
    assert transitivity.witness == ["x0", "x1", "x2"]


def test_transitive_closure_repairs_triangle():
    X = transitive_closure(luk([["0", "1/4", "1"], ["1/4", "0", "1/4"], ["1", "1/4", "0"]]))
    assert X.a("x0", "x2") == F(1, 2)
    assert validate_vcat(X).valid


def test_shape_and_carrier_errors():
    with pytest.raises(StructuralError):
        VCat(luk01(), ("a", "b"), ((0,),))
    with pytest.raises(StructuralError):
        validate_vcat(VCat(bool2(), ("a",), (("maybe",),)))


def test_symmetrize_takes_pointwise_meet():
    X = luk([["0", "1/4"], ["1/2", "0"]])
    assert symmetrize(X).matrix == ((0, F(1, 2)), (F(1, 2), 0))


def test_separated_quotient_merges_distance_zero_points():
    X = luk([["0", "0", "1/2"], ["0", "0", "1/2"], ["1/2", "1/2", "0"]])
    assert equivalence_classes(X) == [["x0", "x1"], ["x2"]]
    quotient, projection = separated_quotient(X)
    assert quotient.states == ("x0", "x2")
    assert projection == {"x0": "x0", "x1": "x0", "x2": "x2"}
    with pytest.raises(PreconditionError):
        separated_quotient(luk([["0", "1/4"], ["1/2", "0"]]))


def test_initial_structure_of_predicates():
    q = luk01()
    X = predicate_structure(q, ["a", "b", "c"], [(F(0), F(1, 4), F(1)), (F(0), F(1, 2), F(1, 2))])
    assert X.matrix[0][1] == F(1, 2)
    assert X.matrix[1][2] == F(3, 4)
    assert validate_vcat(X, require_symmetric=True).valid


def test_initial_structure_rejects_foreign_quantale_and_empty_carrier():
    with pytest.raises(StructuralError):
        initial_structure(luk01(), ["a"], [((F(0),), VsSpace(bool2()))])
    with pytest.raises(InputError):
        initial_structure(luk01(), [], [])


def test_bool2_predicates_induce_discrete_structure():
    q = bool2()
    X = predicate_structure(q, ["a", "b"], [("top", "bot")])
    assert X == discrete(q, ["a", "b"])


def test_enumerate_nonexpansive_bool2_discrete_gives_all_maps():
    X = discrete(bool2(), ["a", "b"])
    assert len(list(enumerate_nonexpansive(X, bool2().elements()))) == 4
    assert list(enumerate_nonexpansive(indiscrete(bool2(), ["a", "b"]), bool2().elements())) == \
        [("bot", "bot"), ("top", "top")]


def test_enumerate_nonexpansive_respects_limit_and_lipschitz_bound():
    X = luk([["0", "1/4"], ["1/4", "0"]])
    grid = luk01().grid(F(1, 4))
    maps = list(enumerate_nonexpansive(X, grid))
    assert all(abs(f[0] - f[1]) <= F(1, 4) for f in maps)
    assert len(maps) == 5 + 4 + 4
    assert len(list(enumerate_nonexpansive(X, grid, limit=3))) == 3
    assert all(is_nonexpansive(X, f) for f in maps)


def test_l_closure_on_bool2_is_equivalence_saturation():
    q = bool2()
    X = VCat(q, ("a", "b", "c"), (("top", "top", "bot"), ("top", "top", "bot"), ("bot", "bot", "top")))
    assert l_closure(X, ["a"]) == ["a", "b"]
    assert l_closure(X, []) == []


def test_power_closure_singleton_in_luk01():
    q = luk01()
    f = (F(1, 4), F(1, 2))
    assert in_power_closure(q, f, [f])
    assert not in_power_closure(q, (F(1, 4), F(3, 4)), [f])


@pytest.mark.parametrize("q, n, count", [(bool2(), 2, 2), (bool2(), 3, 5), (diamond4(), 2, 4)])
def test_vfunctors_are_l_closed(q, n, count):
    result = check_vs_closed(q, n)
    assert result.passed, result.witness
    assert result.checked == count


def test_vs_closed_needs_a_finite_quantale():
    with pytest.raises(UnsupportedOperation):
        check_vs_closed(luk01(), 2)


@pytest.mark.parametrize("seed", range(5))
def test_vfunctors_are_continuous(seed):
    rng = random.Random(seed)
    q = bool2()
    X = random_symmetric_vcat(q, ("a", "b", "c"), rng)
    for f in enumerate_nonexpansive(X, q.elements()):
        assert check_continuity_of_vfunctors(X, f).passed
    assert check_continuity_of_vfunctors(X).passed


def test_expansive_map_is_not_continuous():
    q = bool2()
    X = indiscrete(q, ["a", "b"])
    result = check_continuity_of_vfunctors(X, ("top", "bot"))
    assert not result.passed
    assert result.witness == [["top", "bot"], ["a"]]


def test_document_roundtrip_preserves_structure():
    X = transitive_closure(luk([["0", "1/3", "1"], ["1/3", "0", "1"], ["1", "1", "0"]]))
    assert vcat_from_document(vcat_to_document(X).model_dump()) == X


def test_natural_order_reads_unit_entries():
    X = luk([["0", "1/2"], ["0", "0"]])
    assert natural_order(X) == {("x0", "x0"), ("x1", "x0"), ("x1", "x1")}


def test_power_hom():
    q = luk01()
    h, l = [F(1, 4), F(1, 2)], [F(1, 2), F(1, 4)]
    assert power_hom(q, h, l) == F(1, 4)
    assert power_hom(q, l, h) == F(1, 4)
    assert power_hom(q, h, h) == 0
    assert power_hom(q, h, l, symmetric=True) == F(1, 4)
    with pytest.raises(StructuralError):
        power_hom(q, h, l[:1])
