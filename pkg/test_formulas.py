from fractions import Fraction

import pytest

from formulas import (
    TOP, And, HomS, Modal, Or, Tensor, Top, bottom_formula, conjunction, disjunction, format_formula, parse_formula
)
from models import InputError
from quantale import diamond4, luk01, product

F = Fraction


@pytest.mark.parametrize("text", [
    "(top)",
    "(and (top) (m dia a (top)))",
    '(or (tensor "1/4" (top)) (homs "1/2" (m exp a (top))))',
    '(m wgt a "1/2" (top))',
    "(m o)",
])
def test_format_inverts_parse(text):
    q = luk01()
    assert format_formula(parse_formula(text, q), q) == text


def test_parse_builds_expected_tree():
    phi = parse_formula('(m dia a (and (m dia b (top)) (m dia c (top))))', diamond4())
    assert phi == Modal("dia", And(Modal("dia", TOP, "b"), Modal("dia", TOP, "c")), "a")
    assert phi.depth == 2
    assert phi.size == 6


def test_variadic_connectives_fold_left():
    phi = parse_formula("(or (top) (top) (m o))", luk01())
    assert phi == Or(Or(TOP, TOP), Modal("o"))


def test_constants_are_parsed_in_the_quantale():
    phi = parse_formula('(homs "N" (top))', diamond4())
    assert phi == HomS("N", TOP)
    assert parse_formula('(tensor "1/3" (top))', luk01()).value == F(1, 3)


def test_product_constants():
    q = product(luk01(), luk01())
    phi = parse_formula('(tensor "[1/2,1/4]" (top))', q)
    assert phi.value == (F(1, 2), F(1, 4))
    assert format_formula(phi, q) == '(tensor "[1/2,1/4]" (top))'


@pytest.mark.parametrize("text", [
    "",
    "(top",
    "(and (top))",
    "(tensor (top))",
    '(tensor "2" (top))',
    "(nope)",
    "(top) (top)",
    "(m)",
])
def test_parse_errors(text):
    with pytest.raises(InputError):
        parse_formula(text, luk01())


def test_equal_formulas_share_hash():
    a = And(Tensor(F(1, 2), TOP), Modal("exp", TOP, "a"))
    b = And(Tensor(F(1, 2), Top()), Modal("exp", Top(), "a"))
    assert a == b and hash(a) == hash(b)
    assert a != And(Tensor(F(1, 4), TOP), Modal("exp", TOP, "a"))


def test_empty_connectives():
    q = luk01()
    assert conjunction([]) is TOP
    assert disjunction([], q) == bottom_formula(q) == Tensor(F(1), TOP)
