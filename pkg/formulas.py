"""
Formulas of the quantitative modal logic and their s-expression syntax:

    (top) (and φ ψ) (or φ ψ) (tensor "1/4" φ) (homs "1/4" φ)
    (m exp φ) (m dia a φ) (m wgt a "1/8" φ) (m o)
"""
import re
from dataclasses import dataclass, fields
from fractions import Fraction
from functools import reduce
from typing import Any, Iterable, List, Optional, Sequence

from models import InputError, format_rational, parse_rational
from quantale import Quantale


class Formula:
    """Immutable AST node; hash, size and modal depth are computed once at construction"""

    def _children(self) -> Sequence["Formula"]:
        return ()

    def _fields(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def __post_init__(self):
        children = self._children()
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._fields()))
        object.__setattr__(self, "size", 1 + sum(c.size for c in children))
        depth = max((c.depth for c in children), default=0)
        object.__setattr__(self, "depth", depth + 1 if isinstance(self, Modal) else depth)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return type(self) is type(other) and self._hash == other._hash and self._fields() == other._fields()


@dataclass(frozen=True, eq=False)
class Top(Formula):
    pass


@dataclass(frozen=True, eq=False)
class And(Formula):
    left: Formula
    right: Formula

    def _children(self):
        return self.left, self.right


@dataclass(frozen=True, eq=False)
class Or(Formula):
    left: Formula
    right: Formula

    def _children(self):
        return self.left, self.right


@dataclass(frozen=True, eq=False)
class Tensor(Formula):
    value: Any
    arg: Formula

    def _children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=False)
class HomS(Formula):
    value: Any
    arg: Formula

    def _children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=False)
class Modal(Formula):
    name: str
    arg: Optional[Formula] = None
    label: Optional[str] = None
    param: Optional[Fraction] = None

    def _children(self):
        return () if self.arg is None else (self.arg,)


TOP = Top()


def bottom_formula(q: Quantale) -> Formula:
    return Tensor(q.bottom, TOP)


def conjunction(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    return reduce(And, parts) if parts else TOP


def disjunction(parts: Iterable[Formula], q: Quantale) -> Formula:
    parts = list(parts)
    return reduce(Or, parts) if parts else bottom_formula(q)


# Parsing

_TOKEN = re.compile(r'\s*(?:(\()|(\))|"([^"]*)"|([^\s()"]+))')


def _tokenize(text: str) -> List[tuple]:
    tokens = []
    position = 0
    text = text.strip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if not match or match.end() == position:
            raise InputError(f"Cannot tokenize formula at position {position}: {text[position:position + 10]!r}")
        position = match.end()
        opening, closing, quoted, atom = match.groups()
        if opening:
            tokens.append(("(", None))
        elif closing:
            tokens.append((")", None))
        elif quoted is not None:
            tokens.append(("str", quoted))
        elif atom:
            tokens.append(("atom", atom))
    return tokens


def _constant(q: Quantale, raw: str) -> Any:
    if raw.startswith("[") and raw.endswith("]"):
        return q.parse_value([part.strip() for part in raw[1:-1].split(",")])
    return q.parse_value(raw)


def parse_formula(text: str, q: Quantale) -> Formula:
    tokens = _tokenize(text)
    formula, position = _parse(tokens, 0, q)
    if position != len(tokens):
        raise InputError("Trailing input after formula")
    return formula


def _expect(tokens: List[tuple], position: int, kind: str) -> int:
    if position >= len(tokens) or tokens[position][0] != kind:
        raise InputError(f"Expected {kind!r} at token {position}")
    return position + 1


def _parse(tokens: List[tuple], position: int, q: Quantale):
    position = _expect(tokens, position, "(")
    if position >= len(tokens) or tokens[position][0] != "atom":
        raise InputError("Expected an operator")
    op = tokens[position][1]
    position += 1
    if op == "top":
        return TOP, _expect(tokens, position, ")")
    if op in ("and", "or"):
        parts = []
        while position < len(tokens) and tokens[position][0] == "(":
            part, position = _parse(tokens, position, q)
            parts.append(part)
        if len(parts) < 2:
            raise InputError(f"({op} ...) needs at least two arguments")
        node = And if op == "and" else Or
        return reduce(node, parts), _expect(tokens, position, ")")
    if op in ("tensor", "homs"):
        if position >= len(tokens) or tokens[position][0] != "str":
            raise InputError(f"({op} ...) needs a quoted constant")
        value = _constant(q, tokens[position][1])
        arg, position = _parse(tokens, position + 1, q)
        node = Tensor if op == "tensor" else HomS
        return node(value, arg), _expect(tokens, position, ")")
    if op == "m":
        if position >= len(tokens) or tokens[position][0] != "atom":
            raise InputError("(m ...) needs a modality name")
        name = tokens[position][1]
        position += 1
        label, param, arg = None, None, None
        if position < len(tokens) and tokens[position][0] == "atom":
            label = tokens[position][1]
            position += 1
        if position < len(tokens) and tokens[position][0] == "str":
            param = parse_rational(tokens[position][1])
            position += 1
        if position < len(tokens) and tokens[position][0] == "(":
            arg, position = _parse(tokens, position, q)
        return Modal(name, arg, label, param), _expect(tokens, position, ")")
    raise InputError(f"Unknown operator {op!r}")


# Printing

def _quote(q: Quantale, value: Any) -> str:
    rendered = q.render_value(value)
    if isinstance(rendered, list):
        return '"[' + ",".join(rendered) + ']"'
    return f'"{rendered}"'


def format_formula(formula: Formula, q: Quantale) -> str:
    if isinstance(formula, Top):
        return "(top)"
    if isinstance(formula, (And, Or)):
        op = "and" if isinstance(formula, And) else "or"
        return f"({op} {format_formula(formula.left, q)} {format_formula(formula.right, q)})"
    if isinstance(formula, (Tensor, HomS)):
        op = "tensor" if isinstance(formula, Tensor) else "homs"
        return f"({op} {_quote(q, formula.value)} {format_formula(formula.arg, q)})"
    parts = ["m", formula.name]
    if formula.label is not None:
        parts.append(formula.label)
    if formula.param is not None:
        parts.append(f'"{format_rational(formula.param)}"')
    if formula.arg is not None:
        parts.append(format_formula(formula.arg, q))
    return "(" + " ".join(parts) + ")"
