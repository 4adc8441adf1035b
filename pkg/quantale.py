"""
Quantale algebra: carriers, lattice operations, tensor, residuation and law checks.

For luk01 and max01 the quantale order is the REVERSED numeric order: numeric 0
is the top element (and the unit), numeric 1 is the bottom. Every function in this
module answers in quantale order unless its name says "numeric".
"""
import itertools
import json
import logging
import random
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from models import (
    InputError, KDecompositionReport, LawReport, LawResult, QuantaleDescriptor,
    StructuralError, UnsupportedOperation, format_rational, parse_rational
)

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = Fraction(1, 50)
MAX_TRIPLES = 40_000
WAY_ABOVE_LIMIT = 8


class Quantale:
    """Commutative unital quantale; subclasses fix the carrier representation"""

    kind: str = ""
    is_finite: bool = False
    reversed_numeric: bool = False

    # subclasses provide: leq, join2, meet2, tensor, hom, contains,
    # parse_value, render_value, descriptor, top, bottom, unit

    @property
    def order_name(self) -> str:
        return "reversed-numeric" if self.reversed_numeric else "lattice"

    def join(self, values: Iterable[Any]) -> Any:
        result = self.bottom
        for value in values:
            result = self.join2(result, value)
        return result

    def meet(self, values: Iterable[Any]) -> Any:
        result = self.top
        for value in values:
            result = self.meet2(result, value)
        return result

    def hom_s(self, u: Any, v: Any) -> Any:
        return self.meet2(self.hom(u, v), self.hom(v, u))

    def values(self, step: Optional[Fraction] = None) -> Tuple[Any, ...]:
        if self.is_finite:
            return self.elements()
        return self.grid(step or DEFAULT_RESOLUTION)

    def numeric(self, u: Any) -> Any:
        return u

    def key(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Quantale) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"<Quantale {self.name}>"

    @property
    def name(self) -> str:
        return self.kind


class FiniteQuantale(Quantale):
    """Finite quantale given by a join table and a tensor table over named elements"""

    is_finite = True

    def __init__(self, names: Sequence[str], join_table: Sequence[Sequence[str]],
                 tensor_table: Sequence[Sequence[str]], unit: str, kind: str = "table", label: Optional[str] = None):
        self.kind = kind
        self.label = label
        self.names = tuple(names)
        self._index = {name: i for i, name in enumerate(self.names)}
        if len(self._index) != len(self.names):
            raise StructuralError("Duplicate element names in quantale table")
        size = len(self.names)
        for which, table in (("join", join_table), ("tensor", tensor_table)):
            if len(table) != size or any(len(row) != size for row in table):
                raise StructuralError(f"{which} table must be {size}x{size}")
            for row in table:
                for entry in row:
                    if entry not in self._index:
                        raise StructuralError(f"{which} table mentions unknown element {entry!r}")
        if unit not in self._index:
            raise StructuralError(f"Unit {unit!r} is not an element")
        self._join = [[self._index[e] for e in row] for row in join_table]
        self._tensor = [[self._index[e] for e in row] for row in tensor_table]
        self._unit = unit
        self._leq = [[self._join[i][j] == j for j in range(size)] for i in range(size)]
        self._top = self._extremum(lambda x, t: self._leq[x][t])
        self._bottom = self._extremum(lambda x, b: self._leq[b][x])
        self._meet = [[self._glb(i, j) for j in range(size)] for i in range(size)]
        self._hom = [[self._residual(u, w) for w in range(size)] for u in range(size)]

    def _extremum(self, below: Callable[[int, int], bool]) -> Optional[str]:
        for candidate in range(len(self.names)):
            if all(below(x, candidate) for x in range(len(self.names))):
                return self.names[candidate]
        return None

    def _glb(self, i: int, j: int) -> Optional[int]:
        lower = [z for z in range(len(self.names)) if self._leq[z][i] and self._leq[z][j]]
        for z in lower:
            if all(self._leq[w][z] for w in lower):
                return z
        return None

    def _residual(self, u: int, w: int) -> Optional[int]:
        result = self._index[self._bottom] if self._bottom is not None else None
        for v in range(len(self.names)):
            if self._leq[self._tensor[u][v]][w]:
                result = v if result is None else self._join[result][v]
        return result

    def _i(self, u: Any) -> int:
        try:
            return self._index[u]
        except (KeyError, TypeError):
            raise InputError(f"{u!r} is not an element of {self.name}")

    @property
    def top(self) -> Optional[str]:
        return self._top

    @property
    def bottom(self) -> Optional[str]:
        return self._bottom

    @property
    def unit(self) -> str:
        return self._unit

    def elements(self) -> Tuple[str, ...]:
        return self.names

    def contains(self, u: Any) -> bool:
        return isinstance(u, str) and u in self._index

    def leq(self, u: Any, v: Any) -> bool:
        return self._leq[self._i(u)][self._i(v)]

    def join2(self, u: Any, v: Any) -> str:
        return self.names[self._join[self._i(u)][self._i(v)]]

    def meet2(self, u: Any, v: Any) -> Optional[str]:
        index = self._meet[self._i(u)][self._i(v)]
        return None if index is None else self.names[index]

    def tensor(self, u: Any, v: Any) -> str:
        return self.names[self._tensor[self._i(u)][self._i(v)]]

    def hom(self, u: Any, w: Any) -> Optional[str]:
        index = self._hom[self._i(u)][self._i(w)]
        return None if index is None else self.names[index]

    def grid(self, step: Optional[Fraction] = None) -> Tuple[str, ...]:
        return self.names

    def parse_value(self, raw: Any) -> str:
        if not self.contains(raw):
            raise InputError(f"{raw!r} is not an element of {self.name}")
        return raw

    def render_value(self, u: Any) -> str:
        return u

    def tables(self) -> Dict[str, Any]:
        return {
            "elements": list(self.names),
            "join": [[self.names[k] for k in row] for row in self._join],
            "tensor": [[self.names[k] for k in row] for row in self._tensor],
            "unit": self._unit,
        }

    def descriptor(self) -> Dict[str, Any]:
        if self.kind in ("bool2", "diamond4"):
            return {"kind": self.kind}
        return {"kind": "table", "table": self.tables()}

    @property
    def name(self) -> str:
        return self.label or self.kind


class UnitIntervalQuantale(Quantale):
    """[0,1] with exact rationals; luk01 tensors by truncated sum, max01 by maximum"""

    reversed_numeric = True

    def __init__(self, kind: str):
        if kind not in ("luk01", "max01"):
            raise StructuralError(f"Unknown unit-interval quantale {kind!r}")
        self.kind = kind

    top = Fraction(0)
    bottom = Fraction(1)
    unit = Fraction(0)

    def contains(self, u: Any) -> bool:
        return isinstance(u, (Fraction, int)) and not isinstance(u, bool) and 0 <= u <= 1

    def _check(self, u: Any) -> Fraction:
        if not self.contains(u):
            raise InputError(f"{u!r} is not in [0,1]")
        return Fraction(u)

    def leq(self, u: Any, v: Any) -> bool:
        return self._check(u) >= self._check(v)

    def join2(self, u: Any, v: Any) -> Fraction:
        return min(self._check(u), self._check(v))

    def meet2(self, u: Any, v: Any) -> Fraction:
        return max(self._check(u), self._check(v))

    def join(self, values: Iterable[Any]) -> Fraction:
        return min((self._check(v) for v in values), default=self.bottom)

    def meet(self, values: Iterable[Any]) -> Fraction:
        return max((self._check(v) for v in values), default=self.top)

    def tensor(self, u: Any, v: Any) -> Fraction:
        u, v = self._check(u), self._check(v)
        if self.kind == "luk01":
            return min(Fraction(1), u + v)
        return max(u, v)

    def hom(self, u: Any, w: Any) -> Fraction:
        u, w = self._check(u), self._check(w)
        if self.kind == "luk01":
            return max(Fraction(0), w - u)
        return Fraction(0) if u >= w else w

    def hom_s(self, u: Any, v: Any) -> Fraction:
        u, v = self._check(u), self._check(v)
        if self.kind == "luk01":
            return abs(u - v)
        return Fraction(0) if u == v else max(u, v)

    def grid(self, step: Optional[Fraction] = None) -> Tuple[Fraction, ...]:
        step = Fraction(step if step is not None else DEFAULT_RESOLUTION)
        if step <= 0 or step > 1 or (1 / step).denominator != 1:
            raise InputError(f"Grid step {step} does not divide 1")
        count = int(1 / step)
        return tuple(step * i for i in range(count + 1))

    def elements(self) -> Tuple[Fraction, ...]:
        raise UnsupportedOperation(f"{self.kind} has an infinite carrier")

    def parse_value(self, raw: Any) -> Fraction:
        value = parse_rational(raw)
        if not 0 <= value <= 1:
            raise InputError(f"{raw!r} is outside [0,1]")
        return value

    def render_value(self, u: Any) -> str:
        return format_rational(u)

    def descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind}


class ProductQuantale(Quantale):
    """Finite product with componentwise order and tensor"""

    kind = "product"

    def __init__(self, factors: Sequence[Quantale]):
        if len(factors) < 2:
            raise StructuralError("A product quantale needs at least two factors")
        self.factors = tuple(factors)
        self.is_finite = all(q.is_finite for q in self.factors)

    @property
    def name(self) -> str:
        return "(" + " x ".join(q.name for q in self.factors) + ")"

    @property
    def top(self) -> tuple:
        return tuple(q.top for q in self.factors)

    @property
    def bottom(self) -> tuple:
        return tuple(q.bottom for q in self.factors)

    @property
    def unit(self) -> tuple:
        return tuple(q.unit for q in self.factors)

    def contains(self, u: Any) -> bool:
        return (isinstance(u, tuple) and len(u) == len(self.factors)
                and all(q.contains(c) for q, c in zip(self.factors, u)))

    def _check(self, u: Any) -> tuple:
        if not isinstance(u, tuple) or len(u) != len(self.factors):
            raise InputError(f"{u!r} does not have arity {len(self.factors)}")
        return u

    def leq(self, u: Any, v: Any) -> bool:
        u, v = self._check(u), self._check(v)
        return all(q.leq(a, b) for q, a, b in zip(self.factors, u, v))

    def _pointwise(self, op: str, u: Any, v: Any) -> tuple:
        u, v = self._check(u), self._check(v)
        return tuple(getattr(q, op)(a, b) for q, a, b in zip(self.factors, u, v))

    def join2(self, u, v):
        return self._pointwise("join2", u, v)

    def meet2(self, u, v):
        return self._pointwise("meet2", u, v)

    def tensor(self, u, v):
        return self._pointwise("tensor", u, v)

    def hom(self, u, w):
        return self._pointwise("hom", u, w)

    def hom_s(self, u, v):
        return self._pointwise("hom_s", u, v)

    def elements(self) -> Tuple[tuple, ...]:
        return tuple(itertools.product(*(q.elements() for q in self.factors)))

    def grid(self, step: Optional[Fraction] = None) -> Tuple[tuple, ...]:
        return tuple(itertools.product(*(q.values(step) for q in self.factors)))

    def numeric(self, u: Any) -> tuple:
        return tuple(q.numeric(c) for q, c in zip(self.factors, self._check(u)))

    def parse_value(self, raw: Any) -> tuple:
        if not isinstance(raw, (list, tuple)) or len(raw) != len(self.factors):
            raise InputError(f"{raw!r} does not have arity {len(self.factors)}")
        return tuple(q.parse_value(r) for q, r in zip(self.factors, raw))

    def render_value(self, u: Any) -> list:
        return [q.render_value(c) for q, c in zip(self.factors, self._check(u))]

    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "product", "factors": [q.descriptor() for q in self.factors]}


# Built-in instances

def _table_from_order(names: Sequence[str], leq: Callable[[str, str], bool],
                      tensor: Callable[[str, str], str], unit: str, kind: str = "table",
                      label: Optional[str] = None) -> FiniteQuantale:
    def lub(u: str, v: str) -> str:
        upper = [z for z in names if leq(u, z) and leq(v, z)]
        return next(z for z in upper if all(leq(z, w) for w in upper))

    join_table = [[lub(u, v) for v in names] for u in names]
    tensor_table = [[tensor(u, v) for v in names] for u in names]
    return FiniteQuantale(names, join_table, tensor_table, unit, kind=kind, label=label)


_DIAMOND_ORDER = {("bot", "N"), ("bot", "B"), ("bot", "top"), ("N", "top"), ("B", "top")}


def _diamond_leq(u: str, v: str) -> bool:
    return u == v or (u, v) in _DIAMOND_ORDER


@lru_cache(maxsize=None)
def bool2() -> FiniteQuantale:
    names = ("bot", "top")
    leq = lambda u, v: u == v or u == "bot"
    return _table_from_order(names, leq, lambda u, v: "top" if u == v == "top" else "bot", "top", "bool2")


@lru_cache(maxsize=None)
def diamond4() -> FiniteQuantale:
    names = ("bot", "N", "B", "top")

    def meet(u: str, v: str) -> str:
        if _diamond_leq(u, v):
            return u
        if _diamond_leq(v, u):
            return v
        return "bot"

    return _table_from_order(names, _diamond_leq, meet, "top", "diamond4")


def paraconsistent_negation(u: str) -> str:
    return {"top": "bot", "bot": "top", "N": "N", "B": "B"}[u]


@lru_cache(maxsize=None)
def luk01() -> UnitIntervalQuantale:
    return UnitIntervalQuantale("luk01")


@lru_cache(maxsize=None)
def max01() -> UnitIntervalQuantale:
    return UnitIntervalQuantale("max01")


def finite_chain(size: int, lukasiewicz: bool = False) -> FiniteQuantale:
    """Chain 0 < 1/(n-1) < ... < 1 with tensor = min, or the finite Lukasiewicz t-norm"""
    if size < 2:
        raise InputError("A chain needs at least two elements")
    degrees = [Fraction(i, size - 1) for i in range(size)]
    names = tuple(format_rational(d) for d in degrees)
    value = dict(zip(names, degrees))
    by_value = {d: n for n, d in value.items()}
    if lukasiewicz:
        tensor = lambda u, v: by_value[max(Fraction(0), value[u] + value[v] - 1)]
    else:
        tensor = lambda u, v: by_value[min(value[u], value[v])]
    label = f"mvchain{size}" if lukasiewicz else f"chain{size}"
    return _table_from_order(names, lambda u, v: value[u] <= value[v], tensor, names[-1], label=label)


def product(q1: Quantale, q2: Quantale) -> ProductQuantale:
    return ProductQuantale((q1, q2))


def as_table(q: Quantale) -> FiniteQuantale:
    """Flatten any finite quantale into a table quantale with printable names"""
    if not q.is_finite:
        raise UnsupportedOperation(f"{q.name} is not finite")
    elements = q.elements()
    name_of = {u: _element_name(q, u) for u in elements}
    join_table = [[name_of[q.join2(u, v)] for v in elements] for u in elements]
    tensor_table = [[name_of[q.tensor(u, v)] for v in elements] for u in elements]
    return FiniteQuantale([name_of[u] for u in elements], join_table, tensor_table, name_of[q.unit])


def _element_name(q: Quantale, u: Any) -> str:
    rendered = q.render_value(u)
    if isinstance(rendered, list):
        return "(" + ",".join(str(r) for r in rendered) + ")"
    return str(rendered)


def with_tensor_entry(q: FiniteQuantale, u: str, v: str, w: str) -> FiniteQuantale:
    """Copy of a table quantale with one tensor cell overwritten"""
    tables = q.tables()
    names = tables["elements"]
    tables["tensor"][names.index(u)][names.index(v)] = w
    return FiniteQuantale(names, tables["join"], tables["tensor"], tables["unit"])


def random_table_quantale(rng: random.Random, size: Optional[int] = None) -> FiniteQuantale:
    """Random finite quantale: a min-chain, a Lukasiewicz chain, or a product flattened to a table"""
    shape = rng.choice(["chain", "lukasiewicz", "product"])
    if shape == "product":
        left = finite_chain(rng.randint(2, 3), lukasiewicz=rng.random() < 0.5)
        return as_table(product(left, rng.choice([bool2(), finite_chain(2)])))
    return finite_chain(size or rng.randint(2, 6), lukasiewicz=(shape == "lukasiewicz"))


# Serialization

def quantale_from_descriptor(raw: Any, validate: bool = True) -> Quantale:
    descriptor = raw if isinstance(raw, QuantaleDescriptor) else QuantaleDescriptor.model_validate(raw)
    if descriptor.kind == "bool2":
        return bool2()
    if descriptor.kind == "diamond4":
        return diamond4()
    if descriptor.kind == "luk01":
        return luk01()
    if descriptor.kind == "max01":
        return max01()
    if descriptor.kind == "product":
        if not descriptor.factors:
            raise StructuralError("Product quantale without factors")
        factors = [quantale_from_descriptor(f, validate) for f in descriptor.factors]
        return ProductQuantale(factors)
    if descriptor.table is None:
        raise StructuralError("Table quantale without a table")
    table = descriptor.table
    q = FiniteQuantale(table.elements, table.join, table.tensor, table.unit)
    if validate:
        report = q_validate(q)
        if not report.passed:
            failed = next(law for law in report.laws if not law.passed)
            raise StructuralError(f"Quantale table violates {failed.law}", witness=failed.witness)
    return q


def quantale_by_name(name: str) -> Quantale:
    """Resolve CLI names such as 'luk01', 'diamond4', 'chain3', 'luk01^2'"""
    simple = {"bool2": bool2, "diamond4": diamond4, "luk01": luk01, "max01": max01}
    if name in simple:
        return simple[name]()
    if name.endswith("^2") and name[:-2] in simple:
        base = simple[name[:-2]]()
        return product(base, base)
    if name.startswith("chain") and name[5:].isdigit():
        return finite_chain(int(name[5:]))
    if name.startswith("mvchain") and name[7:].isdigit():
        return finite_chain(int(name[7:]), lukasiewicz=True)
    raise InputError(f"Unknown quantale {name!r}")


# Public operations

def q_join(q: Quantale, values: Iterable[Any]) -> Any:
    return q.join(values)


def q_meet(q: Quantale, values: Iterable[Any]) -> Any:
    return q.meet(values)


def q_tensor(q: Quantale, u: Any, v: Any) -> Any:
    return q.tensor(u, v)


def q_hom(q: Quantale, u: Any, w: Any) -> Any:
    return q.hom(u, w)


def q_hom_s(q: Quantale, u: Any, v: Any) -> Any:
    return q.hom_s(u, v)


def q_product(q1: Quantale, q2: Quantale) -> ProductQuantale:
    return product(q1, q2)


# Law validation

def _render(q: Quantale, items: Sequence[Any]) -> List[Any]:
    return [q.render_value(u) if q.contains(u) else repr(u) for u in items]


def _check_law(q: Quantale, law: str, cases: Iterable[tuple], holds: Callable[..., bool]) -> LawResult:
    checked = 0
    for case in cases:
        checked += 1
        try:
            ok = holds(*case)
        except (InputError, KeyError, TypeError):
            ok = False
        if not ok:
            return LawResult(law=law, passed=False, checked=checked, witness=_render(q, case))
    return LawResult(law=law, passed=True, checked=checked)


def q_validate(q: Quantale, resolution: Fraction = DEFAULT_RESOLUTION, seed: int = 0) -> LawReport:
    """Check lattice, monoid, join-preservation and adjunction laws.

    Exhaustive for finite quantales; for unit-interval kinds the grid of the
    given resolution is used, with triples sampled deterministically once the
    grid is too large for exhaustive triple enumeration.
    """
    sample = list(q.values(resolution))
    singles = [(u,) for u in sample]
    pairs = list(itertools.product(sample, repeat=2))
    exhaustive = len(sample) ** 3 <= MAX_TRIPLES
    if exhaustive:
        triples = list(itertools.product(sample, repeat=3))
    else:
        rng = random.Random(seed)
        triples = [(rng.choice(sample), rng.choice(sample), rng.choice(sample)) for _ in range(MAX_TRIPLES)]

    top, bottom, unit = q.top, q.bottom, q.unit
    laws = [
        _check_law(q, "lattice.bounds", singles,
                   lambda u: top is not None and bottom is not None and q.leq(bottom, u) and q.leq(u, top)),
        _check_law(q, "lattice.join_upper_bound", pairs,
                   lambda u, v: q.leq(u, q.join2(u, v)) and q.join2(u, v) == q.join2(v, u)),
        _check_law(q, "lattice.join_least", triples,
                   lambda u, v, w: not (q.leq(u, w) and q.leq(v, w)) or q.leq(q.join2(u, v), w)),
        _check_law(q, "lattice.meet_exists", pairs,
                   lambda u, v: q.meet2(u, v) is not None and q.leq(q.meet2(u, v), u)
                   and q.meet2(u, v) == q.meet2(v, u)),
        _check_law(q, "lattice.absorption", pairs,
                   lambda u, v: q.join2(u, q.meet2(u, v)) == u and q.meet2(u, q.join2(u, v)) == u),
        _check_law(q, "lattice.associative", triples,
                   lambda u, v, w: q.join2(q.join2(u, v), w) == q.join2(u, q.join2(v, w))
                   and q.meet2(q.meet2(u, v), w) == q.meet2(u, q.meet2(v, w))),
        _check_law(q, "monoid.unit", singles, lambda u: q.tensor(unit, u) == u and q.tensor(u, unit) == u),
        _check_law(q, "monoid.commutative", pairs, lambda u, v: q.tensor(u, v) == q.tensor(v, u)),
        _check_law(q, "monoid.associative", triples,
                   lambda u, v, w: q.tensor(q.tensor(u, v), w) == q.tensor(u, q.tensor(v, w))),
        _check_law(q, "tensor.preserves_joins", triples,
                   lambda u, v, w: q.tensor(u, q.join2(v, w)) == q.join2(q.tensor(u, v), q.tensor(u, w))
                   and q.tensor(u, bottom) == bottom),
        _check_law(q, "adjunction", triples,
                   lambda u, v, w: q.leq(q.tensor(u, v), w) == q.leq(v, q.hom(u, w))),
    ]
    passed = all(law.passed for law in laws)
    if not passed:
        logger.info(f"Quantale {q.name} failed laws: {[law.law for law in laws if not law.passed]}")
    return LawReport(quantale=q.name, exhaustive=q.is_finite and exhaustive, passed=passed, laws=laws)


# Way-above and the k-decomposition condition

def _check_small_finite(q: Quantale) -> Tuple[Any, ...]:
    if not q.is_finite:
        raise UnsupportedOperation(f"Way-above is only enumerated for finite quantales, not {q.name}")
    elements = q.elements()
    if len(elements) > WAY_ABOVE_LIMIT:
        raise UnsupportedOperation(
            f"Way-above enumeration is limited to {WAY_ABOVE_LIMIT} elements, {q.name} has {len(elements)}")
    return elements


@lru_cache(maxsize=64)
def codirected_subsets(q: Quantale) -> Tuple[Tuple[Tuple[Any, ...], Any], ...]:
    """All nonempty down-directed subsets of a small finite quantale, with their infima"""
    elements = _check_small_finite(q)
    found = []
    for mask in range(1, 2 ** len(elements)):
        subset = tuple(u for i, u in enumerate(elements) if mask >> i & 1)
        directed = all(any(q.leq(c, a) and q.leq(c, b) for c in subset) for a in subset for b in subset)
        if directed:
            found.append((subset, q.meet(subset)))
    return tuple(found)


def way_above(q: Quantale, x: Any, y: Any) -> bool:
    """x is way above y: every codirected set with infimum below y has a member below x"""
    return all(any(q.leq(d, x) for d in subset)
               for subset, infimum in codirected_subsets(q) if q.leq(infimum, y))


def preserves_codirected_infima(q: Quantale) -> bool:
    if isinstance(q, ProductQuantale):
        return all(preserves_codirected_infima(f) for f in q.factors)
    if not q.is_finite:
        # truncated sum and maximum are continuous on [0,1]
        return True
    return all(q.tensor(u, infimum) == q.meet(q.tensor(u, d) for d in subset)
               for u in q.elements() for subset, infimum in codirected_subsets(q))


@lru_cache(maxsize=64)
def q_check_k_decomp(q: Quantale) -> KDecompositionReport:
    """Decide k = join{u⊗u | hom(u,v) way above v for all v} by enumeration"""
    elements = _check_small_finite(q)
    witnesses = [u for u in elements if all(way_above(q, q.hom(u, v), v) for v in elements)]
    joined = q.join(q.tensor(u, u) for u in witnesses)
    holds = joined == q.unit
    logger.debug(f"k-decomposition on {q.name}: {len(witnesses)} witnesses, holds={holds}")
    return KDecompositionReport(
        quantale=q.name,
        holds=holds,
        witnesses=[q.render_value(u) for u in witnesses],
        join=q.render_value(joined),
    )
