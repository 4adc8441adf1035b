"""
Finite V-categories over a quantale: structure matrices, initial structures,
power structures and the L-closure.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from models import (
    InputError, LawResult, PreconditionError, StructuralError, UnsupportedOperation, VCatDocument, VCatReport
)
from quantale import Quantale, quantale_from_descriptor

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[Any, ...], ...]


@dataclass(frozen=True)
class VCat:
    quantale: Quantale
    states: Tuple[str, ...]
    matrix: Matrix

    def __post_init__(self):
        size = len(self.states)
        if len(set(self.states)) != size:
            raise StructuralError("Duplicate state identifiers")
        if len(self.matrix) != size or any(len(row) != size for row in self.matrix):
            raise StructuralError(f"Structure matrix must be {size}x{size}", witness=list(self.states))

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise StructuralError(f"Unknown state {state!r}")

    def a(self, x: str, y: str) -> Any:
        return self.matrix[self.index(x)][self.index(y)]

    def distance(self, i: int, j: int) -> Any:
        return self.matrix[i][j]

    def with_matrix(self, matrix: Sequence[Sequence[Any]]) -> "VCat":
        return VCat(self.quantale, self.states, tuple(tuple(row) for row in matrix))


@dataclass(frozen=True)
class VsSpace:
    """The quantale itself with the symmetrized hom as structure"""
    quantale: Quantale

    def distance(self, u: Any, v: Any) -> Any:
        return self.quantale.hom_s(u, v)


@dataclass(frozen=True)
class Predicate:
    vcat: VCat
    values: Tuple[Any, ...]

    def __call__(self, state: str) -> Any:
        return self.values[self.vcat.index(state)]

    @property
    def nonexpansive(self) -> bool:
        return is_nonexpansive(self.vcat, self.values)


def discrete(q: Quantale, states: Sequence[str]) -> VCat:
    n = len(states)
    return VCat(q, tuple(states), tuple(tuple(q.top if i == j else q.bottom for j in range(n)) for i in range(n)))


def indiscrete(q: Quantale, states: Sequence[str]) -> VCat:
    n = len(states)
    return VCat(q, tuple(states), tuple(tuple(q.top for _ in range(n)) for _ in range(n)))


def is_symmetric(X: VCat) -> bool:
    return all(X.matrix[i][j] == X.matrix[j][i] for i in range(X.size) for j in range(i + 1, X.size))


def validate_vcat(X: VCat, require_symmetric: bool = False) -> VCatReport:
    q = X.quantale
    n = X.size
    for row in X.matrix:
        for value in row:
            if not q.contains(value):
                raise StructuralError(f"{value!r} is not a value of {q.name}")
    laws = []

    witness = next(([X.states[i]] for i in range(n) if not q.leq(q.unit, X.matrix[i][i])), None)
    laws.append(LawResult(law="reflexivity", passed=witness is None, checked=n, witness=witness))

    witness = None
    for i, j, l in itertools.product(range(n), repeat=3):
        if not q.leq(q.tensor(X.matrix[i][j], X.matrix[j][l]), X.matrix[i][l]):
            witness = [X.states[i], X.states[j], X.states[l]]
            break
    laws.append(LawResult(law="transitivity", passed=witness is None, checked=n ** 3, witness=witness))

    symmetric = is_symmetric(X)
    if require_symmetric:
        witness = next(([X.states[i], X.states[j]] for i in range(n) for j in range(n)
                        if X.matrix[i][j] != X.matrix[j][i]), None)
        laws.append(LawResult(law="symmetry", passed=witness is None, checked=n * n, witness=witness))
    return VCatReport(valid=all(law.passed for law in laws), symmetric=symmetric, laws=laws)


def symmetrize(X: VCat) -> VCat:
    q = X.quantale
    n = X.size
    return X.with_matrix([[q.meet2(X.matrix[i][j], X.matrix[j][i]) for j in range(n)] for i in range(n)])


def natural_order(X: VCat) -> Set[Tuple[str, str]]:
    q = X.quantale
    return {(x, y) for i, x in enumerate(X.states) for j, y in enumerate(X.states)
            if q.leq(q.unit, X.matrix[i][j])}


def equivalence_classes(X: VCat) -> List[List[str]]:
    """Classes of the natural order's equivalence kernel, in carrier order"""
    order = natural_order(X)
    classes: List[List[str]] = []
    for x in X.states:
        for cls in classes:
            if (x, cls[0]) in order and (cls[0], x) in order:
                cls.append(x)
                break
        else:
            classes.append([x])
    return classes


def separated_quotient(X: VCat) -> Tuple[VCat, Dict[str, str]]:
    """Merge naturally equivalent points; classes are named by their first member"""
    if not is_symmetric(X):
        raise PreconditionError("Separated quotient needs a symmetric structure")
    classes = equivalence_classes(X)
    projection = {x: cls[0] for cls in classes for x in cls}
    names = tuple(cls[0] for cls in classes)
    matrix = tuple(tuple(X.a(u, v) for v in names) for u in names)
    return VCat(X.quantale, names, matrix), projection


def initial_structure(q: Quantale, states: Sequence[str], cone: Iterable[Tuple[Sequence[Any], Any]]) -> VCat:
    """Pointwise meet of the structures pulled back along each leg.

    A leg is a pair (images, target): images[i] is the point hit by states[i],
    and target exposes quantale plus distance(p, p'), a VCat addressed by index
    or a VsSpace addressed by value.
    """
    if not states:
        raise InputError("Initial structure needs a nonempty carrier")
    n = len(states)
    matrix = [[q.top for _ in range(n)] for _ in range(n)]
    for images, target in cone:
        if target.quantale != q:
            raise StructuralError(f"Cone leg lands over {target.quantale.name}, expected {q.name}")
        if len(images) != n:
            raise StructuralError("Cone leg does not cover the carrier")
        for i in range(n):
            for j in range(n):
                matrix[i][j] = q.meet2(matrix[i][j], target.distance(images[i], images[j]))
    return VCat(q, tuple(states), tuple(tuple(row) for row in matrix))


def predicate_structure(q: Quantale, states: Sequence[str], predicates: Iterable[Sequence[Any]]) -> VCat:
    """Structure induced on the carrier by a family of predicates into V_s"""
    space = VsSpace(q)
    return initial_structure(q, states, ((p, space) for p in predicates))


def power_hom(q: Quantale, h: Sequence[Any], l: Sequence[Any], symmetric: bool = False) -> Any:
    if len(h) != len(l):
        raise StructuralError("Power hom needs maps on the same index set")
    hom = q.hom_s if symmetric else q.hom
    return q.meet(hom(u, v) for u, v in zip(h, l))


def l_closure(X: VCat, subset: Iterable[str]) -> List[str]:
    """{x | k ≤ ⋁_{y∈A} a(x,y)⊗a(y,x)}, in carrier order"""
    q = X.quantale
    members = [X.index(y) for y in subset]
    closed = []
    for i, x in enumerate(X.states):
        reach = q.join(q.tensor(X.matrix[i][j], X.matrix[j][i]) for j in members)
        if q.leq(q.unit, reach):
            closed.append(x)
    return closed


def value_closure(q: Quantale, values: Iterable[Any], candidates: Iterable[Any]) -> List[Any]:
    """L-closure of a set of values inside V_s, restricted to the given candidates"""
    pool = list(values)
    result = []
    for u in candidates:
        reach = q.join(q.tensor(q.hom_s(u, v), q.hom_s(v, u)) for v in pool)
        if q.leq(q.unit, reach):
            result.append(u)
    return result


def in_power_closure(q: Quantale, g: Sequence[Any], family: Iterable[Sequence[Any]]) -> bool:
    """Membership of g in the L-closure of family inside the power structure V_s^X"""
    reach = q.join(q.tensor(power_hom(q, g, h, True), power_hom(q, h, g, True)) for h in family)
    return q.leq(q.unit, reach)


def transitive_closure(X: VCat) -> VCat:
    """Join in a(x,y)⊗a(y,z) until the triangle law holds"""
    q = X.quantale
    n = X.size
    matrix = [list(row) for row in X.matrix]
    for i in range(n):
        matrix[i][i] = q.join2(matrix[i][i], q.unit)
    changed = True
    while changed:
        changed = False
        for i, j, l in itertools.product(range(n), repeat=3):
            joined = q.join2(matrix[i][l], q.tensor(matrix[i][j], matrix[j][l]))
            if joined != matrix[i][l]:
                matrix[i][l] = joined
                changed = True
    return X.with_matrix(matrix)


def meet_structures(X: VCat, Y: VCat) -> VCat:
    if X.states != Y.states or X.quantale != Y.quantale:
        raise StructuralError("Structures live on different carriers")
    q = X.quantale
    n = X.size
    return X.with_matrix([[q.meet2(X.matrix[i][j], Y.matrix[i][j]) for j in range(n)] for i in range(n)])


def is_nonexpansive(X: VCat, f: Sequence[Any]) -> bool:
    q = X.quantale
    n = X.size
    return all(q.leq(X.matrix[i][j], q.hom_s(f[i], f[j])) for i in range(n) for j in range(i, n))


def nonexpansive_violation(X: VCat, f: Sequence[Any]) -> Optional[Tuple[str, str]]:
    q = X.quantale
    for i in range(X.size):
        for j in range(X.size):
            if not q.leq(X.matrix[i][j], q.hom_s(f[i], f[j])):
                return X.states[i], X.states[j]
    return None


def enumerate_nonexpansive(X: VCat, values: Sequence[Any], limit: Optional[int] = None) -> Iterator[Tuple[Any, ...]]:
    """Branch-and-bound enumeration of V-functors X → V_s with values from a finite list.

    States are assigned in carrier order; a partial assignment is pruned as soon
    as one assigned pair violates nonexpansiveness.
    """
    q = X.quantale
    n = X.size
    values = list(values)
    assignment: List[Any] = []
    produced = 0

    def extend(i: int) -> Iterator[Tuple[Any, ...]]:
        nonlocal produced
        if i == n:
            produced += 1
            yield tuple(assignment)
            return
        for u in values:
            if all(q.leq(X.matrix[i][j], q.hom_s(u, assignment[j])) for j in range(i)):
                assignment.append(u)
                yield from extend(i + 1)
                assignment.pop()
                if limit is not None and produced >= limit:
                    return

    if n == 0:
        return iter([()])
    return extend(0)


def all_maps(q: Quantale, size: int, values: Optional[Sequence[Any]] = None) -> Iterator[Tuple[Any, ...]]:
    return itertools.product(values if values is not None else q.elements(), repeat=size)


def symmetric_structures(q: Quantale, size: int) -> Iterator[VCat]:
    """Every symmetric V-category on x0 … x{size-1} with ⊤ on the diagonal"""
    if not q.is_finite:
        raise UnsupportedOperation(f"Structures are enumerated only over finite quantales, not {q.name}")
    states = tuple(f"x{i}" for i in range(size))
    cells = [(i, j) for i in range(size) for j in range(i + 1, size)]
    for entries in itertools.product(q.elements(), repeat=len(cells)):
        matrix = [[q.top if i == j else None for j in range(size)] for i in range(size)]
        for (i, j), u in zip(cells, entries):
            matrix[i][j] = matrix[j][i] = u
        X = VCat(q, states, tuple(tuple(row) for row in matrix))
        if validate_vcat(X).valid:
            yield X


def _vs_closed_witness(X: VCat) -> Optional[Tuple[Any, ...]]:
    q = X.quantale
    maps = list(all_maps(q, X.size))
    functors = [f for f in maps if is_nonexpansive(X, f)]
    functor_set = set(functors)
    for g in maps:
        if g not in functor_set and in_power_closure(q, g, functors):
            return g
    return None


def check_vs_closed(q: Quantale, n: int) -> LawResult:
    """On every symmetric structure with n points, the nonexpansive maps are L-closed in the power structure"""
    checked = 0
    for X in symmetric_structures(q, n):
        checked += 1
        g = _vs_closed_witness(X)
        if g is not None:
            witness = [[q.render_value(u) for u in row] for row in X.matrix] + [[q.render_value(u) for u in g]]
            return LawResult(law="vs_closed", passed=False, checked=checked, witness=witness)
    return LawResult(law="vs_closed", passed=True, checked=checked)


def check_continuity_of_vfunctors(X: VCat, f: Optional[Sequence[Any]] = None,
                                  subsets: Optional[Iterable[Sequence[str]]] = None) -> LawResult:
    """f(closure(A)) ⊆ closure(f(A)) for the given subsets (all subsets by default).

    Without f every nonexpansive map into the finite quantale is checked.
    """
    q = X.quantale
    if subsets is None:
        subsets = [list(c) for r in range(X.size + 1) for c in itertools.combinations(X.states, r)]
    subsets = list(subsets)
    if f is None:
        if not q.is_finite:
            raise UnsupportedOperation(f"V-functors are enumerated only over finite quantales, not {q.name}")
        candidates = list(enumerate_nonexpansive(X, q.elements()))
    else:
        candidates = [tuple(f)]
    checked = 0
    for g in candidates:
        for subset in subsets:
            checked += 1
            image = {g[X.index(y)] for y in subset}
            closed_image = [g[X.index(x)] for x in l_closure(X, subset)]
            if value_closure(q, image, closed_image) != closed_image:
                return LawResult(law="continuity", passed=False, checked=checked,
                                 witness=[[q.render_value(u) for u in g], list(subset)])
    return LawResult(law="continuity", passed=True, checked=checked)


# JSON

def vcat_to_document(X: VCat) -> VCatDocument:
    q = X.quantale
    return VCatDocument(
        quantale=q.descriptor(),
        states=list(X.states),
        matrix=[[q.render_value(u) for u in row] for row in X.matrix],
    )


def vcat_from_document(raw: Any) -> VCat:
    document = raw if isinstance(raw, VCatDocument) else VCatDocument.model_validate(raw)
    q = quantale_from_descriptor(document.quantale)
    if len(document.matrix) != len(document.states):
        raise StructuralError("Matrix rows do not match the states")
    matrix = tuple(tuple(q.parse_value(u) for u in row) for row in document.matrix)
    return VCat(q, tuple(document.states), matrix)


def matrix_from_rows(q: Quantale, rows: Sequence[Sequence[Any]]) -> Matrix:
    return tuple(tuple(q.parse_value(u) for u in row) for row in rows)


