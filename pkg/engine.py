"""
Behavioural distance, logic evaluation, logical distance and the checks relating them.
"""
import heapq
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from formulas import TOP, And, Formula, HomS, Modal, Or, Tensor, Top, conjunction, disjunction, format_formula
from models import (
    AdequacyReport, DistanceMatrixDocument, ExpressivityEntry, ExpressivityReport, FormulaGap,
    InputError, InvarianceReport, PreconditionError, UnsupportedOperation, format_rational
)
from quantale import Quantale
from systems import (
    DEFAULT_GRID, Coalgebra, FunctorKind, PredicateLifting, apply_lifting, functor_action,
    lifted_matrix, validate_coalgebra
)
from vcat import (
    Matrix, Predicate, VCat, enumerate_nonexpansive, equivalence_classes, indiscrete, transitive_closure
)

logger = logging.getLogger(__name__)

DEFAULT_EPS = Fraction(1, 10 ** 9)
FORMULA_GRID = Fraction(1, 8)
MAX_REPORTED_VIOLATIONS = 20

Vector = Tuple[Any, ...]


@dataclass
class DistanceMatrix:
    vcat: VCat
    provenance: str
    steps: int = 0
    residual: Optional[Fraction] = None
    converged: bool = True
    history: List[Matrix] = field(default_factory=list)

    @property
    def quantale(self) -> Quantale:
        return self.vcat.quantale

    @property
    def states(self) -> Tuple[str, ...]:
        return self.vcat.states

    @property
    def matrix(self) -> Matrix:
        return self.vcat.matrix

    def value(self, x: str, y: str) -> Any:
        return self.vcat.a(x, y)

    def equivalence(self) -> List[List[str]]:
        """Classes of states at distance k, in carrier order"""
        return equivalence_classes(self.vcat)

    def to_document(self) -> DistanceMatrixDocument:
        q = self.quantale
        return DistanceMatrixDocument(
            provenance=self.provenance,
            quantale=q.descriptor(),
            order=q.order_name,
            states=list(self.states),
            matrix=[[q.render_value(u) for u in row] for row in self.matrix],
            steps=self.steps,
            residual=None if self.residual is None else format_rational(self.residual),
            converged=self.converged,
        )


# Formula semantics

def _resolve(c: Coalgebra, modal: Modal) -> PredicateLifting:
    matches = [lam for lam in c.liftings
               if lam.name == modal.name
               and (modal.label is None or lam.label == modal.label)
               and (modal.param is None or lam.param == modal.param)]
    if not matches and modal.name == "wgt" and modal.param is not None and c.functor == FunctorKind.SIGNED_WEIGHTED:
        # any shift r is admissible; only r in {0, 1/2} are part of the enumeration basis
        labels = [modal.label] if modal.label is not None else list(c.labels)
        if len(labels) == 1 and labels[0] in c.labels:
            return PredicateLifting("wgt", c.functor, label=labels[0], param=modal.param, continuity="l")
    if len(matches) != 1:
        detail = "ambiguous" if matches else "unresolved"
        raise InputError(f"Modality {modal.name!r} (label={modal.label!r}) is {detail} for {c.functor.value}")
    return matches[0]


def evaluate(formula: Formula, c: Coalgebra, memo: Optional[Dict[Formula, Vector]] = None) -> Vector:
    """Semantics of a formula as a vector over the carrier"""
    if memo is None:
        memo = {}
    if formula in memo:
        return memo[formula]
    q = c.quantale
    n = c.size
    if isinstance(formula, Top):
        result = (q.top,) * n
    elif isinstance(formula, (And, Or)):
        left = evaluate(formula.left, c, memo)
        right = evaluate(formula.right, c, memo)
        op = q.meet2 if isinstance(formula, And) else q.join2
        result = tuple(op(u, v) for u, v in zip(left, right))
    elif isinstance(formula, (Tensor, HomS)):
        if not q.contains(formula.value):
            raise InputError(f"Constant {formula.value!r} is not a value of {q.name}")
        inner = evaluate(formula.arg, c, memo)
        op = q.tensor if isinstance(formula, Tensor) else q.hom_s
        result = tuple(op(formula.value, v) for v in inner)
    elif isinstance(formula, Modal):
        lam = _resolve(c, formula)
        if formula.arg is None and not lam.nullary:
            raise InputError(f"Modality {lam} needs an argument")
        inner = evaluate(formula.arg, c, memo) if formula.arg is not None else (q.top,) * n
        result = tuple(apply_lifting(lam, inner, c.alpha(i)) for i in range(n))
    else:
        raise InputError(f"Not a formula: {formula!r}")
    memo[formula] = result
    return result


def eval_formula(formula: Formula, c: Coalgebra) -> Predicate:
    return Predicate(c.base, evaluate(formula, c))


# Behavioural distance

def _residual(q: Quantale, old: Matrix, new: Matrix) -> Fraction:
    if q.is_finite:
        return Fraction(sum(1 for row_a, row_b in zip(old, new) for u, v in zip(row_a, row_b) if u != v))
    worst = Fraction(0)
    for row_a, row_b in zip(old, new):
        for u, v in zip(row_a, row_b):
            a, b = q.numeric(u), q.numeric(v)
            pairs = zip(a, b) if isinstance(a, tuple) else [(a, b)]
            worst = max([worst] + [abs(x - y) for x, y in pairs])
    return worst


def bd_fixpoint(c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None, backend: str = "lp",
                eps: Fraction = DEFAULT_EPS, max_iter: int = 1000, min_iter: int = 0,
                grid: Fraction = DEFAULT_GRID, keep_history: bool = False, check: bool = True) -> DistanceMatrix:
    """Kleene iteration from the indiscrete structure.

    Finite quantales stop on exact stabilization, which is the greatest
    fixpoint. Unit-interval quantales stop once the largest numeric change is
    at most eps; the result then over-approximates bd in quantale order.
    """
    if check:
        report = validate_coalgebra(c, backend, grid)
        if not report.valid:
            raise PreconditionError("Coalgebra failed validation", witness=[v.model_dump() for v in report.violations])
    q = c.quantale
    liftings = list(liftings if liftings is not None else c.liftings)
    current = indiscrete(q, c.states)
    history = [current.matrix] if keep_history else []
    residual = None
    converged = False
    steps = 0
    for steps in range(1, max_iter + 1):
        following = current.with_matrix(lifted_matrix(c, current, liftings, backend, grid))
        residual = _residual(q, current.matrix, following.matrix)
        current = following
        if keep_history:
            history.append(current.matrix)
        logger.debug(f"bd iteration {steps}: residual {residual}")
        if steps >= min_iter and (residual == 0 or (not q.is_finite and residual <= eps)):
            converged = True
            break
    if converged:
        logger.info(f"bd converged after {steps} iterations on {c.size} states")
    else:
        logger.warning(f"bd stopped after {max_iter} iterations with residual {residual}")
    return DistanceMatrix(
        vcat=current,
        provenance="bd",
        steps=steps,
        residual=None if q.is_finite else residual,
        converged=converged,
        history=history,
    )


def iterate_bd(c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None, backend: str = "lp",
               eps: Fraction = DEFAULT_EPS, max_iter: int = 1000, grid: Fraction = DEFAULT_GRID) -> List[Matrix]:
    """Every Kleene iterate, starting with the indiscrete structure"""
    return bd_fixpoint(c, liftings, backend, eps, max_iter, grid=grid, keep_history=True).history


def partition_refinement(c: Coalgebra) -> List[List[str]]:
    """Coarsest bisimulation of a Boolean LTS by signature refinement"""
    if c.functor != FunctorKind.LTS:
        raise UnsupportedOperation("Partition refinement is implemented for lts coalgebras")
    block = [0] * c.size
    count = 1
    while True:
        signatures: Dict[tuple, int] = {}
        refined = []
        for i in range(c.size):
            t = c.alpha(i)
            signature = (block[i],) + tuple(frozenset(block[j] for j in t[a]) for a in c.labels)
            refined.append(signatures.setdefault(signature, len(signatures)))
        block = refined
        if len(signatures) == count:
            break
        count = len(signatures)
    classes: Dict[int, List[str]] = {}
    for i, b in enumerate(block):
        classes.setdefault(b, []).append(c.states[i])
    return list(classes.values())


# Formula space

def _meet_rows(q: Quantale, vectors: Sequence[Vector], n: int) -> Matrix:
    matrix = [[q.top for _ in range(n)] for _ in range(n)]
    for vector in vectors:
        for i in range(n):
            for j in range(i, n):
                matrix[i][j] = q.meet2(matrix[i][j], q.hom_s(vector[i], vector[j]))
    for i in range(n):
        for j in range(i):
            matrix[i][j] = matrix[j][i]
    return tuple(tuple(row) for row in matrix)


class FormulaSpace:
    """Layered, semantically deduplicated enumeration of formulas on one coalgebra.

    Each layer forms characteristic formulas for the current logical distance,
    turns them into arguments (together with the nonexpansive predicates on a
    value grid for liftings that need them) and applies every modality once.
    """

    def __init__(self, c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None,
                 width: int = 2000, grid: Fraction = FORMULA_GRID):
        self.c = c
        self.q = c.quantale
        self.liftings = list(liftings if liftings is not None else c.liftings)
        self.width = width
        self.grid = grid
        top_vector = (self.q.top,) * c.size
        self.basis: Dict[Vector, Formula] = {top_vector: TOP}
        self.explored: Dict[Vector, Formula] = {top_vector: TOP}
        self.layers: List[Matrix] = [self.matrix()]
        self.basis_sizes: List[int] = [1]
        self.exact = all(lam.representable for lam in self.liftings) or self.q.is_finite
        self.evaluations = 0
        self.saturated = False

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    def matrix(self) -> Matrix:
        return _meet_rows(self.q, list(self.basis), self.c.size)

    def _keep(self, table: Dict[Vector, Formula], vector: Vector, formula: Formula) -> bool:
        known = table.get(vector)
        if known is None or formula.size < known.size:
            table[vector] = formula
            return known is None
        return False

    def characteristic(self, x: int) -> Tuple[Formula, Vector]:
        """⋀ hom_s(ψ(x), ψ) over a greedy sub-basis; its vector is the row ld(x, −)"""
        q = self.q
        n = self.c.size
        running = (q.top,) * n
        parts = []
        for vector, psi in sorted(self.basis.items(), key=lambda item: item[1].size):
            narrowed = tuple(q.meet2(running[y], q.hom_s(vector[x], vector[y])) for y in range(n))
            if narrowed != running:
                parts.append(HomS(vector[x], psi))
                running = narrowed
        return conjunction(parts), running

    def _predicate_formula(self, f: Vector, chis: Sequence[Tuple[Formula, Vector]]) -> Optional[Formula]:
        """⋁_x f(x)⊗χ_x, pruned greedily; None when it does not reproduce f"""
        q = self.q
        if all(u == f[0] for u in f):
            return TOP if f[0] == q.top else Tensor(f[0], TOP)
        n = self.c.size
        running = (q.bottom,) * n
        parts = []
        for x in range(n):
            if f[x] == q.bottom:
                continue
            chi, row = chis[x]
            term = tuple(q.tensor(f[x], row[y]) for y in range(n))
            widened = tuple(q.join2(running[y], term[y]) for y in range(n))
            if widened != running:
                parts.append(chi if f[x] == q.unit else Tensor(f[x], chi))
                running = widened
        return disjunction(parts, q) if running == tuple(f) else None

    def arguments(self) -> Tuple[Dict[Vector, Formula], Dict[Vector, Formula]]:
        """(arguments for representable liftings, arguments for the rest)"""
        q = self.q
        chis = [self.characteristic(x) for x in range(self.c.size)]
        small = dict(self.basis)
        for chi, row in chis:
            self._keep(small, row, chi)
        full = dict(small)
        if any(not lam.representable for lam in self.liftings):
            X = VCat(q, self.c.states, self.matrix())
            values = q.elements() if q.is_finite else q.grid(self.grid)
            added = 0
            for f in enumerate_nonexpansive(X, values):
                if f in full:
                    continue
                if added >= self.width:
                    logger.warning(f"Formula layer capped at width {self.width}")
                    self.exact = False
                    break
                formula = self._predicate_formula(f, chis)
                if formula is not None:
                    full[f] = formula
                    added += 1
        for vector, formula in full.items():
            self._keep(self.explored, vector, formula)
        return small, full

    def expand(self, on_candidate: Optional[Callable[[Formula, Vector], bool]] = None,
               order: Optional[Callable[[Vector], Any]] = None) -> bool:
        """Add one modal layer; returns False once the basis no longer changes or the callback stops it"""
        small, full = self.arguments()
        if on_candidate is not None:
            for vector, formula in full.items():
                if not on_candidate(formula, vector):
                    return False
        fresh: Dict[Vector, Formula] = {}
        stopped = False
        for lam in self.liftings:
            pool = small if lam.representable else full
            items = [(None, None)] if lam.nullary else list(pool.items())
            if order is not None and not lam.nullary:
                items.sort(key=lambda item: (order(item[0]), item[1].size))
            for vector, argument in items:
                formula = Modal(lam.name, argument, lam.label, lam.param)
                inner = vector if vector is not None else (self.q.top,) * self.c.size
                image = tuple(apply_lifting(lam, inner, self.c.alpha(i)) for i in range(self.c.size))
                self.evaluations += 1
                self._keep(fresh, image, formula)
                self._keep(self.explored, image, formula)
                if on_candidate is not None and not on_candidate(formula, image):
                    stopped = True
                    break
            if stopped:
                break
        changed = False
        for vector, formula in fresh.items():
            if self._keep(self.basis, vector, formula):
                changed = True
        self.layers.append(self.matrix())
        self.basis_sizes.append(len(self.basis))
        return changed and not stopped

    def expand_to(self, depth: int) -> None:
        """Expand up to depth; once a layer adds nothing the last layer is repeated"""
        while self.depth < depth:
            if self.saturated:
                self.layers.append(self.layers[-1])
                self.basis_sizes.append(self.basis_sizes[-1])
            elif not self.expand():
                self.saturated = True


def logical_distance(c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None, depth: int = 2,
                     width: int = 2000, grid: Fraction = FORMULA_GRID) -> Tuple[DistanceMatrix, List[Formula]]:
    """Meet over the formulas of modal depth ≤ depth, with the deduplicated basis"""
    if depth < 0:
        raise InputError("depth must be non-negative")
    space = FormulaSpace(c, liftings, width, grid)
    space.expand_to(depth)
    matrix = DistanceMatrix(vcat=c.base.with_matrix(space.layers[-1]), provenance=f"ld({depth})",
                            steps=depth, converged=space.exact)
    basis = sorted(space.basis.values(), key=lambda phi: (phi.depth, phi.size, format_formula(phi, c.quantale)))
    return matrix, basis


# Distinguishing formulas

def _badness(q: Quantale, u: Any) -> Any:
    """Smaller means further apart"""
    if q.is_finite:
        return sum(1 for v in q.elements() if q.leq(v, u))
    value = q.numeric(u)
    return -sum(value) if isinstance(value, tuple) else -value


def distinguishing_formula(c: Coalgebra, x: str, y: str, liftings: Optional[Sequence[PredicateLifting]] = None,
                           budget: int = 5000, depth: Optional[int] = None, width: int = 2000,
                           grid: Fraction = FORMULA_GRID) -> Tuple[Formula, Any]:
    """Best formula found for separating x and y within the evaluation budget.

    Layers are explored best-first: arguments that already separate the two
    states further are lifted first, so a small budget still reaches the most
    promising modal formulas.
    """
    if x == y:
        raise InputError("Distinguishing needs two different states")
    q = c.quantale
    i, j = c.base.index(x), c.base.index(y)
    best: List[Tuple[Any, int, int, Formula]] = [(_badness(q, q.hom_s(q.top, q.top)), TOP.size, 0, TOP)]
    if budget <= 0:
        return TOP, q.hom_s(q.top, q.top)
    counter = itertools.count(1)
    spent = 0

    def consider(formula: Formula, vector: Vector) -> bool:
        nonlocal spent
        spent += 1
        heapq.heappush(best, (_badness(q, q.hom_s(vector[i], vector[j])), formula.size, next(counter), formula))
        return spent < budget

    space = FormulaSpace(c, liftings, width, grid)
    limit = depth if depth is not None else max(c.size, 1)
    for _ in range(limit):
        if not space.expand(consider, order=lambda v: _badness(q, q.hom_s(v[i], v[j]))):
            break
    formula = best[0][3]
    vector = evaluate(formula, c)
    gap = q.hom_s(vector[i], vector[j])
    logger.info(f"Distinguishing search spent {spent} evaluations; best formula has size {formula.size}")
    return formula, gap


# Checks

def _within(q: Quantale, bound: Any, value: Any, slack: Fraction) -> bool:
    """bound ≤ value in quantale order, allowing numeric slack for unit-interval kinds"""
    if q.leq(bound, value):
        return True
    if q.is_finite or slack == 0:
        return False
    a, b = q.numeric(bound), q.numeric(value)
    pairs = zip(a, b) if isinstance(a, tuple) else [(a, b)]
    return all(y - x <= slack for x, y in pairs)


def check_adequacy(c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None, depth: int = 2,
                   backend: str = "lp", eps: Fraction = DEFAULT_EPS, width: int = 2000,
                   grid: Fraction = FORMULA_GRID) -> AdequacyReport:
    """Every enumerated formula separates states by no more than bd does"""
    q = c.quantale
    bd = bd_fixpoint(c, liftings, backend, eps, min_iter=depth)
    space = FormulaSpace(c, liftings, width, grid)
    space.expand_to(depth)
    slack = bd.residual or Fraction(0)
    violations = []
    n = c.size
    for vector, formula in space.explored.items():
        for a in range(n):
            for b in range(a + 1, n):
                gap = q.hom_s(vector[a], vector[b])
                if not _within(q, bd.matrix[a][b], gap, slack):
                    violations.append(FormulaGap(
                        formula=format_formula(formula, q),
                        states=[c.states[a], c.states[b]],
                        gap=q.render_value(gap),
                        bound=q.render_value(bd.matrix[a][b]),
                    ))
    if violations:
        logger.warning(f"Adequacy violated by {len(violations)} formula/pair combinations")
    return AdequacyReport(
        passed=not violations,
        depth=depth,
        formulas_checked=len(space.explored),
        residual=None if bd.residual is None else format_rational(bd.residual),
        violations=violations[:MAX_REPORTED_VIOLATIONS],
    )


def _gap(q: Quantale, bd: Matrix, ld: Matrix) -> Any:
    n = len(bd)
    if q.is_finite:
        return sum(1 for a in range(n) for b in range(a + 1, n) if bd[a][b] != ld[a][b])
    worst = Fraction(0)
    for a in range(n):
        for b in range(a + 1, n):
            x, y = q.numeric(bd[a][b]), q.numeric(ld[a][b])
            pairs = zip(x, y) if isinstance(x, tuple) else [(x, y)]
            worst = max([worst] + [u - v for u, v in pairs])
    return worst


def check_expressivity(c: Coalgebra, liftings: Optional[Sequence[PredicateLifting]] = None,
                       schedule: Sequence[int] = (0, 1, 2), backend: str = "lp", eps: Fraction = DEFAULT_EPS,
                       width: int = 2000, grid: Fraction = FORMULA_GRID) -> ExpressivityReport:
    """Gap between bd and ld per depth; the gap never grows with depth"""
    q = c.quantale
    schedule = sorted(set(schedule))
    bd = bd_fixpoint(c, liftings, backend, eps, min_iter=max(schedule, default=0))
    space = FormulaSpace(c, liftings, width, grid)
    space.expand_to(max(schedule, default=0))
    entries = []
    for d in schedule:
        gap = _gap(q, bd.matrix, space.layers[d])
        entries.append(ExpressivityEntry(
            depth=d,
            gap=gap if isinstance(gap, int) else format_rational(gap),
            exact=gap == 0,
            basis_size=space.basis_sizes[d],
        ))
    raw = [_gap(q, bd.matrix, space.layers[d]) for d in schedule]
    monotone = all(a >= b for a, b in zip(raw, raw[1:]))
    return ExpressivityReport(passed=monotone, monotone=monotone, entries=entries)


# Morphisms

def morphism_violation(c: Coalgebra, d: Coalgebra, mapping: Dict[str, str]) -> Optional[List[str]]:
    """First state where F f ∘ α and β ∘ f disagree, or where f is expansive"""
    if c.functor != d.functor:
        return ["functor", c.functor.value, d.functor.value]
    try:
        g = [d.base.index(mapping[x]) for x in c.states]
    except KeyError as missing:
        return ["unmapped", str(missing)]
    for i in range(c.size):
        if functor_action(c.functor, c.alpha(i), g) != d.alpha(g[i]):
            return [c.states[i]]
    q = c.quantale
    for i in range(c.size):
        for j in range(c.size):
            if not q.leq(c.base.matrix[i][j], d.base.matrix[g[i]][g[j]]):
                return [c.states[i], c.states[j]]
    return None


def is_coalgebra_morphism(c: Coalgebra, d: Coalgebra, mapping: Dict[str, str]) -> bool:
    return morphism_violation(c, d, mapping) is None


def quotient_coalgebra(c: Coalgebra, blocks: Sequence[Sequence[str]]) -> Tuple[Coalgebra, Dict[str, str]]:
    """Collapse each block onto its first member; transitions are taken from that representative"""
    q = c.quantale
    names = tuple(block[0] for block in blocks)
    position = {x: k for k, block in enumerate(blocks) for x in block}
    if set(position) != set(c.states):
        raise InputError("Blocks must partition the carrier")
    g = [position[x] for x in c.states]
    transitions = tuple(functor_action(c.functor, c.alpha(c.base.index(block[0])), g) for block in blocks)
    size = len(blocks)
    matrix = [[q.bottom for _ in range(size)] for _ in range(size)]
    for i in range(c.size):
        for j in range(c.size):
            matrix[g[i]][g[j]] = q.join2(matrix[g[i]][g[j]], c.base.matrix[i][j])
    base = transitive_closure(VCat(q, names, tuple(tuple(row) for row in matrix)))
    mapping = {x: names[position[x]] for x in c.states}
    return Coalgebra(c.functor, base, c.labels, transitions, c.liftings), mapping


def check_morphism_invariance(c: Coalgebra, d: Coalgebra, mapping: Dict[str, str],
                              liftings: Optional[Sequence[PredicateLifting]] = None, backend: str = "lp",
                              eps: Fraction = DEFAULT_EPS, depth: int = 2, width: int = 2000) -> InvarianceReport:
    """bd and formula semantics are preserved along a coalgebra morphism"""
    witness = morphism_violation(c, d, mapping)
    if witness is not None:
        raise PreconditionError("Map is not a coalgebra morphism", witness=witness)
    q = c.quantale
    bd_c = bd_fixpoint(c, liftings, backend, eps)
    bd_d = bd_fixpoint(d, liftings, backend, eps)
    slack = max(bd_c.residual or Fraction(0), bd_d.residual or Fraction(0), eps if not q.is_finite else Fraction(0))
    pairs = 0
    for x in c.states:
        for y in c.states:
            pairs += 1
            left, right = bd_c.value(x, y), bd_d.value(mapping[x], mapping[y])
            if not (_within(q, left, right, slack) and _within(q, right, left, slack)):
                return InvarianceReport(passed=False, pairs_checked=pairs, witness=[x, y])
    space = FormulaSpace(c, liftings, width)
    space.expand_to(depth)
    memo_d: Dict[Formula, Vector] = {}
    for vector, formula in space.explored.items():
        image = evaluate(formula, d, memo_d)
        for i, x in enumerate(c.states):
            if vector[i] != image[d.base.index(mapping[x])]:
                return InvarianceReport(passed=False, pairs_checked=pairs, formulas_checked=len(space.explored),
                                        witness=[format_formula(formula, q), x])
    return InvarianceReport(passed=True, pairs_checked=pairs, formulas_checked=len(space.explored))
