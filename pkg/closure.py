"""
Closure operators on predicate sets, propositional algebras and the
Stone-Weierstraß style density checks built on them.
"""
import itertools
import logging
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from generators import random_symmetric_vcat
from models import (
    ContinuityReport, DecompositionReport, InputError, LawReport, LawResult, StructuralError,
    SuiteReport, TrialOutcome, UnsupportedOperation
)
from quantale import Quantale, preserves_codirected_infima
from systems import Coalgebra, PredicateLifting, apply_lifting, lifted_structure
from vcat import (
    VCat, all_maps, discrete, enumerate_nonexpansive, in_power_closure, is_nonexpansive, meet_structures,
    predicate_structure, vcat_to_document
)

logger = logging.getLogger(__name__)

DEFAULT_WIDTH = 5000
CODIRECTED_CHECK_LIMIT = 12
POWER_UNIVERSE_LIMIT = 20_000

Vector = Tuple[Any, ...]


class ClosureTag(str, Enum):
    ID = "id"
    L = "l"
    CINFSUP = "cinfsup"
    INF = "inf"
    FUN = "fun"


def parse_closure(name: str) -> ClosureTag:
    try:
        return ClosureTag(name.lower())
    except ValueError:
        raise InputError(f"Unknown closure operator {name!r}")


@dataclass(frozen=True)
class PredicateSet:
    vcat: VCat
    members: FrozenSet[Vector]
    truncated: bool = False

    def __post_init__(self):
        q = self.vcat.quantale
        for f in self.members:
            if len(f) != self.vcat.size:
                raise StructuralError("Predicate does not cover the carrier", witness=list(map(str, f)))
            if not all(q.contains(u) for u in f):
                raise StructuralError("Predicate leaves the quantale", witness=list(map(str, f)))

    @classmethod
    def of(cls, vcat: VCat, members: Iterable[Sequence[Any]], truncated: bool = False) -> "PredicateSet":
        return cls(vcat, frozenset(tuple(f) for f in members), truncated)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.sorted())

    def __contains__(self, f: Sequence[Any]) -> bool:
        return tuple(f) in self.members

    def sorted(self) -> List[Vector]:
        q = self.vcat.quantale
        return sorted(self.members, key=lambda f: [str(q.render_value(u)) for u in f])

    def rendered(self) -> List[List[Any]]:
        q = self.vcat.quantale
        return [[q.render_value(u) for u in f] for f in self.sorted()]

    def with_members(self, members: Iterable[Sequence[Any]], truncated: bool = False) -> "PredicateSet":
        return PredicateSet.of(self.vcat, members, truncated or self.truncated)

    def issubset(self, other: "PredicateSet") -> bool:
        return self.members <= other.members


def _constants(q: Quantale, grid: Fraction) -> Tuple[Any, ...]:
    return q.elements() if q.is_finite else q.grid(grid)


def _pointwise(op, f: Vector, g: Vector) -> Vector:
    return tuple(op(u, v) for u, v in zip(f, g))


def prop_algebra_closure(X: VCat, generators: Iterable[Sequence[Any]], grid: Fraction = Fraction(1, 8),
                         width: int = DEFAULT_WIDTH) -> PredicateSet:
    """Least set containing the generators and ⊤, closed under ∧, ∨, u⊗− and hom_s(u,−)"""
    q = X.quantale
    constants = _constants(q, grid)
    pool = {(q.top,) * X.size}
    pool.update(tuple(f) for f in generators)
    frontier = list(pool)
    while frontier:
        fresh = []
        for f in frontier:
            candidates = [tuple(q.tensor(u, v) for v in f) for u in constants]
            candidates += [tuple(q.hom_s(u, v) for v in f) for u in constants]
            for g in list(pool):
                candidates.append(_pointwise(q.meet2, f, g))
                candidates.append(_pointwise(q.join2, f, g))
            for h in candidates:
                if h in pool:
                    continue
                if len(pool) >= width:
                    logger.warning(f"Propositional closure truncated at width {width}")
                    return PredicateSet.of(X, pool, truncated=True)
                pool.add(h)
                fresh.append(h)
        frontier = fresh
    return PredicateSet.of(X, pool)


# Closure operators

def _saturate(members: set, step) -> set:
    frontier = list(members)
    while frontier:
        fresh = []
        for f in frontier:
            for g in list(members):
                h = step(f, g)
                if h not in members:
                    members.add(h)
                    fresh.append(h)
        frontier = fresh
    return members


def _is_codirected(q: Quantale, family: Sequence[Vector]) -> bool:
    def below(h, f):
        return all(q.leq(u, v) for u, v in zip(h, f))
    return all(any(below(h, f) and below(h, g) for h in family) for f, g in itertools.combinations(family, 2))


def _codirected_infima(q: Quantale, members: set) -> set:
    """Adds the infimum of every codirected subfamily; only run on small sets"""
    family = sorted(members, key=repr)
    added = set()
    for r in range(2, len(family) + 1):
        for subset in itertools.combinations(family, r):
            if _is_codirected(q, subset):
                added.add(tuple(q.meet(column) for column in zip(*subset)))
    return added - members


def _power_universe(X: VCat, A: PredicateSet, grid: Fraction) -> List[Vector]:
    q = X.quantale
    values = _constants(q, grid)
    if len(values) ** X.size <= POWER_UNIVERSE_LIMIT:
        return list(all_maps(q, X.size, values)) + [f for f in A.members]
    logger.warning(f"Power space over {len(values)} values and {X.size} points is sampled from the predicate set only")
    return list(A.members)


def close(op: ClosureTag, X: VCat, A: PredicateSet, grid: Fraction = Fraction(1, 8)) -> PredicateSet:
    q = X.quantale
    op = ClosureTag(op)
    if op == ClosureTag.ID:
        return A
    if op == ClosureTag.L:
        family = list(A.members)
        members = {g for g in _power_universe(X, A, grid) if in_power_closure(q, g, family)}
        return A.with_members(members | set(A.members))
    if not q.is_finite and op in (ClosureTag.CINFSUP, ClosureTag.INF, ClosureTag.FUN):
        raise UnsupportedOperation(f"Closure {op.value} is enumerated only over finite quantales, not {q.name}")
    if op == ClosureTag.CINFSUP:
        members = set(A.members) | {(q.bottom,) * X.size}
        while True:
            _saturate(members, lambda f, g: _pointwise(q.join2, f, g))
            if len(members) > CODIRECTED_CHECK_LIMIT:
                break
            extra = _codirected_infima(q, members)
            if not extra:
                break
            members |= extra
        return A.with_members(members)
    if op == ClosureTag.INF:
        members = set(A.members) | {(q.top,) * X.size}
        return A.with_members(_saturate(members, lambda f, g: _pointwise(q.meet2, f, g)))
    induced = predicate_structure(q, X.states, A.members)
    return A.with_members(enumerate_nonexpansive(induced, q.elements()))


def vfunctors(X: VCat, grid: Fraction = Fraction(1, 8)) -> FrozenSet[Vector]:
    return frozenset(enumerate_nonexpansive(X, _constants(X.quantale, grid)))


def is_dense(op: ClosureTag, X: VCat, A: PredicateSet, grid: Fraction = Fraction(1, 8)) -> bool:
    """C(A) contains every V-functor X → V_s"""
    return vfunctors(X, grid) <= close(op, X, A, grid).members


# Instances

def sample_initial_instance(q: Quantale, size: int, rng: random.Random,
                            generators: Optional[int] = None) -> Tuple[VCat, List[Vector]]:
    """Random maps first, then the structure they induce"""
    states = tuple(f"x{i}" for i in range(size))
    values = q.elements()
    count = generators if generators is not None else rng.randint(1, 3)
    maps = [tuple(rng.choice(values) for _ in states) for _ in range(count)]
    return predicate_structure(q, states, maps), maps


def sample_noninitial_instance(q: Quantale, size: int, rng: random.Random,
                               constant: bool = False) -> Tuple[VCat, List[Vector]]:
    """Induced structure met with a random extra structure, which usually breaks initiality.

    With ``constant`` the carrier is discrete on at least two points and every
    generator is constant, so the induced structure is indiscrete and the
    instance is never initial.
    """
    if constant:
        states = tuple(f"x{i}" for i in range(max(size, 2)))
        values = q.elements()
        picked = rng.sample(list(values), k=min(len(values), rng.randint(1, 2)))
        return discrete(q, states), [(u,) * len(states) for u in picked]
    X, maps = sample_initial_instance(q, size, rng)
    extra = random_symmetric_vcat(q, X.states, rng)
    return meet_structures(X, extra), maps


def check_characterizes_initiality(op: ClosureTag, q: Quantale, size_bound: int = 3, trials: int = 50,
                                   seed: int = 0) -> SuiteReport:
    """C-density of the generated propositional algebra agrees with Fun-density (initiality)"""
    if not q.is_finite:
        raise UnsupportedOperation(f"Initiality is enumerated only over finite quantales, not {q.name}")
    op = ClosureTag(op)
    outcomes = []
    for trial in range(trials):
        outcomes.append(initiality_trial(op, q, size_bound, seed + trial))
    passed = all(o.passed for o in outcomes)
    logger.info(f"Initiality check {op.value} over {q.name}: {sum(o.passed for o in outcomes)}/{trials} passed")
    return SuiteReport(suite=f"sw-{op.value}", passed=passed, trials=outcomes, details={"quantale": q.name})


def initiality_trial(op: ClosureTag, q: Quantale, size_bound: int, seed: int) -> TrialOutcome:
    rng = random.Random(seed)
    size = rng.randint(1, size_bound)
    if seed % 3 == 1:
        X, maps = sample_noninitial_instance(q, size, rng, constant=True)
    elif rng.random() < 0.5:
        X, maps = sample_initial_instance(q, size, rng)
    else:
        X, maps = sample_noninitial_instance(q, size, rng)
    A = prop_algebra_closure(X, maps)
    c_dense = is_dense(op, X, A)
    fun_dense = is_dense(ClosureTag.FUN, X, A)
    initial = predicate_structure(q, X.states, maps).matrix == X.matrix
    summary = {"states": X.size, "generators": len(maps), "algebra": len(A), "initial": initial,
               "c_dense": c_dense, "fun_dense": fun_dense}
    witness = None
    if c_dense != fun_dense:
        witness = {"vcat": vcat_to_document(X).model_dump(), "generators": [[q.render_value(u) for u in f] for f in maps]}
    return TrialOutcome(seed=seed, passed=c_dense == fun_dense, summary=summary, witness=witness)


def check_decomposition(X: VCat, A: PredicateSet, f: Sequence[Any]) -> DecompositionReport:
    """f(y) = ⋁_x ⋀_ψ f(x) ⊗ hom_s(ψ(x), ψ(y)) for an initial A"""
    q = X.quantale
    if not q.is_finite:
        return DecompositionReport(holds=None, precondition=f"{q.name} is not finite")
    if not preserves_codirected_infima(q):
        return DecompositionReport(holds=None, precondition="u ⊗ − does not preserve codirected infima")
    if predicate_structure(q, X.states, A.members).matrix != X.matrix:
        return DecompositionReport(holds=None, precondition="predicate set is not initial")
    if not is_nonexpansive(X, f):
        return DecompositionReport(holds=None, precondition="f is not nonexpansive")
    family = A.sorted()
    n = X.size
    for y in range(n):
        value = q.join(
            q.meet(q.tensor(f[x], q.hom_s(psi[x], psi[y])) for psi in family)
            for x in range(n)
        )
        if value != f[y]:
            return DecompositionReport(holds=False, witness=[X.states[y], q.render_value(value), q.render_value(f[y])])
    return DecompositionReport(holds=True)


def check_c_continuity(lam: PredicateLifting, op: ClosureTag,
                       samples: Iterable[Tuple[Coalgebra, PredicateSet]], backend: str = "lp") -> ContinuityReport:
    """λ(C(A)) ⊆ C(λ(A)) on the functor values of each sample coalgebra.

    Over unit-interval quantales the L case is checked through the sup-norm
    bound |λf − λg| ≤ sup |f − g|, which is what L-continuity amounts to there.
    """
    op = ClosureTag(op)
    checks = 0
    for c, A in samples:
        q = A.vcat.quantale
        ts = c.transitions
        if not q.is_finite and op == ClosureTag.L:
            family = A.sorted()
            for f, g in itertools.combinations(family, 2):
                bound = max(abs(u - v) for u, v in zip(f, g))
                for t in ts:
                    checks += 1
                    if abs(apply_lifting(lam, f, t) - apply_lifting(lam, g, t)) > bound:
                        return ContinuityReport(lifting=str(lam), closure=op.value, passed=False, checks=checks,
                                                witness=[[str(u) for u in f], [str(u) for u in g]])
            continue
        T = lifted_structure(c, A.vcat, ts, backend=backend)
        lifted = PredicateSet.of(T, (tuple(apply_lifting(lam, f, t) for t in ts) for f in A.members))
        target = close(op, T, lifted)
        for g in close(op, A.vcat, A).sorted():
            checks += 1
            image = tuple(apply_lifting(lam, g, t) for t in ts)
            if image not in target:
                return ContinuityReport(lifting=str(lam), closure=op.value, passed=False, checks=checks,
                                        witness=[q.render_value(u) for u in g])
    return ContinuityReport(lifting=str(lam), closure=op.value, passed=True, checks=checks)


def check_closure_laws(op: ClosureTag, samples: Iterable[Tuple[PredicateSet, PredicateSet]]) -> LawReport:
    """Extensiveness, monotonicity, idempotence and C(A) ⊆ Fun(A) on pairs A ⊆ B"""
    op = ClosureTag(op)
    counts = {"extensive": 0, "monotone": 0, "idempotent": 0, "dominated": 0}
    failures = {}
    quantale_name = "?"
    for A, B in samples:
        q = A.vcat.quantale
        quantale_name = q.name
        closed_a = close(op, A.vcat, A)
        closed_b = close(op, B.vcat, B)
        checks = {
            "extensive": A.issubset(closed_a),
            "monotone": not A.issubset(B) or closed_a.issubset(closed_b),
            "idempotent": close(op, A.vcat, closed_a).members == closed_a.members,
        }
        if q.is_finite:
            checks["dominated"] = closed_a.issubset(close(ClosureTag.FUN, A.vcat, A))
        for law, holds in checks.items():
            counts[law] += 1
            if not holds and law not in failures:
                failures[law] = A.rendered()
    laws = [LawResult(law=f"closure.{law}", passed=law not in failures, checked=count, witness=failures.get(law))
            for law, count in counts.items() if count]
    return LawReport(quantale=quantale_name, exhaustive=False, passed=not failures, laws=laws)
