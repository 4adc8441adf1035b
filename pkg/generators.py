"""
Seeded random instances: symmetric V-categories, coalgebras for every functor
tag and distribution pairs for the transport comparisons.
"""
import random
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from quantale import Quantale, diamond4, luk01
from systems import Coalgebra, FunctorKind, functor_quantale
from transport import DEADLOCK
from vcat import VCat, discrete, transitive_closure

LABEL_POOL = ("a", "b", "c")


def _sample_values(q: Quantale) -> Tuple[Any, ...]:
    return q.elements() if q.is_finite else q.grid(Fraction(1, 4))


def random_symmetric_vcat(q: Quantale, states: Sequence[str], rng: random.Random) -> VCat:
    """Symmetric random matrix repaired into a V-category by transitive closure"""
    values = _sample_values(q)
    n = len(states)
    matrix = [[q.top] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i][j] = matrix[j][i] = rng.choice(values)
    return transitive_closure(VCat(q, tuple(states), tuple(tuple(row) for row in matrix)))


def random_distribution(rng: random.Random, points: Sequence[Any], denominator: int = 8,
                        max_support: int = 3) -> Dict[Any, Fraction]:
    """Probability distribution with weights in steps of 1/denominator"""
    support = rng.sample(list(points), min(len(points), rng.randint(1, max_support)))
    cuts = sorted(rng.sample(range(1, denominator), len(support) - 1)) if len(support) > 1 else []
    bounds = [0] + cuts + [denominator]
    weights: Dict[Any, Fraction] = {}
    for x, lo, hi in zip(support, bounds, bounds[1:]):
        weights[x] = Fraction(hi - lo, denominator)
    return weights


def random_signed_weights(rng: random.Random, points: Sequence[int]) -> Dict[int, Fraction]:
    """Signed weights whose positive part is at most 1 and negative part at least −1"""
    steps = [Fraction(k, 4) for k in (-2, -1, 1, 2)]
    weights: Dict[int, Fraction] = {}
    positive = negative = Fraction(0)
    for x in rng.sample(list(points), min(len(points), rng.randint(1, 3))):
        w = rng.choice(steps)
        if w > 0 and positive + w <= 1:
            positive += w
            weights[x] = w
        elif w < 0 and negative + w >= -1:
            negative += w
            weights[x] = w
    return weights


def _successors(rng: random.Random, n: int, density: float) -> frozenset:
    return frozenset(j for j in range(n) if rng.random() < density)


def random_coalgebra(kind: FunctorKind, size: int, rng: random.Random,
                     labels: Optional[Sequence[str]] = None) -> Coalgebra:
    """Random coalgebra over the discrete base on s0 … s{size-1}"""
    kind = FunctorKind(kind)
    q = functor_quantale(kind)
    states = tuple(f"s{i}" for i in range(size))
    if labels is None:
        labels = LABEL_POOL[:rng.randint(1, 2)] if kind in (FunctorKind.LTS, FunctorKind.DIST_MAYBE,
                                                              FunctorKind.SIGNED_WEIGHTED) else ()
    labels = tuple(labels)
    density = min(0.5, 2 / max(size, 1))
    transitions: List[Any] = []
    for _ in states:
        if kind == FunctorKind.LTS:
            transitions.append({a: _successors(rng, size, density) for a in labels})
        elif kind == FunctorKind.METRIC_TS:
            transitions.append((rng.choice(q.grid(Fraction(1, 4))), _successors(rng, size, density)))
        elif kind == FunctorKind.PARA_POWERSET:
            d4 = diamond4()
            entries = {j: rng.choice(d4.elements()) for j in range(size) if rng.random() < density}
            transitions.append({j: u for j, u in entries.items() if u != d4.bottom})
        elif kind == FunctorKind.DIST_MAYBE:
            points = list(range(size)) + [DEADLOCK]
            transitions.append({a: random_distribution(rng, points, rng.choice((4, 8)))
                                for a in labels if rng.random() < 0.85})
        else:
            transitions.append({a: random_signed_weights(rng, range(size)) for a in labels})
    return Coalgebra(kind, discrete(q, states), labels, tuple(transitions))


def random_transport_instance(rng: random.Random, max_points: int = 4) -> Tuple[VCat, Dict[Any, Fraction], Dict[Any, Fraction]]:
    """A luk01 ground structure on at most max_points states and two subdistributions on it"""
    size = rng.randint(1, max_points)
    X = random_symmetric_vcat(luk01(), tuple(f"p{i}" for i in range(size)), rng)
    points = list(range(size)) + [DEADLOCK]
    return X, random_distribution(rng, points), random_distribution(rng, points)
