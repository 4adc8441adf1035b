"""
Exact transport problems behind the expectation and signed-weight liftings.

Both reduce to the potential LP

    max Σ b(v)·π(v)   subject to   π(u) − π(v) ≤ c(u, v)

whose dual is a min-cost flow with demands b. Supplies and costs are scaled
to integers so network simplex returns the optimum exactly.
"""
import logging
import math
from fractions import Fraction
from typing import Any, Dict, Hashable, Iterable, Mapping, Tuple

import networkx as nx

from models import InputError, StructuralError, UnsupportedOperation
from vcat import VCat

logger = logging.getLogger(__name__)

DEADLOCK = "deadlock"
ZERO = ("zero",)


def _common_denominator(values: Iterable[Fraction]) -> int:
    return math.lcm(*(Fraction(v).denominator for v in values), 1)


def potential_lp(supplies: Mapping[Hashable, Fraction], arcs: Iterable[Tuple[Hashable, Hashable, Fraction]]) -> Fraction:
    """Optimum of the potential LP; each arc (u, v, c) bounds π(u) − π(v) by c"""
    if sum(supplies.values(), Fraction(0)) != 0:
        raise InputError("Supplies of a potential LP must balance to zero")
    if all(b == 0 for b in supplies.values()):
        return Fraction(0)
    costs: Dict[Tuple[Hashable, Hashable], Fraction] = {}
    for u, v, c in arcs:
        if c < 0:
            raise InputError(f"Negative arc cost {c} between {u!r} and {v!r}")
        # π(u) − π(v) ≤ c is the reduced-cost condition of the flow arc v → u
        key = (v, u)
        costs[key] = min(costs.get(key, c), c)

    supply_scale = _common_denominator(supplies.values())
    cost_scale = _common_denominator(costs.values())
    graph = nx.DiGraph()
    for node, b in supplies.items():
        graph.add_node(node, demand=int(b * supply_scale))
    for (tail, head), c in costs.items():
        graph.add_edge(tail, head, weight=int(c * cost_scale))
    try:
        flow_cost, _ = nx.network_simplex(graph)
    except nx.NetworkXUnfeasible:
        raise UnsupportedOperation("Potential LP is unbounded for the given arcs")
    return Fraction(flow_cost, supply_scale * cost_scale)


def _bounded_arcs(X: VCat, support: Iterable[int]) -> Iterable[Tuple[Hashable, Hashable, Fraction]]:
    """Nonexpansiveness between support states plus 0 ≤ f ≤ 1 relative to the zero node"""
    support = list(support)
    for x in support:
        yield x, ZERO, Fraction(1)
        yield ZERO, x, Fraction(0)
        for y in support:
            if x != y and X.matrix[x][y] < 1:
                yield x, y, Fraction(X.matrix[x][y])


def _check_luk01(X: VCat) -> None:
    if X.quantale.kind != "luk01":
        raise StructuralError(f"Transport distances need a luk01 ground structure, got {X.quantale.name}")


def best_linear_gain(X: VCat, m: Mapping[int, Fraction]) -> Fraction:
    """sup Σ m(x)·f(x) over nonexpansive f: X → [0,1]"""
    _check_luk01(X)
    support = [x for x, w in m.items() if w != 0]
    supplies: Dict[Hashable, Fraction] = {x: Fraction(m[x]) for x in support}
    supplies[ZERO] = -sum(supplies.values(), Fraction(0))
    return potential_lp(supplies, _bounded_arcs(X, support))


def kantorovich_lp(X: VCat, mu: Mapping[Any, Fraction], nu: Mapping[Any, Fraction]) -> Fraction:
    """Kantorovich distance of two subdistributions on X ⊎ {deadlock}, numeric.

    Predicates are extended by deadlock ↦ 1, so the deadlock mass enters as a
    constant and the remaining problem is the bounded potential LP.
    """
    total_mu = sum(mu.values(), Fraction(0))
    total_nu = sum(nu.values(), Fraction(0))
    if total_mu != total_nu:
        raise InputError(f"Mass mismatch: {total_mu} vs {total_nu}")
    if any(w < 0 for w in list(mu.values()) + list(nu.values())):
        raise InputError("Distributions must be non-negative")
    points = set(mu) | set(nu)
    m = {x: Fraction(mu.get(x, 0)) - Fraction(nu.get(x, 0)) for x in points if x != DEADLOCK}
    deadlock_gap = Fraction(mu.get(DEADLOCK, 0)) - Fraction(nu.get(DEADLOCK, 0))
    forward = deadlock_gap + best_linear_gain(X, m)
    backward = -deadlock_gap + best_linear_gain(X, {x: -w for x, w in m.items()})
    return max(forward, backward, Fraction(0))


def signed_lp(X: VCat, s: Mapping[int, Fraction], t: Mapping[int, Fraction]) -> Fraction:
    """½ sup |Σ f(x)(s(x) − t(x))| over nonexpansive f: X → [0,1], numeric"""
    points = set(s) | set(t)
    m = {x: Fraction(s.get(x, 0)) - Fraction(t.get(x, 0)) for x in points}
    gain = max(best_linear_gain(X, m), best_linear_gain(X, {x: -w for x, w in m.items()}))
    return min(Fraction(1), gain / 2)
