"""
Functor instances, coalgebras, predicate liftings and Kantorovich-lifted distances.

Functor values always refer to states by index:

    lts              {label: frozenset(successors)}
    metric_ts        (label value r, frozenset(successors))
    para_powerset    {state: diamond4 element}, ⊥ entries omitted
    dist_maybe       {label: {state | "deadlock": weight}}, a missing label is δ_deadlock
    signed_weighted  {label: {state: weight}}, zero weights omitted
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from models import (
    CoalgebraDocument, CoalgebraReport, InputError, LawResult, StructuralError,
    UnsupportedOperation, format_rational, parse_rational
)
from quantale import Quantale, bool2, diamond4, luk01, max01, paraconsistent_negation, quantale_from_descriptor
from transport import DEADLOCK, kantorovich_lp, signed_lp
from vcat import VCat, discrete, enumerate_nonexpansive, validate_vcat

logger = logging.getLogger(__name__)

DEFAULT_GRID = Fraction(1, 16)
MAX_ENUMERATED_PREDICATES = 200_000
HALF = Fraction(1, 2)


class FunctorKind(str, Enum):
    LTS = "lts"
    METRIC_TS = "metric_ts"
    PARA_POWERSET = "para_powerset"
    DIST_MAYBE = "dist_maybe"
    SIGNED_WEIGHTED = "signed_weighted"


LABELLED = {FunctorKind.LTS, FunctorKind.DIST_MAYBE, FunctorKind.SIGNED_WEIGHTED}


def functor_quantale(kind: FunctorKind) -> Quantale:
    return {
        FunctorKind.LTS: bool2,
        FunctorKind.METRIC_TS: max01,
        FunctorKind.PARA_POWERSET: diamond4,
        FunctorKind.DIST_MAYBE: luk01,
        FunctorKind.SIGNED_WEIGHTED: luk01,
    }[kind]()


def parse_functor(name: str) -> FunctorKind:
    try:
        return FunctorKind(name)
    except ValueError:
        raise InputError(f"Unknown functor {name!r}")


@dataclass(frozen=True)
class PredicateLifting:
    name: str
    functor: FunctorKind
    label: Optional[str] = None
    param: Optional[Fraction] = None
    continuity: str = "id"

    @property
    def nullary(self) -> bool:
        return self.name == "o"

    @property
    def representable(self) -> bool:
        """Preserves joins and commutes with u⊗−, so representables decide the lifted distance"""
        return self.name in ("dia", "o")

    @property
    def key(self) -> Tuple[str, Optional[str], Optional[Fraction]]:
        return self.name, self.label, self.param

    def __str__(self) -> str:
        parts = [self.name]
        if self.label is not None:
            parts.append(self.label)
        if self.param is not None:
            parts.append(format_rational(self.param))
        return "/".join(parts)


def default_liftings(kind: FunctorKind, labels: Sequence[str] = ()) -> Tuple[PredicateLifting, ...]:
    if kind == FunctorKind.LTS:
        return tuple(PredicateLifting("dia", kind, label=a, continuity="cinfsup") for a in labels)
    if kind == FunctorKind.METRIC_TS:
        return (PredicateLifting("o", kind, continuity="inf"), PredicateLifting("dia", kind, continuity="cinfsup"))
    if kind == FunctorKind.PARA_POWERSET:
        return (PredicateLifting("box_sup", kind, continuity="inf"), PredicateLifting("box_arrow", kind, continuity="inf"))
    if kind == FunctorKind.DIST_MAYBE:
        return tuple(PredicateLifting("exp", kind, label=a, continuity="l") for a in labels)
    return tuple(PredicateLifting("wgt", kind, label=a, param=r, continuity="l")
                 for a in labels for r in (Fraction(0), HALF))


@dataclass(frozen=True)
class Coalgebra:
    functor: FunctorKind
    base: VCat
    labels: Tuple[str, ...]
    transitions: Tuple[Any, ...]
    liftings: Tuple[PredicateLifting, ...] = field(default=())

    def __post_init__(self):
        if len(self.transitions) != self.base.size:
            raise StructuralError("One transition entry per state is required")
        if not self.liftings:
            object.__setattr__(self, "liftings", default_liftings(self.functor, self.labels))

    @property
    def quantale(self) -> Quantale:
        return self.base.quantale

    @property
    def states(self) -> Tuple[str, ...]:
        return self.base.states

    @property
    def size(self) -> int:
        return self.base.size

    def alpha(self, i: int) -> Any:
        return self.transitions[i]

    def lifting(self, name: str, label: Optional[str] = None, param: Optional[Fraction] = None) -> PredicateLifting:
        for lam in self.liftings:
            if lam.key == (name, label, param):
                return lam
        raise InputError(f"No modality {name!r} (label={label!r}, param={param}) for {self.functor.value}")

    def with_base(self, base: VCat) -> "Coalgebra":
        return Coalgebra(self.functor, base, self.labels, self.transitions, self.liftings)


# Evaluation of liftings

def _successors(lam: PredicateLifting, t: Any) -> FrozenSet[int]:
    if lam.functor == FunctorKind.METRIC_TS:
        return t[1]
    return t.get(lam.label, frozenset())


def _distribution(lam: PredicateLifting, t: Any) -> Mapping[Any, Fraction]:
    return t.get(lam.label) or {DEADLOCK: Fraction(1)}


def apply_lifting(lam: PredicateLifting, f: Sequence[Any], t: Any) -> Any:
    """λ(f)(t) for a predicate f given as a vector over the carrier"""
    q = functor_quantale(lam.functor)
    if lam.name == "dia":
        return q.join(f[x] for x in _successors(lam, t))
    if lam.name == "o":
        return t[0]
    if lam.name == "box_sup":
        return q.meet(q.hom(g, f[x]) for x, g in t.items())
    if lam.name == "box_arrow":
        neg = paraconsistent_negation
        return q.meet(q.meet2(q.hom(g, f[x]), q.hom(neg(f[x]), neg(g))) for x, g in t.items())
    if lam.name == "exp":
        mu = _distribution(lam, t)
        return sum((f[x] * w for x, w in mu.items() if x != DEADLOCK), Fraction(0)) + mu.get(DEADLOCK, Fraction(0))
    if lam.name == "wgt":
        weights = t.get(lam.label, {})
        raw = lam.param + HALF * sum((f[x] * w for x, w in weights.items()), Fraction(0))
        return min(Fraction(1), max(Fraction(0), raw))
    raise StructuralError(f"Unknown predicate lifting {lam.name!r}")


# Functor action

def functor_action(kind: FunctorKind, t: Any, g: Sequence[int]) -> Any:
    """F g applied to a functor value, for a state map given as an index list"""
    if kind == FunctorKind.LTS:
        return {a: frozenset(g[x] for x in succ) for a, succ in t.items()}
    if kind == FunctorKind.METRIC_TS:
        return t[0], frozenset(g[x] for x in t[1])
    if kind == FunctorKind.PARA_POWERSET:
        q = diamond4()
        image: Dict[int, str] = {}
        for x, u in t.items():
            image[g[x]] = q.join2(image.get(g[x], q.bottom), u)
        return {y: u for y, u in image.items() if u != q.bottom}
    if kind == FunctorKind.DIST_MAYBE:
        return {a: _pushforward(mu, g) for a, mu in t.items()}
    return {a: _pushforward(weights, g) for a, weights in t.items()}


def _pushforward(weights: Mapping[Any, Fraction], g: Sequence[int]) -> Dict[Any, Fraction]:
    image: Dict[Any, Fraction] = {}
    for x, w in weights.items():
        target = x if x == DEADLOCK else g[x]
        image[target] = image.get(target, Fraction(0)) + w
    return {y: w for y, w in image.items() if w != 0}


def check_naturality(lam: PredicateLifting, samples: Iterable[Tuple[Sequence[int], Sequence[Any], Any]]) -> LawResult:
    """λ(f∘g)(t) = λ(f)(F g (t)) on sampled (g, f, t)"""
    checked = 0
    for g, f, t in samples:
        checked += 1
        pulled = [f[g[x]] for x in range(len(g))]
        if apply_lifting(lam, pulled, t) != apply_lifting(lam, f, functor_action(lam.functor, t, g)):
            return LawResult(law=f"naturality.{lam}", passed=False, checked=checked, witness=[list(g), repr(t)])
    return LawResult(law=f"naturality.{lam}", passed=True, checked=checked)


# Lifted distances

def _representable_distance(lam: PredicateLifting, X: VCat, t1: Any, t2: Any) -> Any:
    q = X.quantale
    if lam.nullary:
        return q.hom_s(t1[0], t2[0])
    return q.meet(q.hom_s(apply_lifting(lam, row, t1), apply_lifting(lam, row, t2)) for row in X.matrix)


def _clamp_inactive(lam: PredicateLifting, *values: Any) -> bool:
    for t in values:
        weights = t.get(lam.label, {})
        positive = sum((w for w in weights.values() if w > 0), Fraction(0))
        negative = sum((w for w in weights.values() if w < 0), Fraction(0))
        if lam.param + HALF * negative < 0 or lam.param + HALF * positive > 1:
            return False
    return True


def lifting_lp_distance(lam: PredicateLifting, X: VCat, t1: Any, t2: Any) -> Fraction:
    """Exact Kantorovich distance for one expectation or unclamped weight lifting"""
    if lam.name == "exp":
        return kantorovich_lp(X, _distribution(lam, t1), _distribution(lam, t2))
    if lam.name == "wgt":
        if not _clamp_inactive(lam, t1, t2):
            raise UnsupportedOperation(f"{lam} clamps on these values; the LP is exact only without clamping")
        return signed_lp(X, t1.get(lam.label, {}), t2.get(lam.label, {}))
    raise UnsupportedOperation(f"The LP backend handles expectation and weight liftings, not {lam.name}")


def _enumeration_values(q: Quantale, grid: Fraction) -> Tuple[Any, ...]:
    return q.elements() if q.is_finite else q.grid(grid)


def _enumerated_distance(liftings: Sequence[PredicateLifting], X: VCat, t1: Any, t2: Any,
                         values: Sequence[Any]) -> Any:
    q = X.quantale
    result = q.top
    for f in enumerate_nonexpansive(X, values, limit=MAX_ENUMERATED_PREDICATES):
        for lam in liftings:
            result = q.meet2(result, q.hom_s(apply_lifting(lam, f, t1), apply_lifting(lam, f, t2)))
        if result == q.bottom:
            break
    return result


def _plan(liftings: Sequence[PredicateLifting], backend: str, values: Sequence[Any]):
    """Split liftings into representable, LP-solved and enumerated groups"""
    representable = [lam for lam in liftings if lam.representable]
    rest = [lam for lam in liftings if not lam.representable]
    if backend == "enum":
        return representable, [], rest
    lp = [lam for lam in rest if lam.name in ("exp", "wgt")]
    enumerated = [lam for lam in rest if lam.name not in ("exp", "wgt")]
    return representable, lp, enumerated


def _lp_group_distance(q: Quantale, lp: Sequence[PredicateLifting], X: VCat, t1: Any, t2: Any) -> Any:
    result = q.top
    exact_labels = {lam.label for lam in lp if lam.name == "wgt" and _clamp_inactive(lam, t1, t2)}
    for lam in lp:
        if lam.name == "wgt" and not _clamp_inactive(lam, t1, t2):
            if lam.label in exact_labels:
                # clamping is 1-Lipschitz, so the unclamped lifting on this label dominates
                continue
            raise UnsupportedOperation(f"{lam} clamps and no unclamped weight lifting covers label {lam.label!r}")
        result = q.meet2(result, lifting_lp_distance(lam, X, t1, t2))
    return result


def lifted_distance(liftings: Sequence[PredicateLifting], X: VCat, t1: Any, t2: Any,
                    backend: str = "lp", grid: Fraction = DEFAULT_GRID) -> Any:
    """Kantorovich distance of two functor values over X.

    With backend "lp": representable liftings are exact for every quantale,
    expectation and weight liftings are solved exactly as transport LPs and the
    remaining liftings are enumerated over a finite carrier. With backend
    "enum" every non-representable lifting is enumerated over the carrier or
    grid, which for unit-interval quantales is a numeric lower bound.
    """
    q = X.quantale
    values = _enumeration_values(q, grid)
    representable, lp, enumerated = _plan(liftings, backend, values)
    if enumerated and backend == "lp" and not q.is_finite:
        raise UnsupportedOperation(f"No exact backend for {[str(lam) for lam in enumerated]} over {q.name}")
    result = q.top
    for lam in representable:
        result = q.meet2(result, _representable_distance(lam, X, t1, t2))
    if lp:
        result = q.meet2(result, _lp_group_distance(q, lp, X, t1, t2))
    if enumerated:
        result = q.meet2(result, _enumerated_distance(enumerated, X, t1, t2, values))
    return result


def lifted_matrix(c: Coalgebra, X: VCat, liftings: Optional[Sequence[PredicateLifting]] = None,
                  backend: str = "lp", grid: Fraction = DEFAULT_GRID) -> Tuple[Tuple[Any, ...], ...]:
    """Matrix of lifted distances between α(x) and α(y) over the structure X.

    Enumerated predicates are generated once and scored against every pair.
    """
    q = X.quantale
    n = c.size
    liftings = list(liftings if liftings is not None else c.liftings)
    values = _enumeration_values(q, grid)
    representable, lp, enumerated = _plan(liftings, backend, values)
    if enumerated and backend == "lp" and not q.is_finite:
        raise UnsupportedOperation(f"No exact backend for {[str(lam) for lam in enumerated]} over {q.name}")
    ts = [c.alpha(i) for i in range(n)]
    matrix = [[q.top for _ in range(n)] for _ in range(n)]

    for lam in representable:
        rows = X.matrix if not lam.nullary else [X.matrix[0]]
        table = [[apply_lifting(lam, row, t) for t in ts] for row in rows]
        for i in range(n):
            for j in range(i, n):
                d = q.meet(q.hom_s(scores[i], scores[j]) for scores in table)
                matrix[i][j] = q.meet2(matrix[i][j], d)

    if enumerated:
        for f in enumerate_nonexpansive(X, values, limit=MAX_ENUMERATED_PREDICATES):
            for lam in enumerated:
                scores = [apply_lifting(lam, f, t) for t in ts]
                for i in range(n):
                    for j in range(i, n):
                        matrix[i][j] = q.meet2(matrix[i][j], q.hom_s(scores[i], scores[j]))

    if lp:
        for i in range(n):
            for j in range(i + 1, n):
                matrix[i][j] = q.meet2(matrix[i][j], _lp_group_distance(q, lp, X, ts[i], ts[j]))

    for i in range(n):
        for j in range(i):
            matrix[i][j] = matrix[j][i]
    return tuple(tuple(row) for row in matrix)


def lifted_structure(c: Coalgebra, X: VCat, values: Sequence[Any], names: Optional[Sequence[str]] = None,
                     backend: str = "lp", grid: Fraction = DEFAULT_GRID) -> VCat:
    """The Kantorovich structure on a finite list of functor values over X"""
    names = tuple(names or (f"t{i}" for i in range(len(values))))
    probe = Coalgebra(c.functor, discrete(X.quantale, names), c.labels, tuple(values), c.liftings)
    return VCat(X.quantale, names, lifted_matrix(probe, X, c.liftings, backend, grid))


# Validation

def _value_violations(c: Coalgebra) -> List[LawResult]:
    results = []
    q = c.quantale
    kind = c.functor
    for i, t in enumerate(c.transitions):
        state = c.states[i]
        if kind == FunctorKind.DIST_MAYBE:
            for a, mu in t.items():
                if any(w < 0 for w in mu.values()) or sum(mu.values(), Fraction(0)) != 1:
                    results.append(LawResult(law="distribution.mass", passed=False, checked=1,
                                             witness=[state, a, format_rational(sum(mu.values(), Fraction(0)))]))
        elif kind == FunctorKind.SIGNED_WEIGHTED:
            for a, weights in t.items():
                positive = sum((w for w in weights.values() if w > 0), Fraction(0))
                negative = sum((w for w in weights.values() if w < 0), Fraction(0))
                if positive > 1 or negative < -1:
                    results.append(LawResult(law="weights.subset_sums", passed=False, checked=1,
                                             witness=[state, a, format_rational(positive), format_rational(negative)]))
        elif kind == FunctorKind.METRIC_TS:
            if not q.contains(t[0]):
                results.append(LawResult(law="label.range", passed=False, checked=1, witness=[state]))
        elif kind == FunctorKind.PARA_POWERSET:
            bad = [x for x, u in t.items() if not q.contains(u)]
            if bad:
                results.append(LawResult(law="para.values", passed=False, checked=1, witness=[state]))
    return results


def validate_coalgebra(c: Coalgebra, backend: str = "lp", grid: Fraction = DEFAULT_GRID) -> CoalgebraReport:
    violations = _value_violations(c)
    base_report = validate_vcat(c.base, require_symmetric=True)
    violations.extend(law for law in base_report.laws if not law.passed)
    if not violations:
        lifted = lifted_matrix(c, c.base, c.liftings, backend, grid)
        q = c.quantale
        witness = next(([c.states[i], c.states[j]] for i in range(c.size) for j in range(c.size)
                        if not q.leq(c.base.matrix[i][j], lifted[i][j])), None)
        if witness is not None:
            violations.append(LawResult(law="structure.nonexpansive", passed=False, checked=c.size ** 2,
                                        witness=witness))
    if violations:
        logger.info(f"Coalgebra failed validation: {[v.law for v in violations]}")
    return CoalgebraReport(valid=not violations, functor=c.functor.value, violations=violations)


# JSON

def load_coalgebra(raw: Any, max_states: Optional[int] = None) -> Coalgebra:
    document = raw if isinstance(raw, CoalgebraDocument) else CoalgebraDocument.model_validate(raw)
    kind = parse_functor(document.functor)
    q = functor_quantale(kind)
    if document.quantale is not None and quantale_from_descriptor(document.quantale) != q:
        raise StructuralError(f"Functor {kind.value} lives over {q.name}")
    states = tuple(document.states)
    if not states:
        raise InputError("A coalgebra needs at least one state")
    if max_states is not None and len(states) > max_states:
        raise InputError(f"{len(states)} states exceed the cap of {max_states}")
    if kind == FunctorKind.DIST_MAYBE and DEADLOCK in states:
        raise StructuralError(f"{DEADLOCK!r} is reserved and cannot name a state")
    index = {s: i for i, s in enumerate(states)}
    labels = tuple(document.labels or ())
    if kind in LABELLED and not labels:
        labels = tuple(sorted({a for payload in document.transitions.values() for a in (payload or {})}))
    if set(document.transitions) - set(states):
        raise StructuralError("Transitions mention unknown states", witness=sorted(set(document.transitions) - set(states)))

    def state(name: Any) -> int:
        if name not in index:
            raise StructuralError(f"Unknown target state {name!r}")
        return index[name]

    transitions = tuple(_parse_value(kind, q, labels, document.transitions.get(s), state) for s in states)
    if document.base_matrix is None:
        base = discrete(q, states)
    else:
        if len(document.base_matrix) != len(states):
            raise StructuralError("Base matrix rows do not match the states")
        base = VCat(q, states, tuple(tuple(q.parse_value(u) for u in row) for row in document.base_matrix))
    return Coalgebra(kind, base, labels, transitions)


def _parse_value(kind: FunctorKind, q: Quantale, labels: Sequence[str], payload: Any, state) -> Any:
    payload = payload or {}
    if kind in LABELLED:
        unknown = set(payload) - set(labels)
        if unknown:
            raise StructuralError(f"Unknown labels {sorted(unknown)}")
    if kind == FunctorKind.LTS:
        return {a: frozenset(state(s) for s in payload.get(a, [])) for a in labels}
    if kind == FunctorKind.METRIC_TS:
        return parse_rational(payload.get("value", "0")), frozenset(state(s) for s in payload.get("successors", []))
    if kind == FunctorKind.PARA_POWERSET:
        values = {state(s): q.parse_value(u) for s, u in payload.items()}
        return {x: u for x, u in values.items() if u != q.bottom}
    result = {}
    for a in labels:
        if a not in payload:
            continue
        weights: Dict[Any, Fraction] = {}
        for target, w in payload[a].items():
            key = DEADLOCK if (kind == FunctorKind.DIST_MAYBE and target == DEADLOCK) else state(target)
            weights[key] = weights.get(key, Fraction(0)) + parse_rational(w)
        result[a] = {x: w for x, w in weights.items() if w != 0}
    return result


def dump_coalgebra(c: Coalgebra) -> Dict[str, Any]:
    q = c.quantale
    names = c.states
    transitions: Dict[str, Any] = {}
    for i, t in enumerate(c.transitions):
        if c.functor == FunctorKind.LTS:
            payload = {a: sorted(names[x] for x in succ) for a, succ in t.items() if succ}
        elif c.functor == FunctorKind.METRIC_TS:
            payload = {"value": format_rational(t[0]), "successors": sorted(names[x] for x in t[1])}
        elif c.functor == FunctorKind.PARA_POWERSET:
            payload = {names[x]: q.render_value(u) for x, u in sorted(t.items())}
        else:
            payload = {a: {target: format_rational(w) for target, w in sorted(
                               ((x if x == DEADLOCK else names[x]), w) for x, w in weights.items())}
                       for a, weights in t.items()}
        transitions[names[i]] = payload
    base_is_discrete = c.base == discrete(q, names)
    document = CoalgebraDocument(
        quantale=q.descriptor(),
        functor=c.functor.value,
        labels=list(c.labels) if c.functor in LABELLED else None,
        states=list(names),
        base_matrix=None if base_is_discrete else [[q.render_value(u) for u in row] for row in c.base.matrix],
        transitions=transitions,
    )
    return document.model_dump(exclude_none=True)
