"""
Acceptance suites. Trial-based suites draw one instance per seed and run
through the TrialRunner; `laws` and `fig1` are fixed computations.
"""
import functools
import logging
import random
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

from closure import (
    ClosureTag, PredicateSet, check_c_continuity, check_closure_laws, check_decomposition, initiality_trial,
    parse_closure, sample_initial_instance
)
from engine import (
    bd_fixpoint, check_adequacy, check_expressivity, check_morphism_invariance,
    distinguishing_formula, logical_distance, partition_refinement, quotient_coalgebra
)
from formulas import format_formula
from generators import random_coalgebra, random_transport_instance
from harness_runner import TrialRunner
from models import InputError, RunConfig, SuiteReport, TrialOutcome, format_rational
from quantale import (
    bool2, diamond4, luk01, max01, product, q_validate, quantale_by_name, random_table_quantale, with_tensor_entry
)
from systems import (
    Coalgebra, FunctorKind, PredicateLifting, dump_coalgebra, lifted_distance, load_coalgebra, parse_functor
)
from transport import kantorovich_lp
from vcat import all_maps, enumerate_nonexpansive

logger = logging.getLogger(__name__)

EXPRESSIVITY_TOLERANCE = Fraction(1, 20)
FINITE_FUNCTORS = (FunctorKind.LTS, FunctorKind.PARA_POWERSET)
CONTINUITY_FUNCTORS = (FunctorKind.LTS, FunctorKind.PARA_POWERSET, FunctorKind.DIST_MAYBE)


def fig1_document(epsilon: Fraction = Fraction(1, 10)) -> Dict[str, Any]:
    """Two roots that differ only by moving ε of probability from the loop to the deadlock"""
    half = Fraction(1, 2)
    if not 0 <= epsilon <= half:
        raise InputError("epsilon must lie in [0, 1/2]")
    return {
        "functor": "dist_maybe",
        "labels": ["a"],
        "states": ["root_left", "root_right", "stop", "loop"],
        "transitions": {
            "root_left": {"a": {"stop": "1/2", "loop": "1/2"}},
            "root_right": {"a": {"stop": format_rational(half + epsilon), "loop": format_rational(half - epsilon)}},
            "stop": {},
            "loop": {"a": {"loop": "1"}},
        },
    }


def _kind(config: RunConfig, seed: int, pool=tuple(FunctorKind)) -> FunctorKind:
    return parse_functor(config.functor) if config.functor else pool[seed % len(pool)]


def _outcome(seed: int, passed: bool, summary: Dict[str, Any], c: Optional[Coalgebra] = None,
             verbose: bool = False, **extra) -> TrialOutcome:
    witness = None
    if verbose or not passed:
        witness = dict(extra)
        if c is not None:
            witness["coalgebra"] = dump_coalgebra(c)
    return TrialOutcome(seed=seed, passed=passed, summary=summary, witness=witness)


# Fixed suites

def run_laws(config: RunConfig) -> SuiteReport:
    rng = random.Random(config.seed)
    cases = [
        (bool2(), None), (diamond4(), None), (max01(), None), (luk01(), None),
        (product(luk01(), luk01()), Fraction(1, 8)),
    ] + [(random_table_quantale(rng), None) for _ in range(5)]
    outcomes = []
    for index, (q, resolution) in enumerate(cases):
        report = q_validate(q, resolution) if resolution else q_validate(q)
        outcomes.append(TrialOutcome(seed=index, passed=report.passed,
                                     summary={"quantale": q.name, "exhaustive": report.exhaustive},
                                     witness=None if report.passed else {"laws": [l.model_dump() for l in report.laws]}))
    faults = [
        with_tensor_entry(bool2(), "top", "bot", "top"),
        with_tensor_entry(diamond4(), "N", "B", "N"),
    ]
    for index, q in enumerate(faults, start=len(cases)):
        report = q_validate(q)
        failed = [law.model_dump() for law in report.laws if not law.passed]
        outcomes.append(TrialOutcome(seed=index, passed=not report.passed,
                                     summary={"quantale": q.name, "injected_fault": True},
                                     witness={"failed": failed}))
    return SuiteReport(suite="laws", passed=all(o.passed for o in outcomes), trials=outcomes)


def run_fig1(config: RunConfig) -> SuiteReport:
    outcomes = []
    for index, epsilon in enumerate((Fraction(1, 10), Fraction(1, 4))):
        c = load_coalgebra(fig1_document(epsilon))
        bd = bd_fixpoint(c, backend="lp", eps=config.eps)
        distance = bd.value("root_left", "root_right")
        formula, gap = distinguishing_formula(c, "root_left", "root_right", budget=config.budget, depth=2)
        passed = distance == epsilon and gap >= epsilon and formula.depth <= 2
        outcomes.append(TrialOutcome(seed=index, passed=passed, summary={
            "epsilon": format_rational(epsilon),
            "bd": format_rational(distance),
            "steps": bd.steps,
            "formula": format_formula(formula, c.quantale),
            "gap": format_rational(gap),
        }))
    return SuiteReport(suite="fig1", passed=all(o.passed for o in outcomes), trials=outcomes)


# Trials

def adequacy_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    rng = random.Random(seed)
    kind = _kind(config, seed)
    c = random_coalgebra(kind, rng.randint(1, config.states), rng)
    report = check_adequacy(c, depth=config.depth, backend=config.backend, eps=config.eps, width=config.width,
                            grid=config.formula_grid)
    summary = {"functor": kind.value, "states": c.size, "formulas": report.formulas_checked}
    return _outcome(seed, report.passed, summary, c, verbose,
                    violations=[v.model_dump() for v in report.violations])


def expressivity_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    rng = random.Random(seed)
    kind = _kind(config, seed, FINITE_FUNCTORS)
    c = random_coalgebra(kind, rng.randint(1, config.states), rng)
    if c.quantale.is_finite:
        steps = bd_fixpoint(c, backend=config.backend).steps
        report = check_expressivity(c, schedule=range(steps + 1), backend=config.backend, width=config.width)
        passed = report.passed and report.entries[-1].exact
    else:
        report = check_expressivity(c, schedule=range(config.depth + 1), backend=config.backend,
                                    eps=config.eps, width=config.width, grid=config.formula_grid)
        passed = report.passed
    final = report.entries[-1]
    summary = {"functor": kind.value, "states": c.size, "depth": final.depth, "gap": final.gap,
               "monotone": report.monotone}
    if not c.quantale.is_finite:
        summary["within_tolerance"] = Fraction(final.gap) <= EXPRESSIVITY_TOLERANCE
    return _outcome(seed, passed, summary, c, verbose, entries=[e.model_dump() for e in report.entries])


def v2_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    """Boolean distance, bisimilarity and logical equivalence coincide on an lts"""
    rng = random.Random(seed)
    c = random_coalgebra(FunctorKind.LTS, rng.randint(1, config.states), rng)
    bd = bd_fixpoint(c)
    classes = {frozenset(block) for block in bd.equivalence()}
    refined = {frozenset(block) for block in partition_refinement(c)}
    ld, _ = logical_distance(c, depth=c.size)
    passed = classes == refined and ld.matrix == bd.matrix
    summary = {"states": c.size, "classes": len(classes), "steps": bd.steps}
    return _outcome(seed, passed, summary, c, verbose,
                    bd_classes=sorted(sorted(b) for b in classes), refined=sorted(sorted(b) for b in refined))


def lp_vs_enum_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    """The exact transport value bounds the grid enumeration from above, within |X| grid steps"""
    rng = random.Random(seed)
    X, mu, nu = random_transport_instance(rng)
    exact = kantorovich_lp(X, mu, nu)
    lam = PredicateLifting("exp", FunctorKind.DIST_MAYBE, label="a")
    approximate = lifted_distance([lam], X, {"a": mu}, {"a": nu}, backend="enum", grid=config.grid)
    slack = X.size * config.grid
    passed = approximate <= exact <= approximate + slack
    summary = {"points": X.size, "lp": format_rational(exact), "enum": format_rational(approximate)}
    return _outcome(seed, passed, summary, verbose=verbose,
                    mu={str(k): format_rational(w) for k, w in mu.items()},
                    nu={str(k): format_rational(w) for k, w in nu.items()})


def sw_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    q = quantale_by_name(config.quantale or "bool2")
    return initiality_trial(parse_closure(config.closure_op), q, min(config.states, 3), seed)


def decomposition_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    rng = random.Random(seed)
    q = quantale_by_name(config.quantale or "diamond4")
    X, maps = sample_initial_instance(q, rng.randint(1, min(config.states, 3)), rng)
    f = rng.choice(list(enumerate_nonexpansive(X, q.elements())))
    report = check_decomposition(X, PredicateSet.of(X, maps), f)
    summary = {"quantale": q.name, "states": X.size, "holds": report.holds}
    return _outcome(seed, report.holds is True, summary, verbose=verbose, report=report.model_dump(),
                    f=[q.render_value(u) for u in f])


def closure_laws_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    rng = random.Random(seed)
    q = quantale_by_name(config.quantale or "diamond4")
    X, maps = sample_initial_instance(q, rng.randint(1, min(config.states, 3)), rng)
    extra = rng.sample(list(all_maps(q, X.size)), k=rng.randint(0, 2))
    A = PredicateSet.of(X, maps)
    B = PredicateSet.of(X, list(maps) + extra)
    reports = {op.value: check_closure_laws(op, [(A, B)]) for op in ClosureTag}
    passed = all(r.passed for r in reports.values())
    summary = {"quantale": q.name, "states": X.size, "failed": [op for op, r in reports.items() if not r.passed]}
    return _outcome(seed, passed, summary, verbose=verbose,
                    laws={op: [l.model_dump() for l in r.laws] for op, r in reports.items()})


def continuity_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    rng = random.Random(seed)
    kind = _kind(config, seed, CONTINUITY_FUNCTORS)
    c = random_coalgebra(kind, rng.randint(1, min(config.states, 3)), rng)
    q = c.quantale
    values = q.elements() if q.is_finite else q.grid(Fraction(1, 4))
    maps = [tuple(rng.choice(values) for _ in c.states) for _ in range(rng.randint(1, 3))]
    A = PredicateSet.of(c.base, maps)
    lam = c.liftings[0]
    ops = [ClosureTag.ID, ClosureTag(lam.continuity)] if config.closure_op == "id" else [parse_closure(config.closure_op)]
    reports = [check_c_continuity(lam, op, [(c, A)], backend=config.backend) for op in ops]
    passed = all(r.passed for r in reports)
    summary = {"functor": kind.value, "lifting": str(lam), "closures": [r.closure for r in reports],
               "checks": sum(r.checks for r in reports)}
    return _outcome(seed, passed, summary, c, verbose, reports=[r.model_dump() for r in reports])


def invariance_trial(seed: int, config: RunConfig, verbose: bool = False) -> TrialOutcome:
    """The quotient by bisimilarity preserves bd and every enumerated formula"""
    rng = random.Random(seed)
    c = random_coalgebra(FunctorKind.LTS, rng.randint(1, config.states), rng)
    d, mapping = quotient_coalgebra(c, partition_refinement(c))
    report = check_morphism_invariance(c, d, mapping, depth=config.depth, width=config.width)
    summary = {"states": c.size, "quotient": d.size, "formulas": report.formulas_checked}
    return _outcome(seed, report.passed, summary, c, verbose, report=report.model_dump())


FIXED_SUITES: Dict[str, Callable[[RunConfig], SuiteReport]] = {
    "laws": run_laws,
    "fig1": run_fig1,
}

TRIAL_SUITES: Dict[str, Callable[..., TrialOutcome]] = {
    "adequacy": adequacy_trial,
    "expressivity": expressivity_trial,
    "v2": v2_trial,
    "lp-vs-enum": lp_vs_enum_trial,
    "sw": sw_trial,
    "decomposition": decomposition_trial,
    "closure-laws": closure_laws_trial,
    "continuity": continuity_trial,
    "invariance": invariance_trial,
}

SUITE_NAMES = tuple(FIXED_SUITES) + tuple(TRIAL_SUITES)


def run_suite(config: RunConfig) -> SuiteReport:
    name = config.suite
    if name in FIXED_SUITES:
        return FIXED_SUITES[name](config)
    if name not in TRIAL_SUITES:
        raise InputError(f"Unknown suite {name!r}; expected one of {', '.join(SUITE_NAMES)}")
    trial = TRIAL_SUITES[name]
    if config.replay is not None:
        outcome = trial(config.replay, config, verbose=True)
        return SuiteReport(suite=name, passed=outcome.passed, trials=[outcome], details={"replay": config.replay})
    seeds = range(config.seed, config.seed + config.trials)
    outcomes: List[TrialOutcome] = TrialRunner().run_sync(functools.partial(trial, config=config), seeds)
    passed = sum(1 for o in outcomes if o.passed)
    logger.info(f"Suite {name}: {passed}/{len(outcomes)} trials passed")
    return SuiteReport(suite=name, passed=passed == len(outcomes), trials=outcomes,
                       details={"passed": passed, "total": len(outcomes)})
