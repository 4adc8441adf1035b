from fractions import Fraction

import pytest

from harness import SUITE_NAMES, fig1_document, run_suite
from harness_runner import TrialRunner, TrialStatus
from models import InputError, PreconditionError, RunConfig, TrialOutcome


def config(suite, **overrides):
    values = {"command": "check", "suite": suite, "trials": 3, "states": 3}
    values.update(overrides)
    return RunConfig(**values)


def test_fig1_document_bounds():
    assert fig1_document(Fraction(1, 4))["transitions"]["root_right"]["a"] == {"stop": "3/4", "loop": "1/4"}
    with pytest.raises(InputError):
        fig1_document(Fraction(3, 5))


def test_laws_suite_passes_and_detects_injected_faults():
    report = run_suite(config("laws"))
    assert report.passed
    faults = [t for t in report.trials if t.summary.get("injected_fault")]
    assert len(faults) == 2
    assert all(t.witness["failed"] for t in faults)


def test_fig1_suite():
    report = run_suite(config("fig1"))
    assert report.passed
    assert [t.summary["bd"] for t in report.trials] == ["1/10", "1/4"]


@pytest.mark.parametrize("suite", ["v2", "lp-vs-enum", "sw", "decomposition", "closure-laws", "invariance"])
def test_quick_trial_suites(suite):
    report = run_suite(config(suite))
    assert report.passed, [t for t in report.trials if not t.passed]
    assert report.details == {"passed": 3, "total": 3}
    assert [t.seed for t in report.trials] == [0, 1, 2]


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["adequacy", "expressivity", "continuity"])
def test_slow_trial_suites(suite):
    report = run_suite(config(suite, trials=5))
    assert report.passed, [t for t in report.trials if not t.passed]


@pytest.mark.slow
def test_adequacy_per_functor():
    for functor in ("lts", "metric_ts", "para_powerset", "dist_maybe", "signed_weighted"):
        assert run_suite(config("adequacy", functor=functor, trials=2)).passed, functor


def test_replay_is_verbose_and_deterministic():
    first = run_suite(config("v2", replay=7))
    second = run_suite(config("v2", replay=7))
    assert len(first.trials) == 1
    assert first.trials[0].witness is not None
    assert first.trials[0].summary == second.trials[0].summary
    assert first.details == {"replay": 7}


def test_unknown_suite():
    with pytest.raises(InputError):
        run_suite(config("nope"))
    assert "fig1" in SUITE_NAMES and "lp-vs-enum" in SUITE_NAMES


def test_runner_turns_domain_errors_into_failed_trials():
    def trial(seed):
        if seed == 1:
            raise PreconditionError("no luck", witness=[seed])
        return TrialOutcome(seed=seed, passed=True)

    runner = TrialRunner(workers=2)
    outcomes = runner.run_sync(trial, range(3))
    assert [o.passed for o in outcomes] == [True, False, True]
    assert outcomes[1].error == "PreconditionError: no luck"
    assert outcomes[1].witness["error"]["witness"] == [1]
    assert runner.get_status(1).status == TrialStatus.FAILED
    assert runner.get_status(0).status == TrialStatus.COMPLETED
    assert runner.get_status(5) is None


def test_runner_lets_programming_errors_through():
    def trial(seed):
        raise ZeroDivisionError

    with pytest.raises(ZeroDivisionError):
        TrialRunner().run_sync(trial, [0])
