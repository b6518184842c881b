import math

import numpy as np
import pytest

from src.core.circuitir import Circuit, parse_circuit
from src.core.dilution import EpsilonParams, dilute
from src.core.errors import InputError
from src.core.experiments import (
    HIGH,
    INCONCLUSIVE,
    LOW,
    TRACE_COLUMNS,
    WHOLE_REGISTER,
    CounterexampleSpec,
    counterexample_renyi_closed_form,
    counterexample_report,
    counterexample_state,
    decide,
    decision_experiment,
    entanglement_trace,
    integrated_entanglement,
    meta_trials,
    pseudo_pure,
    pseudo_pure_convex_bound,
    required_runs,
    sample_s_epsilon,
    trace_frame,
    trace_summary,
)
from src.core.statecore import Bipartition, trace_distance_pure, von_neumann_entropy, zero_state


@pytest.fixture
def x_circuit():
    return parse_circuit("qubits 1\nx 0\n", name="flip").circuit


def test_required_runs():
    assert required_runs(0.1, 1e-3) == 13682
    assert required_runs(1.0, 1e-3) == 137
    for bad in ((0.0, 0.1), (0.1, 0.0), (0.1, 2.0), (1.5, 0.1)):
        with pytest.raises(InputError):
            required_runs(*bad)


def test_decide_thresholds():
    assert decide(0.9) == HIGH
    assert decide(0.1) == LOW
    assert decide(0.5) == INCONCLUSIVE
    assert decide(0.5 + 1 / 12 - 1e-6) == INCONCLUSIVE
    assert decide(0.5 + 1 / 12 + 1e-6) == HIGH


def test_decision_on_certain_outcome(x_circuit):
    report = decision_experiment(x_circuit, EpsilonParams(0.25), required_runs(0.25, 1e-3), seed=7)
    assert report.q_exact == pytest.approx(0.25, abs=1e-12)
    assert report.decision == HIGH
    assert abs(report.q_hat - 0.25) < 0.25 / 6


def test_decision_on_empty_circuit():
    report = decision_experiment(Circuit(2, ()), EpsilonParams(0.1), 2000, seed=3)
    assert report.q_hat == 0.0
    assert report.decision == LOW


def test_decision_is_reproducible_and_worker_independent(bell_circuit):
    eps = EpsilonParams(0.5)
    first = decision_experiment(bell_circuit, eps, 10000, seed=11, workers=1)
    again = decision_experiment(bell_circuit, eps, 10000, seed=11, workers=4)
    assert first.to_dict() == again.to_dict()
    other = decision_experiment(bell_circuit, eps, 10000, seed=12)
    assert other.q_hat != first.q_hat


def test_literal_path_matches_sampled_path(bell_circuit):
    eps = EpsilonParams(0.5)
    sampled = decision_experiment(bell_circuit, eps, 300, seed=5)
    literal = decision_experiment(bell_circuit, eps, 300, seed=5, literal=True)
    assert literal.literal and not sampled.literal
    assert literal.q_hat == sampled.q_hat
    assert literal.decision == sampled.decision


def test_decision_rejects_nonpositive_runs(x_circuit):
    with pytest.raises(InputError):
        decision_experiment(x_circuit, EpsilonParams(0.1), 0, seed=1)


def test_meta_trials_pick_the_promised_side(x_circuit):
    summary = meta_trials(x_circuit, EpsilonParams(0.5), runs=required_runs(0.5, 1e-2), trials=20, seed=2)
    assert summary.expected == HIGH
    assert summary.correct == 20
    assert summary.to_dict()["counts"] == {HIGH: 20}


def test_meta_trials_without_promise(bell_circuit):
    summary = meta_trials(bell_circuit, EpsilonParams(0.5), runs=100, trials=3, seed=2)
    assert summary.p_exact == pytest.approx(0.5)
    assert summary.expected is None
    assert summary.correct == 0


def test_counterexample_reference_values():
    spec = CounterexampleSpec(10, 0.5)
    assert spec.eps == pytest.approx(2 ** -5)
    report = counterexample_report(spec)
    assert report.distance == pytest.approx(2 ** -2.5, abs=1e-12)
    assert report.renyi == pytest.approx(5.4617, abs=1e-3)
    assert report.renyi == pytest.approx(report.renyi_closed_form, abs=1e-9)
    assert report.von_neumann == pytest.approx(0.513, abs=1e-3)
    data = report.to_dict()
    assert set(data) >= {"S_0.5", "S_0.5_closed_form", "S_1", "trace_distance", "expected_distance"}


def test_counterexample_smallest_instance():
    spec = CounterexampleSpec(1, 0.5)
    psi = counterexample_state(spec)
    assert psi.n == 2
    assert trace_distance_pure(psi, zero_state(2)) == pytest.approx(math.sqrt(spec.eps))
    report = counterexample_report(spec)
    assert report.renyi == pytest.approx(counterexample_renyi_closed_form(spec, 0.5), abs=1e-12)
    assert report.von_neumann == pytest.approx(counterexample_renyi_closed_form(spec, 1), abs=1e-12)


def test_counterexample_validation():
    with pytest.raises(InputError):
        CounterexampleSpec(0, 0.5)
    with pytest.raises(InputError):
        CounterexampleSpec(3, 1.0)


def test_sample_s_epsilon_stays_in_ball():
    rng = np.random.default_rng(1)
    for _ in range(20):
        psi = sample_s_epsilon(5, 0.05, rng)
        assert trace_distance_pure(psi, zero_state(5)) <= 0.05 + 1e-12
    assert np.allclose(sample_s_epsilon(3, 0.0, 1).amplitudes, zero_state(3).amplitudes)
    assert np.allclose(sample_s_epsilon(4, 0.1, 9).amplitudes, sample_s_epsilon(4, 0.1, 9).amplitudes)


def test_pseudo_pure(bell):
    rho = pseudo_pure(bell, 0.2)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)
    assert von_neumann_entropy(pseudo_pure(bell, 0.0)) == pytest.approx(2.0)
    assert pseudo_pure_convex_bound(0.2, 1.0) == pytest.approx(0.2)
    with pytest.raises(InputError):
        pseudo_pure_convex_bound(0.2, -1.0)


def test_diluted_trace_checks_pass(bell_circuit):
    eps = 0.01
    d = dilute(bell_circuit, EpsilonParams(eps)).transformed
    trace = entanglement_trace(d, measures=("entropy", "renyi2", "geometric", "concurrence"),
                               eps_context=eps, geometric_restarts=2)
    assert len(trace) == len(d) + 1
    assert trace[0].distance == 0.0
    assert all(step.passed for step in trace)
    assert all(r.error is None for step in trace for r in step.records)
    for step in trace[1:]:
        assert step.distance == pytest.approx(0.1, abs=1e-10)


def test_bell_trace_reaches_one_ebit(bell_circuit):
    trace = entanglement_trace(bell_circuit, measures=("entropy",))
    final = trace[-1].measures[f"entropy@{Bipartition(2, (0,)).label}"]
    assert final.value == pytest.approx(1.0)
    # the Bell state is too far from |00> for the entropy bound to apply
    record = trace[-1].records[0]
    assert record.check is None and "OutOfRegimeError" in record.error


def test_empty_circuit_trace_is_single_step():
    trace = entanglement_trace(Circuit(3, ()), measures=("entropy", "schmidt_rank"))
    assert len(trace) == 1
    assert all(v.value == pytest.approx(0.0, abs=1e-12) for v in trace[0].measures.values())


def test_domain_errors_stay_in_band():
    trace = entanglement_trace(Circuit(3, ()), measures=("n_tangle", "entropy"))
    errors = [r for r in trace[0].records if r.error]
    assert [r.measure for r in errors] == ["n_tangle"]
    assert errors[0].bipartition == WHOLE_REGISTER
    assert "DomainError" in errors[0].error


def test_trace_outside_declared_ball_is_flagged(bell_circuit):
    trace = entanglement_trace(bell_circuit, measures=("entropy",), eps_context=0.01)
    membership = [r for r in trace[-1].records if r.measure == "membership"]
    assert membership and "outside the declared ball" in membership[0].error


def test_trace_rejects_unknown_measure_and_mismatched_cut(bell_circuit):
    with pytest.raises(InputError):
        entanglement_trace(bell_circuit, measures=("magic",))
    with pytest.raises(InputError):
        entanglement_trace(bell_circuit, bipartitions=[Bipartition(3, (0,))])


def test_trace_is_worker_independent(bell_circuit):
    d = dilute(bell_circuit, EpsilonParams(0.02)).transformed
    serial = entanglement_trace(d, measures=("entropy", "geometric"), eps_context=0.02, geometric_restarts=3)
    threaded = entanglement_trace(d, measures=("entropy", "geometric"), eps_context=0.02,
                                  geometric_restarts=3, workers=4)
    assert [s.to_dict() for s in serial] == [s.to_dict() for s in threaded]


def test_trace_frame_and_summary(bell_circuit):
    d = dilute(bell_circuit, EpsilonParams(0.01)).transformed
    trace = entanglement_trace(d, measures=("entropy", "schmidt_rank"), eps_context=0.01)
    df = trace_frame(trace)
    assert list(df.columns) == TRACE_COLUMNS
    assert len(df) == len(trace) * 2 * 2
    summary = trace_summary(trace)
    assert list(summary["measure"]) == ["entropy", "schmidt_rank"]
    entropy_row = summary[summary["measure"] == "entropy"].iloc[0]
    assert entropy_row["failed"] == 0
    assert entropy_row["min_slack"] >= -1e-9
    assert trace_summary([]).empty


def test_integrated_entanglement(bell_circuit):
    trace = entanglement_trace(bell_circuit, measures=("entropy",))
    assert integrated_entanglement(trace, 10) == pytest.approx(10.0)
    assert integrated_entanglement([], 10) == 0.0
    with pytest.raises(InputError):
        integrated_entanglement(trace, -1)
