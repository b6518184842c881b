import math

import numpy as np
import pytest

from src.core.errors import CapExceededError, DomainError, InputError, OutOfRegimeError
from src.core.experiments import sample_s_epsilon
from src.core.measures import (
    EXACT,
    LOWER_BOUND,
    UPPER_BOUND,
    MeasureValue,
    Partition,
    Witness,
    bell_witness,
    concurrence,
    entanglement_entropy,
    epsilon_measure_ub,
    geometric_measure,
    ghz_state,
    ghz_witness,
    localizable_entanglement,
    n_tangle,
    relative_entropy_ub,
    renyi_entanglement,
    renyi_entropy,
    schmidt_rank,
    squashed_entanglement_pure,
    symmetric_expectation,
    witness_measure,
)
from src.core.statecore import (
    Bipartition,
    StateVector,
    make_basis_state,
    random_state,
    tensor_product,
    trace_distance_pure,
    zero_state,
)


def test_measure_value_clamps_round_off_and_rejects_negatives():
    assert MeasureValue("x", -1e-12).value == 0.0
    with pytest.raises(InputError):
        MeasureValue("x", -1e-3)
    with pytest.raises(InputError):
        MeasureValue("x", 1.0, kind="guess")


def test_measure_value_serializes_certificates():
    value = MeasureValue("g", 0.5, UPPER_BOUND, certificate={"product_state": zero_state(1)})
    data = value.to_dict()
    assert data["kind"] == "upper_bound"
    assert data["certificate"]["product_state"] == [[1.0, 0.0], [0.0, 0.0]]


def test_entanglement_entropy_basics(bell, rng):
    assert entanglement_entropy(bell, Bipartition(2, (0,))).value == pytest.approx(1.0)
    assert entanglement_entropy(make_basis_state(3, "101"), Bipartition(3, (0,))).value == pytest.approx(0.0)
    assert entanglement_entropy(bell, Bipartition(2, (0,))).kind == EXACT


@pytest.mark.parametrize("trial", range(5))
def test_renyi_is_nonincreasing_in_alpha(trial):
    rng = np.random.default_rng(trial)
    spectrum = rng.dirichlet(np.ones(8))
    values = [renyi_entropy(spectrum, a) for a in (0.3, 0.5, 1, 1.5, 2, 3)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    assert abs(renyi_entropy(spectrum, 1 + 1e-4) - values[2]) <= 1e-3
    assert abs(renyi_entropy(spectrum, 1 - 1e-4) - values[2]) <= 1e-3


def test_renyi_rejects_nonpositive_order():
    with pytest.raises(InputError):
        renyi_entropy([1.0], 0.0)


def test_renyi_entanglement_below_entropy_for_alpha_above_one(rng):
    psi = random_state(5, rng)
    A = Bipartition(5, (0, 1))
    assert renyi_entanglement(psi, A, 2.0).value <= entanglement_entropy(psi, A).value + 1e-12


def test_schmidt_rank(bell):
    assert schmidt_rank(bell, Bipartition(2, (0,))).value == pytest.approx(1.0)
    product = schmidt_rank(zero_state(3), Bipartition(3, (0,)))
    assert product.value == 0.0
    assert product.certificate == {"rank": 1}


def test_geometric_measure_on_product_and_ghz(ghz3):
    plus = StateVector(2, np.full(4, 0.5))
    assert geometric_measure(plus, restarts=4).value == pytest.approx(0.0, abs=1e-9)
    value = geometric_measure(ghz3, restarts=8, seed=3)
    assert value.value == pytest.approx(0.5, abs=1e-6)
    assert value.kind == UPPER_BOUND


def test_geometric_certificate_matches_value(rng):
    psi = random_state(4, rng)
    value = geometric_measure(psi, restarts=6, seed=1)
    product = value.certificate["product_state"]
    overlap = abs(np.vdot(product.amplitudes, psi.amplitudes))
    assert -math.log2(overlap) == pytest.approx(value.value, abs=1e-9)
    rebuilt = value.certificate["sites"][0]
    for site in value.certificate["sites"][1:]:
        rebuilt = np.kron(rebuilt, site)
    assert abs(abs(np.vdot(rebuilt, product.amplitudes)) - 1.0) < 1e-9


def test_geometric_measure_is_worker_independent(rng):
    psi = random_state(4, rng)
    serial = geometric_measure(psi, restarts=6, seed=11, workers=1)
    threaded = geometric_measure(psi, restarts=6, seed=11, workers=3)
    assert serial.value == threaded.value


def test_geometric_respects_small_distance_bound():
    eps = 0.05
    for seed in range(5):
        psi = sample_s_epsilon(5, eps, seed)
        assert geometric_measure(psi, restarts=1).value <= -math.log2(math.sqrt(1 - eps * eps)) + 1e-12


def test_concurrence_values(bell):
    assert concurrence(bell).value == pytest.approx(1.0, abs=1e-12)
    assert concurrence(zero_state(4)).value == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_concurrence_methods_agree(n, rng):
    for _ in range(5):
        psi = random_state(n, rng)
        values = [symmetric_expectation(psi, m) for m in ("subset", "doubled", "matrix")]
        assert max(values) - min(values) < 1e-10


def test_concurrence_caps():
    with pytest.raises(CapExceededError):
        symmetric_expectation(zero_state(5), "matrix")
    with pytest.raises(InputError):
        symmetric_expectation(zero_state(2), "guess")


def test_n_tangle(bell):
    assert n_tangle(bell).value == pytest.approx(1.0)
    assert n_tangle(ghz_state(4)).value == pytest.approx(1.0)
    assert n_tangle(zero_state(4)).value == pytest.approx(0.0)
    with pytest.raises(DomainError):
        n_tangle(zero_state(3))


def test_squashed_entanglement(bell):
    assert squashed_entanglement_pure(bell, Partition.singletons(2)).value == pytest.approx(2.0)
    assert squashed_entanglement_pure(zero_state(3), Partition(3, ((0, 2), (1,)))).value == 0.0


def test_partition_validation():
    with pytest.raises(InputError):
        Partition(3, ((0, 1), (1, 2)))
    with pytest.raises(InputError):
        Partition(3, ((0,), (1,)))


def test_localizable_ghz3_protocol(ghz3):
    bounds = localizable_entanglement(ghz3, 0, 1)
    assert bounds.lower.value >= 0.99
    assert bounds.upper.value == pytest.approx(1.0, abs=1e-9)
    assert bounds.lower.kind == LOWER_BOUND
    assert bounds.lower.value <= bounds.upper.value + 1e-9


def test_localizable_decoupled_bell(bell):
    psi = tensor_product(bell, zero_state(1))
    bounds = localizable_entanglement(psi, 0, 1, grid=6, refine_iters=4)
    assert bounds.lower.value == pytest.approx(1.0, abs=1e-9)
    assert bounds.upper.value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_localizable_search_stays_below_upper_bound(seed):
    psi = random_state(4, np.random.default_rng(seed))
    bounds = localizable_entanglement(psi, 0, 3, grid=5, refine_iters=3)
    assert bounds.lower.value <= bounds.upper.value + 1e-9


def test_localizable_product_and_caps():
    bounds = localizable_entanglement(zero_state(3), 0, 2, grid=4, refine_iters=2)
    assert bounds.lower.value == pytest.approx(0.0, abs=1e-12)
    assert bounds.upper.value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(CapExceededError):
        localizable_entanglement(zero_state(7), 0, 1)
    assert localizable_entanglement(zero_state(7), 0, 1, search=False).lower is None
    with pytest.raises(InputError):
        localizable_entanglement(zero_state(3), 1, 1)


def test_relative_entropy_on_zero_state():
    eps = 0.01
    report = relative_entropy_ub(zero_state(4), eps)
    assert report.exact.value == pytest.approx(-math.log2((1 - eps) + eps / 16), abs=1e-12)
    assert report.exact.value <= report.bound.value


def test_relative_entropy_bound_value():
    report = relative_entropy_ub(zero_state(8), 0.005)
    assert report.bound.value == pytest.approx(0.42931568, abs=1e-8)


def test_relative_entropy_preconditions(bell):
    with pytest.raises(OutOfRegimeError):
        relative_entropy_ub(bell, 0.01)
    with pytest.raises(OutOfRegimeError):
        relative_entropy_ub(zero_state(2), 0.4)


def test_relative_entropy_exact_below_bound():
    for seed in range(10):
        psi = sample_s_epsilon(6, 0.01, seed)
        report = relative_entropy_ub(psi, 0.01)
        assert report.exact.value <= report.bound.value + 1e-9


def test_epsilon_measure_candidates(bell):
    A = Bipartition(2, (0,))
    psi = sample_s_epsilon(4, 0.05, 2)
    value = epsilon_measure_ub(psi, 0.05, "schmidt_rank", Bipartition(4, (0, 1)))
    assert value.value == 0.0
    assert value.certificate["candidate"] == "zero"
    assert epsilon_measure_ub(bell, 0.0, "schmidt_rank", A).value == pytest.approx(1.0)
    assert epsilon_measure_ub(bell, 0.1, "schmidt_rank", A).value == pytest.approx(1.0)
    with pytest.raises(InputError):
        epsilon_measure_ub(bell, 0.1, "concurrence", A)


def test_witness_measure(bell):
    W = bell_witness()
    assert W.norm == pytest.approx(0.5)
    assert witness_measure(zero_state(2), [W]).value == pytest.approx(0.0)
    assert witness_measure(bell, [W]).value == pytest.approx(0.5)
    with pytest.raises(InputError):
        witness_measure(bell, [])


def test_witness_measure_uses_largest_expectation(bell):
    trivial = Witness(0.5 * np.eye(4), name="half_identity")
    value = witness_measure(bell, [trivial, bell_witness()])
    assert value.value == pytest.approx(0.0, abs=1e-12)
    assert value.certificate["witness"] == "half_identity"
    assert value.certificate["expectation"] == pytest.approx(0.5)


def test_witness_validation():
    with pytest.raises(InputError):
        Witness(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InputError):
        Witness(-np.eye(2), name="negative")
    assert ghz_witness(3).expectation(ghz_state(3)) == pytest.approx(-0.5)


def test_all_measures_vanish_on_zero_state():
    psi = zero_state(4)
    A = Bipartition(4, (0, 1))
    assert entanglement_entropy(psi, A).value == pytest.approx(0.0, abs=1e-9)
    assert schmidt_rank(psi, A).value == pytest.approx(0.0, abs=1e-9)
    assert geometric_measure(psi, restarts=2).value == pytest.approx(0.0, abs=1e-9)
    assert concurrence(psi).value == pytest.approx(0.0, abs=1e-9)
    assert n_tangle(psi).value == pytest.approx(0.0, abs=1e-9)
    assert squashed_entanglement_pure(psi, Partition.singletons(4)).value == pytest.approx(0.0, abs=1e-9)
    assert witness_measure(psi, [ghz_witness(4)]).value == pytest.approx(0.0, abs=1e-9)
    assert trace_distance_pure(psi, zero_state(4)) == 0.0
