import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DimensionError, InputError, NonUnitaryError
from src.core.statecore import (
    Bipartition,
    DensityOperator,
    GateInstance,
    StateVector,
    apply_gate,
    conjugate,
    entropy_of_spectrum,
    make_basis_state,
    operator_norm,
    outcome_probability,
    random_density,
    random_state,
    reduced_density,
    relative_entropy,
    schmidt_spectrum,
    subset_spectrum,
    tensor_product,
    trace_distance_mixed,
    trace_distance_pure,
    trace_norm,
    von_neumann_entropy,
    zero_state,
)


def test_basis_state_uses_qubit_zero_as_msb():
    psi = make_basis_state(3, "100")
    assert psi.amplitudes[4] == 1.0
    assert outcome_probability(psi, 0) == pytest.approx(1.0)
    assert outcome_probability(psi, 2) == pytest.approx(0.0)


def test_state_rejects_bad_length_and_norm():
    with pytest.raises(DimensionError):
        StateVector(2, np.ones(3) / np.sqrt(3))
    with pytest.raises(InputError):
        StateVector(1, np.array([1.0, 1.0]))


def test_amplitudes_are_read_only():
    psi = zero_state(2)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0.0


def test_x_on_qubit_zero_flips_the_leading_bit():
    psi = apply_gate(zero_state(2), GateInstance("x", (0,)))
    assert np.allclose(psi.amplitudes, [0, 0, 1, 0])


def test_cnot_first_target_is_control(bell):
    state = apply_gate(zero_state(2), GateInstance("h", (0,)))
    state = apply_gate(state, GateInstance("cnot", (0, 1)))
    assert np.allclose(state.amplitudes, bell.amplitudes)


def test_controlled_gate_only_acts_on_ones_subspace():
    gate = GateInstance("x", (1,), controls=(0,))
    assert np.allclose(apply_gate(make_basis_state(2, "00"), gate).amplitudes, [1, 0, 0, 0])
    assert np.allclose(apply_gate(make_basis_state(2, "10"), gate).amplitudes, [0, 0, 0, 1])


def test_ry_rotation_amplitudes():
    theta = 0.8
    psi = apply_gate(zero_state(1), GateInstance("ry", (0,), params=(theta,)))
    assert np.allclose(psi.amplitudes, [np.cos(theta / 2), np.sin(theta / 2)])


def test_gate_validation():
    with pytest.raises(InputError):
        GateInstance("cnot", (0,))
    with pytest.raises(InputError):
        GateInstance("x", (0,), controls=(0,))
    with pytest.raises(InputError):
        GateInstance("cnot", (0, 1), controls=(2, 3))
    with pytest.raises(NonUnitaryError):
        GateInstance("unitary", (0,), matrix=np.array([[1, 1], [0, 1]]))


def test_with_control_appends_control():
    gate = GateInstance("h", (0,)).with_control(3)
    assert gate.controls == (3,)
    assert gate.qubits == (3, 0)


def test_trace_distance_pure_and_mixed_agree(rng):
    psi, phi = random_state(3, rng), random_state(3, rng)
    rho = DensityOperator.from_state(psi)
    sigma = DensityOperator.from_state(phi)
    assert trace_distance_pure(psi, phi) == pytest.approx(trace_distance_mixed(rho, sigma), abs=1e-10)


def test_trace_norm_of_hermitian_difference(rng):
    a, b = random_density(4, rng), random_density(4, rng)
    assert 0.5 * trace_norm(a - b) == pytest.approx(trace_distance_mixed(a, b), abs=1e-10)


def test_bipartition_validation_and_label():
    A = Bipartition(4, (1, 0))
    assert A.A == (0, 1)
    assert A.B == (2, 3)
    assert A.label == "0,1|2,3"
    with pytest.raises(InputError):
        Bipartition(3, ())
    with pytest.raises(InputError):
        Bipartition(2, (0, 1))
    assert [b.A for b in Bipartition.contiguous(3)] == [(0,), (0, 1)]


def test_bell_schmidt_spectrum(bell):
    assert np.allclose(schmidt_spectrum(bell, Bipartition(2, (0,))), [0.5, 0.5])


def test_subset_spectrum_of_empty_and_full_subsets(ghz3):
    assert list(subset_spectrum(ghz3, ())) == [1.0]
    assert list(subset_spectrum(ghz3, (0, 1, 2))) == [1.0]


def test_reduced_density_entropy_matches_spectrum(rng):
    psi = random_state(4, rng)
    A = Bipartition(4, (0, 2))
    assert von_neumann_entropy(reduced_density(psi, A)) == pytest.approx(
        entropy_of_spectrum(schmidt_spectrum(psi, A)), abs=1e-10)


@pytest.mark.parametrize("matrix, expected", [
    (np.eye(4), 1.0),
    (np.array([[0, -1j], [1j, 0]]), 1.0),
    (np.diag([3.0, -5.0]), 5.0),
    (np.zeros((0, 0)), 0.0),
])
def test_operator_norm_examples(matrix, expected):
    assert operator_norm(matrix) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_trace_pairing_is_bounded_by_operator_and_trace_norms(seed):
    gen = np.random.default_rng(seed)
    dim = int(gen.integers(2, 9))
    a = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    b = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    assert abs(np.trace(a @ b)) <= operator_norm(a) * trace_norm(b) + 1e-9


def test_reduced_density_examples(bell, ghz3, rng):
    first, second = random_state(1, rng), random_state(1, rng)
    rho = reduced_density(tensor_product(first, second), Bipartition(2, (0,))).matrix
    assert np.allclose(rho, np.outer(first.amplitudes, first.amplitudes.conj()), atol=1e-12)
    assert np.allclose(reduced_density(bell, Bipartition(2, (1,))).matrix, np.eye(2) / 2, atol=1e-12)
    assert np.allclose(reduced_density(ghz3, Bipartition(3, (0,))).matrix, np.diag([0.5, 0.5]), atol=1e-12)
    assert np.allclose(reduced_density(ghz3, Bipartition(3, (0, 2))).matrix,
                       np.diag([0.5, 0.0, 0.0, 0.5]), atol=1e-12)


@pytest.mark.parametrize("cut", [(0,), (1, 3), (0, 2, 4), (4,)])
def test_both_sides_of_a_cut_share_nonzero_eigenvalues(cut, rng):
    psi = random_state(5, rng)
    A = Bipartition(5, cut)
    B = Bipartition(5, A.B)
    left = np.sort(np.linalg.eigvalsh(reduced_density(psi, A).matrix))[::-1]
    right = np.sort(np.linalg.eigvalsh(reduced_density(psi, B).matrix))[::-1]
    size = max(left.size, right.size)
    left = np.pad(left, (0, size - left.size))
    right = np.pad(right, (0, size - right.size))
    assert np.allclose(left, right, atol=1e-10)


def test_entropy_is_symmetric_across_the_cut(rng):
    psi = random_state(5, rng)
    A = Bipartition(5, (0, 3))
    B = Bipartition(5, A.B)
    assert entropy_of_spectrum(schmidt_spectrum(psi, A)) == pytest.approx(
        entropy_of_spectrum(schmidt_spectrum(psi, B)), abs=1e-10)


def test_relative_entropy_support_mismatch_is_infinite():
    rho = np.diag([0.5, 0.5]).astype(complex)
    sigma = np.diag([1.0, 0.0]).astype(complex)
    assert relative_entropy(rho, sigma) == float("inf")
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)


def test_conjugate_and_tensor_product(rng):
    psi = random_state(2, rng)
    assert np.allclose(conjugate(psi).amplitudes, psi.amplitudes.conj())
    both = tensor_product(psi, zero_state(1))
    assert both.n == 3
    assert entropy_of_spectrum(schmidt_spectrum(both, Bipartition(3, (2,)))) == pytest.approx(0.0, abs=1e-10)


def test_density_operator_validation():
    with pytest.raises(InputError):
        DensityOperator(1, np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InputError):
        DensityOperator(1, np.eye(2))
    assert np.allclose(DensityOperator.maximally_mixed(2).matrix, np.eye(4) / 4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(min_value=1, max_value=4))
def test_gates_preserve_norm(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(n, rng)
    for kind in ("h", "t", "s", "y"):
        psi = apply_gate(psi, GateInstance(kind, (int(rng.integers(n)),)))
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-12)
