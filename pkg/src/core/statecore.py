"""
Dense statevector and density-operator algebra for LittleEnt.

Amplitude index i is read as an n-bit string with qubit 0 as the most
significant bit. All logarithms are base 2 and 0·log 0 is taken as 0.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import DimensionError, InputError, NonUnitaryError
from src.core.resources import require_density, require_statevector

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
EIGEN_CLAMP = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.complex128)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"qubit count must be at least 1, got {self.n}")
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape[0] != 1 << self.n:
            raise DimensionError(f"expected {1 << self.n} amplitudes for {self.n} qubits, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, n: int, amplitudes: np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InputError("cannot normalize the zero vector")
        return cls(n, amps / norm)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.n)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        dim = 1 << self.n
        if mat.shape != (dim, dim):
            raise DimensionError(f"expected a {dim}x{dim} matrix, got {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=NORM_TOL, rtol=0):
            raise InputError("density operator is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > NORM_TOL:
            raise InputError(f"density operator trace is {np.trace(mat).real!r}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -NORM_TOL:
            raise InputError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityOperator":
        require_density(psi.n)
        return cls(psi.n, np.outer(psi.amplitudes, psi.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityOperator":
        require_density(n)
        return cls(n, np.eye(1 << n) / (1 << n))


@dataclass(frozen=True, eq=False)
class GateInstance:
    kind: str
    targets: Tuple[int, ...]
    controls: Tuple[int, ...] = ()
    params: Tuple[float, ...] = ()
    matrix: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in GATE_ARITY and self.kind != "unitary":
            raise InputError(f"unknown gate kind {self.kind!r}")
        touched = self.targets + self.controls
        if len(set(touched)) != len(touched):
            raise InputError(f"gate {self.kind} repeats a qubit in {touched}")
        if len(touched) > 3:
            raise InputError(f"gate {self.kind} touches {len(touched)} qubits; at most 3 allowed")
        if self.kind == "unitary":
            if self.matrix is None:
                raise InputError("unitary gate requires an explicit matrix")
            mat = _frozen(self.matrix)
            k = len(self.targets)
            if k not in (1, 2) or mat.shape != (1 << k, 1 << k):
                raise DimensionError(f"unitary on {k} targets must be {1 << k}x{1 << k}, got {mat.shape}")
            if not np.allclose(mat.conj().T @ mat, np.eye(1 << k), atol=UNITARY_TOL, rtol=0):
                raise NonUnitaryError("explicit gate matrix is not unitary")
            object.__setattr__(self, "matrix", mat)
        else:
            if len(self.targets) != GATE_ARITY[self.kind]:
                raise InputError(f"gate {self.kind} takes {GATE_ARITY[self.kind]} target(s), got {len(self.targets)}")
            expected_params = 1 if self.kind == "ry" else 0
            if len(self.params) != expected_params:
                raise InputError(f"gate {self.kind} takes {expected_params} parameter(s), got {len(self.params)}")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return self.controls + self.targets

    def unitary(self) -> np.ndarray:
        if self.kind == "unitary":
            return self.matrix
        return gate_matrix(self.kind, self.params)

    def with_control(self, qubit: int) -> "GateInstance":
        return GateInstance(self.kind, self.targets, self.controls + (qubit,), self.params, self.matrix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GateInstance):
            return NotImplemented
        if (self.kind, self.targets, self.controls, self.params) != (
                other.kind, other.targets, other.controls, other.params):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is None and other.matrix is None
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        return hash((self.kind, self.targets, self.controls, self.params))

    def __repr__(self) -> str:
        ctrl = f" ctrl={list(self.controls)}" if self.controls else ""
        par = f"({', '.join(repr(p) for p in self.params)})" if self.params else ""
        return f"<{self.kind.upper()}{par}@{list(self.targets)}{ctrl}>"


GATE_ARITY = {"x": 1, "y": 1, "z": 1, "h": 1, "s": 1, "t": 1, "ry": 1, "cnot": 2}

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_FIXED_GATES = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "h": np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=np.complex128),
    "s": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128),
}


def gate_matrix(kind: str, params: Sequence[float] = ()) -> np.ndarray:
    kind = kind.lower()
    if kind == "ry":
        (theta,) = params
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        # RY(θ)|0> = cos(θ/2)|0> + sin(θ/2)|1>
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind not in _FIXED_GATES:
        raise InputError(f"no built-in matrix for gate kind {kind!r}")
    return _FIXED_GATES[kind]


def make_basis_state(n: int, bits: str) -> StateVector:
    if len(bits) != n:
        raise InputError(f"bit string {bits!r} has length {len(bits)}, expected {n}")
    if any(b not in "01" for b in bits):
        raise InputError(f"bit string {bits!r} contains characters other than 0/1")
    require_statevector(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[int(bits, 2) if bits else 0] = 1.0
    return StateVector(n, amps)


def zero_state(n: int) -> StateVector:
    return make_basis_state(n, "0" * n)


def apply_gate(state: StateVector, gate: GateInstance) -> StateVector:
    n = state.n
    for q in gate.qubits:
        if not 0 <= q < n:
            raise InputError(f"gate {gate!r} addresses qubit {q} outside 0..{n - 1}")
    u = gate.unitary()
    psi = np.array(state.tensor())

    # restrict to the all-ones control subspace, then act on the target axes
    index = [slice(None)] * n
    for c in gate.controls:
        index[c] = 1
    index = tuple(index)
    remaining = [q for q in range(n) if q not in gate.controls]
    axes = [remaining.index(t) for t in gate.targets]
    k = len(axes)

    block = np.moveaxis(psi[index], axes, list(range(k)))
    shape = block.shape
    updated = (u @ block.reshape(1 << k, -1)).reshape(shape)
    psi[index] = np.moveaxis(updated, list(range(k)), axes)

    amps = psi.reshape(-1)
    drift = abs(np.vdot(amps, amps).real - 1.0)
    if drift > 1e-12:
        logger.debug(f"norm drift {drift:.3e} after {gate!r}")
    return StateVector(n, amps)


def overlap(psi: StateVector, phi: StateVector) -> complex:
    if psi.n != phi.n:
        raise DimensionError(f"cannot compare {psi.n}-qubit and {phi.n}-qubit states")
    return complex(np.vdot(psi.amplitudes, phi.amplitudes))


def trace_distance_pure(psi: StateVector, phi: StateVector) -> float:
    fidelity = abs(overlap(psi, phi)) ** 2
    return float(np.sqrt(max(0.0, 1.0 - fidelity)))


def _as_matrix(rho: Union[DensityOperator, np.ndarray]) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)


def trace_distance_mixed(rho: Union[DensityOperator, np.ndarray],
                         sigma: Union[DensityOperator, np.ndarray]) -> float:
    for op in (rho, sigma):
        if isinstance(op, DensityOperator):
            require_density(op.n)
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare operators of shape {a.shape} and {b.shape}")
    eigvals = np.linalg.eigvalsh(a - b)
    return float(min(1.0, 0.5 * np.abs(eigvals).sum()))


def trace_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(np.asarray(a), compute_uv=False).sum())


def operator_norm(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False).max())


@dataclass(frozen=True)
class Bipartition:
    n: int
    A: Tuple[int, ...]

    def __post_init__(self):
        subset = tuple(sorted(set(int(q) for q in self.A)))
        if len(subset) != len(tuple(self.A)):
            raise InputError(f"bipartition side {self.A} repeats a qubit")
        if not subset:
            raise InputError("bipartition side A must be nonempty")
        if any(q < 0 or q >= self.n for q in subset):
            raise InputError(f"bipartition side {subset} has indices outside 0..{self.n - 1}")
        if len(subset) == self.n:
            raise InputError("bipartition side A must be a proper subset")
        object.__setattr__(self, "A", subset)

    @property
    def B(self) -> Tuple[int, ...]:
        return tuple(q for q in range(self.n) if q not in self.A)

    @property
    def label(self) -> str:
        return ",".join(str(q) for q in self.A) + "|" + ",".join(str(q) for q in self.B)

    @classmethod
    def contiguous(cls, n: int):
        return [cls(n, tuple(range(k))) for k in range(1, n)]


def _amplitude_matrix(psi: StateVector, subset: Iterable[int]) -> np.ndarray:
    subset = list(subset)
    rest = [q for q in range(psi.n) if q not in subset]
    tensor = np.transpose(psi.tensor(), subset + rest)
    return tensor.reshape(1 << len(subset), 1 << len(rest))


def reduced_density(psi: StateVector, A: Bipartition) -> DensityOperator:
    require_density(len(A.A))
    m = _amplitude_matrix(psi, A.A)
    rho = m @ m.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(len(A.A), rho)


def subset_spectrum(psi: StateVector, subset: Sequence[int]) -> np.ndarray:
    """Schmidt spectrum of psi across (subset, rest); empty or full subsets give [1]."""
    subset = sorted(set(subset))
    if not subset or len(subset) == psi.n:
        return np.array([1.0])
    singular = np.linalg.svd(_amplitude_matrix(psi, subset), compute_uv=False)
    spectrum = np.sort(singular ** 2)[::-1]
    spectrum[spectrum < EIGEN_CLAMP] = 0.0
    return spectrum


def schmidt_spectrum(psi: StateVector, A: Bipartition) -> np.ndarray:
    return subset_spectrum(psi, A.A)


def schmidt_coefficients(psi: StateVector, A: Bipartition) -> np.ndarray:
    return np.linalg.svd(_amplitude_matrix(psi, A.A), compute_uv=False)


def entropy_of_spectrum(spectrum: np.ndarray) -> float:
    p = np.asarray(spectrum, dtype=float)
    p = p[p > EIGEN_CLAMP]
    if p.size == 0:
        return 0.0
    return float(max(0.0, -(p * np.log2(p)).sum()))


def von_neumann_entropy(rho: Union[DensityOperator, np.ndarray]) -> float:
    return entropy_of_spectrum(np.linalg.eigvalsh(_as_matrix(rho)))


def relative_entropy(rho: Union[DensityOperator, np.ndarray],
                     sigma: Union[DensityOperator, np.ndarray]) -> float:
    """S(ρ‖σ) = Tr ρ log ρ − Tr ρ log σ, infinite when supp ρ ⊄ supp σ."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare operators of shape {a.shape} and {b.shape}")
    ev_b, vec_b = np.linalg.eigh(b)
    weights = np.einsum("ij,jk,ki->i", vec_b.conj().T, a, vec_b).real
    cross = 0.0
    for w, lam in zip(weights, ev_b):
        if w <= EIGEN_CLAMP:
            continue
        if lam <= EIGEN_CLAMP:
            return float("inf")
        cross += w * np.log2(lam)
    return float(-von_neumann_entropy(a) - cross)


def conjugate(psi: StateVector) -> StateVector:
    return StateVector(psi.n, psi.amplitudes.conj())


def tensor_product(psi: StateVector, phi: StateVector) -> StateVector:
    return StateVector(psi.n + phi.n, np.kron(psi.amplitudes, phi.amplitudes))


def outcome_probability(psi: StateVector, qubit: int = 0) -> float:
    """Probability of reading 1 on `qubit` in a standard-basis measurement."""
    if not 0 <= qubit < psi.n:
        raise InputError(f"qubit {qubit} outside 0..{psi.n - 1}")
    probs = np.abs(psi.tensor()) ** 2
    return float(np.take(probs, 1, axis=qubit).sum())


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    require_statevector(n)
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector.from_unnormalized(n, z)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real
