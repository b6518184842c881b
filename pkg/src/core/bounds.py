"""
Continuity inequalities and the checkers that test them on concrete states.

Every bound is only evaluated inside the regime it holds in; outside it an
OutOfRegimeError is raised instead of extrapolating the formula.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from src.core.errors import DomainError, InputError, OutOfRegimeError
from src.core.measures import (
    Witness,
    entanglement_entropy,
    symmetric_expectation,
    symmetric_projector_matrix,
    y_conjugate_overlap,
)
from src.core.resources import DOUBLED_CAP, require_density
from src.core.statecore import (
    Bipartition,
    DensityOperator,
    StateVector,
    conjugate,
    operator_norm,
    random_state,
    trace_distance_mixed,
    trace_distance_pure,
    von_neumann_entropy,
    zero_state,
)

logger = logging.getLogger(__name__)

FANNES_REGIME = 1.0 / (2.0 * math.e)
CHECK_SLACK = -1e-9
REGIME_TOL = 1e-12

SYMMETRIC_PROJECTOR_PRODUCT = "symmetric-projector-product"
Y_TENSOR_POWER = "Y-tensor-power"
_DESCRIPTORS = {SYMMETRIC_PROJECTOR_PRODUCT: (2, False), Y_TENSOR_POWER: (1, True)}


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    context: Dict[str, Any] = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= CHECK_SLACK

    def to_dict(self) -> Dict[str, Any]:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "pass": self.passed,
                "context": dict(self.context)}


def _xlog2x(x: float) -> float:
    return 0.0 if x <= 0 else x * math.log2(x)


def _check_regime(T: float, what: str) -> None:
    if T < 0:
        raise InputError(f"{what}: distance must be nonnegative, got {T!r}")
    if T > FANNES_REGIME + REGIME_TOL:
        raise OutOfRegimeError(f"{what}: {T:.6g} exceeds the 1/(2e) regime ({FANNES_REGIME:.6g})")


def fannes_bound(T: float, d_dim: int) -> float:
    """2T log d − 2T log 2T, for 0 ≤ T ≤ 1/(2e)."""
    _check_regime(T, "fannes_bound")
    if d_dim < 1:
        raise InputError(f"dimension must be positive, got {d_dim}")
    return 2.0 * T * math.log2(d_dim) - _xlog2x(2.0 * T)


def entropy_bound(eps: float, size_A: int) -> float:
    """2ε|A| − 2ε log 2ε; the eps → 0 limit is 0."""
    _check_regime(eps, "entropy_bound")
    if size_A < 1:
        raise InputError(f"subsystem size must be positive, got {size_A}")
    return 2.0 * eps * size_A - _xlog2x(2.0 * eps)


def fannes_check(rho: Union[DensityOperator, np.ndarray], sigma: Union[DensityOperator, np.ndarray]) -> BoundCheck:
    T = trace_distance_mixed(rho, sigma)
    d = rho.matrix.shape[0] if isinstance(rho, DensityOperator) else np.asarray(rho).shape[0]
    lhs = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma))
    return BoundCheck(lhs, fannes_bound(T, d), {"bound": "fannes", "T": T, "d": d})


def _distance_to_zero(psi: StateVector) -> float:
    return trace_distance_pure(psi, zero_state(psi.n))


def _require_in_ball(psi: StateVector, eps: float, what: str) -> float:
    distance = _distance_to_zero(psi)
    if distance > eps + REGIME_TOL:
        raise OutOfRegimeError(f"{what}: state sits at distance {distance:.6g} from |0>^n, outside eps={eps:g}")
    return distance


def entropy_check(psi: StateVector, A: Bipartition, eps: float) -> BoundCheck:
    distance = _require_in_ball(psi, eps, "entropy_check")
    lhs = entanglement_entropy(psi, A).value
    return BoundCheck(lhs, entropy_bound(eps, len(A.A)),
                      {"bound": "entropy", "bipartition": A.label, "eps": eps, "distance": distance})


def tensor_trace_distance(psi: StateVector, phi: StateVector, k: int) -> float:
    """T(|ψ>⊗k, |φ>⊗k) = √(1 − |<ψ|φ>|^{2k})."""
    if k < 1:
        raise InputError(f"tensor power must be at least 1, got {k}")
    fidelity = 1.0 - trace_distance_pure(psi, phi) ** 2
    return float(math.sqrt(max(0.0, 1.0 - fidelity ** k)))


def tensor_distance_check(psi: StateVector, phi: StateVector, k: int) -> BoundCheck:
    T = trace_distance_pure(psi, phi)
    return BoundCheck(tensor_trace_distance(psi, phi, k), 2.0 * k * T, {"bound": "tensor_power", "k": k, "T": T})


@dataclass(frozen=True, eq=False)
class PolynomialForm:
    """
    Degree-k form f(ψ) = <ψ|⊗k A |ψ>⊗k, or g(ψ) = <ψ|⊗k A |ψ*>⊗k when conjugated.

    `aop` is either an explicit matrix on nk qubits or one of the symbolic
    descriptors, which carry norm 1 and are evaluated without building A.
    """
    k: int
    aop: Union[str, np.ndarray]
    conjugated: bool = False
    declared_norm: Optional[float] = None

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"tensor copies must be at least 1, got {self.k}")
        if isinstance(self.aop, str):
            if self.aop not in _DESCRIPTORS:
                raise InputError(f"unknown operator descriptor {self.aop!r}")
            if _DESCRIPTORS[self.aop] != (self.k, self.conjugated):
                k, conj = _DESCRIPTORS[self.aop]
                raise InputError(f"{self.aop} is a {'g' if conj else 'f'}-form with k={k}")
            norm = 1.0
        else:
            mat = np.array(self.aop, dtype=np.complex128)
            dim = mat.shape[0]
            if mat.ndim != 2 or mat.shape != (dim, dim) or dim & (dim - 1):
                raise InputError(f"explicit operator must be square with power-of-two size, got {mat.shape}")
            total = dim.bit_length() - 1
            if total % self.k:
                raise InputError(f"operator on {total} qubits does not split into {self.k} copies")
            mat.setflags(write=False)
            object.__setattr__(self, "aop", mat)
            norm = operator_norm(mat)
            if self.declared_norm is not None and abs(norm - self.declared_norm) > 1e-9:
                raise InputError(f"declared norm {self.declared_norm!r} disagrees with computed {norm!r}")
        object.__setattr__(self, "_norm", norm)

    @classmethod
    def concurrence_form(cls) -> "PolynomialForm":
        return cls(2, SYMMETRIC_PROJECTOR_PRODUCT, False)

    @classmethod
    def n_tangle_form(cls) -> "PolynomialForm":
        return cls(1, Y_TENSOR_POWER, True)

    @property
    def norm(self) -> float:
        return self._norm

    @property
    def symbolic(self) -> bool:
        return isinstance(self.aop, str)

    @property
    def factor(self) -> int:
        return 8 if self.conjugated else 4

    def evaluate(self, psi: StateVector) -> complex:
        if self.symbolic:
            if self.aop == SYMMETRIC_PROJECTOR_PRODUCT:
                return complex(symmetric_expectation(psi, "subset" if psi.n > 3 else "doubled"))
            return y_conjugate_overlap(psi)
        total = self.aop.shape[0].bit_length() - 1
        if total != psi.n * self.k:
            raise InputError(f"operator acts on {total} qubits, expected {psi.n}·{self.k}")
        if total > DOUBLED_CAP:
            require_density(total, DOUBLED_CAP)
        bra = np.array([1.0 + 0j])
        for _ in range(self.k):
            bra = np.kron(bra, psi.amplitudes)
        ket = bra
        if self.conjugated:
            ket = np.array([1.0 + 0j])
            for _ in range(self.k):
                ket = np.kron(ket, conjugate(psi).amplitudes)
        return complex(np.vdot(bra, self.aop @ ket))

    def explicit(self, n: int) -> "PolynomialForm":
        if not self.symbolic:
            return self
        if self.aop == SYMMETRIC_PROJECTOR_PRODUCT:
            return PolynomialForm(2, symmetric_projector_matrix(n), False, declared_norm=1.0)
        y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
        mat = np.array([[1.0 + 0j]])
        for _ in range(n):
            mat = np.kron(mat, y)
        return PolynomialForm(1, mat, True, declared_norm=1.0)

    def self_test(self, n: int = 3, samples: int = 8, seed: int = 0) -> float:
        if not self.symbolic:
            return 0.0
        concrete = self.explicit(n)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            psi = random_state(n, rng)
            worst = max(worst, abs(self.evaluate(psi) - concrete.evaluate(psi)))
        if worst > 1e-10:
            raise AssertionError(f"{self.aop} self-test gap {worst:.3e} at n={n}")
        return worst


def poly_continuity_check(form: PolynomialForm, psi: StateVector, phi: StateVector) -> BoundCheck:
    if psi.n != phi.n:
        raise InputError(f"cannot compare {psi.n}-qubit and {phi.n}-qubit states")
    T = trace_distance_pure(psi, phi)
    lhs = abs(form.evaluate(psi) - form.evaluate(phi))
    rhs = form.factor * form.k * T * form.norm
    name = form.aop if form.symbolic else "explicit"
    return BoundCheck(lhs, rhs, {"bound": "polynomial", "form": "g" if form.conjugated else "f",
                                 "operator": name, "k": form.k, "T": T})


def witness_norm_check(W: Witness, psi: StateVector, eps: float) -> BoundCheck:
    distance = _require_in_ball(psi, eps, "witness_norm_check")
    anchor = float(W.matrix[0, 0].real)
    if anchor < -1e-9:
        raise DomainError(f"{W.name} is negative on |0>^n ({anchor:.3g})")
    lhs = -W.expectation(psi)
    return BoundCheck(lhs, 2.0 * eps * W.norm,
                      {"bound": "witness", "witness": W.name, "eps": eps, "distance": distance})


# -- closed-form bounds for sampled states at distance ≤ eps from |0>^n ---------

def geometric_bound(eps: float) -> float:
    if not 0 <= eps < 1:
        raise OutOfRegimeError(f"geometric_bound needs 0 <= eps < 1, got {eps!r}")
    return -math.log2(math.sqrt(1.0 - eps * eps))


def concurrence_bound(eps: float) -> float:
    if eps < 0:
        raise InputError(f"eps must be nonnegative, got {eps!r}")
    return 2.0 * math.sqrt(8.0 * eps)


def n_tangle_bound(eps: float) -> float:
    if eps < 0:
        raise InputError(f"eps must be nonnegative, got {eps!r}")
    return (8.0 * eps) ** 2


def squashed_bound(eps: float, part_sizes: Sequence[int]) -> float:
    return float(sum(entropy_bound(eps, size) for size in part_sizes))


def witness_bound(eps: float, norm: float) -> float:
    return 2.0 * eps * norm


def relative_entropy_bound(n: int, T: float, lam: float) -> float:
    """2nT − 2T log 2T − T log λ, valid while −2T log 2T ≤ 1/e and λ is the smallest eigenvalue of σ."""
    if not 0 < T <= 0.5:
        raise OutOfRegimeError(f"relative_entropy_bound needs 0 < T <= 1/2, got {T!r}")
    if -_xlog2x(2.0 * T) > 1.0 / math.e:
        raise OutOfRegimeError(f"-2T log 2T exceeds 1/e at T = {T:g}")
    if not 0 < lam <= 1:
        raise InputError(f"smallest eigenvalue must lie in (0, 1], got {lam!r}")
    return 2.0 * n * T - _xlog2x(2.0 * T) - T * math.log2(lam)
