"""
Entanglement measures for pure register states.

Each function returns a MeasureValue whose `kind` says whether the value is
exact or a certified one-sided bound at the sizes LittleEnt handles.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import CapExceededError, DomainError, InputError, OutOfRegimeError
from src.core.resources import DENSITY_CAP, require_statevector
from src.core.statecore import (
    Bipartition,
    DensityOperator,
    StateVector,
    entropy_of_spectrum,
    relative_entropy,
    schmidt_coefficients,
    schmidt_spectrum,
    subset_spectrum,
    trace_distance_pure,
    zero_state,
)

logger = logging.getLogger(__name__)

EXACT = "exact"
UPPER_BOUND = "upper_bound"
LOWER_BOUND = "lower_bound"

SCHMIDT_TOL = 1e-10
GEOMETRIC_RESTARTS = 32
GEOMETRIC_MAX_ITERS = 1000
GEOMETRIC_CONV_TOL = 1e-12
CONCURRENCE_SUBSET_CAP = 12
CONCURRENCE_DOUBLED_CAP = 5
CONCURRENCE_MATRIX_CAP = 4
LOCALIZABLE_CAP = 6
LOCALIZABLE_GRID = 24
LOCALIZABLE_REFINE = 40
WITNESS_TOL = 1e-9


def _jsonable(value: Any) -> Any:
    if isinstance(value, StateVector):
        return [[float(a.real), float(a.imag)] for a in value.amplitudes]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return _jsonable(value.tolist())
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


@dataclass
class MeasureValue:
    name: str
    value: float
    kind: str = EXACT
    certificate: Optional[Dict[str, Any]] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (EXACT, UPPER_BOUND, LOWER_BOUND):
            raise InputError(f"unknown measure kind {self.kind!r}")
        if self.value < -1e-10:
            raise InputError(f"measure {self.name} came out negative ({self.value!r})")
        self.value = max(0.0, float(self.value))

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "value": self.value, "kind": self.kind}
        if self.certificate is not None:
            data["certificate"] = _jsonable(self.certificate)
        if self.flags:
            data["flags"] = list(self.flags)
        return data


@dataclass(frozen=True)
class Partition:
    n: int
    parts: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        parts = tuple(tuple(sorted(int(q) for q in p)) for p in self.parts)
        if any(not p for p in parts):
            raise InputError("partition parts must be nonempty")
        flat = [q for p in parts for q in p]
        if len(flat) != len(set(flat)):
            raise InputError(f"partition parts overlap: {parts}")
        if sorted(flat) != list(range(self.n)):
            raise InputError(f"partition {parts} does not cover qubits 0..{self.n - 1}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple((q,) for q in range(n)))


@dataclass(frozen=True, eq=False)
class Witness:
    matrix: np.ndarray
    name: str = "witness"
    spot_checks: int = 64

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        dim = mat.shape[0]
        if mat.ndim != 2 or mat.shape != (dim, dim) or dim & (dim - 1) or dim < 2:
            raise InputError(f"witness must be a 2^n x 2^n matrix, got shape {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=1e-10, rtol=0):
            raise InputError(f"witness {self.name} is not Hermitian")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "_norm", float(np.abs(np.linalg.eigvalsh(mat)).max()))
        worst = self.worst_product_expectation(np.random.default_rng(0), self.spot_checks)
        if worst < -WITNESS_TOL:
            raise InputError(f"{self.name} has expectation {worst:.3g} < 0 on a product state")

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0]).bit_length() - 1

    @property
    def norm(self) -> float:
        return self._norm

    def expectation(self, psi: StateVector) -> float:
        if psi.n != self.n:
            raise InputError(f"{self.n}-qubit witness applied to a {psi.n}-qubit state")
        return float(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes).real)

    def worst_product_expectation(self, rng: np.random.Generator, samples: int) -> float:
        worst = float(self.matrix[0, 0].real)
        for _ in range(samples):
            sites = [_random_site(rng) for _ in range(self.n)]
            alpha = _product_vector(sites)
            worst = min(worst, float(np.vdot(alpha, self.matrix @ alpha).real))
        return worst


def bell_witness() -> Witness:
    phi = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
    return Witness(0.5 * np.eye(4) - np.outer(phi, phi.conj()), name="bell_witness")


def ghz_witness(n: int) -> Witness:
    """½I − |GHZ><GHZ|; product states overlap GHZ_n by at most 1/2."""
    if n < 2:
        raise InputError("a GHZ witness needs at least 2 qubits")
    if n > DENSITY_CAP:
        raise CapExceededError(f"{n}-qubit witness exceeds the density cap of {DENSITY_CAP}")
    dim = 1 << n
    ghz = np.zeros(dim, dtype=np.complex128)
    ghz[0] = ghz[-1] = 1 / np.sqrt(2)
    return Witness(0.5 * np.eye(dim) - np.outer(ghz, ghz.conj()), name=f"ghz{n}_witness")


def ghz_state(n: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return StateVector(n, amps)


def bell_state() -> StateVector:
    return ghz_state(2)


# -- entropies -----------------------------------------------------------------

def entanglement_entropy(psi: StateVector, A: Bipartition) -> MeasureValue:
    return MeasureValue("entanglement_entropy", entropy_of_spectrum(schmidt_spectrum(psi, A)), EXACT)


def renyi_entropy(spectrum: Sequence[float], alpha: float) -> float:
    if alpha <= 0:
        raise InputError(f"Renyi order must be positive, got {alpha!r}")
    p = np.asarray(spectrum, dtype=float)
    p = p[p > 1e-12]
    if p.size == 0:
        return 0.0
    if alpha == 1:
        return entropy_of_spectrum(p)
    return float(max(0.0, np.log2(np.sum(p ** alpha)) / (1.0 - alpha)))


def renyi_entanglement(psi: StateVector, A: Bipartition, alpha: float) -> MeasureValue:
    return MeasureValue(f"renyi_{alpha:g}", renyi_entropy(schmidt_spectrum(psi, A), alpha), EXACT)


def schmidt_rank(psi: StateVector, A: Bipartition, tol: float = SCHMIDT_TOL) -> MeasureValue:
    """χ = log2(rank), with rank counting Schmidt values above tol × the largest one."""
    if not 0 < tol < 1:
        raise InputError(f"Schmidt tolerance must lie in (0, 1), got {tol!r}")
    coeffs = schmidt_coefficients(psi, A)
    rank = int(np.count_nonzero(coeffs > tol * coeffs.max()))
    return MeasureValue("schmidt_rank", float(np.log2(rank)), EXACT, certificate={"rank": rank})


# -- geometric measure -----------------------------------------------------------

def _random_site(rng: np.random.Generator) -> np.ndarray:
    # uniform on the Bloch sphere
    cos_theta = rng.uniform(-1.0, 1.0)
    theta = np.arccos(cos_theta)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=np.complex128)


def _product_vector(sites: Sequence[np.ndarray]) -> np.ndarray:
    vec = np.array([1.0 + 0j])
    for site in sites:
        vec = np.kron(vec, site)
    return vec


def _partial_overlap(tensor: np.ndarray, sites: Sequence[np.ndarray], keep: int) -> np.ndarray:
    t = tensor
    for j in range(len(sites) - 1, -1, -1):
        if j == keep:
            continue
        t = np.tensordot(t, sites[j].conj(), axes=([j], [0]))
    return t


@dataclass
class _RestartResult:
    index: int
    overlap: float
    sites: List[np.ndarray]
    converged: bool
    sweeps: int


def _optimize_product(tensor: np.ndarray, sites: List[np.ndarray], index: int,
                      max_iters: int, conv_tol: float) -> _RestartResult:
    n = len(sites)
    best = abs(np.vdot(_product_vector(sites), tensor.reshape(-1)))
    for sweep in range(1, max_iters + 1):
        current = best
        for i in range(n):
            v = _partial_overlap(tensor, sites, i)
            norm = np.linalg.norm(v)
            if norm > 0:
                sites[i] = v / norm
                current = norm
        gain = current - best
        best = max(best, current)
        if gain < conv_tol:
            return _RestartResult(index, float(best), sites, True, sweep)
    return _RestartResult(index, float(best), sites, False, max_iters)


def _dominant_sites(psi: StateVector) -> List[np.ndarray]:
    index = int(np.argmax(np.abs(psi.amplitudes)))
    bits = format(index, f"0{psi.n}b")
    return [np.array([1.0, 0.0], dtype=np.complex128) if b == "0" else
            np.array([0.0, 1.0], dtype=np.complex128) for b in bits]


def geometric_measure(psi: StateVector, restarts: int = GEOMETRIC_RESTARTS,
                      max_iters: int = GEOMETRIC_MAX_ITERS, conv_tol: float = GEOMETRIC_CONV_TOL,
                      seed: int = 0, workers: int = 1) -> MeasureValue:
    """
    Upper bound on E_g = −log sup|<α|ψ>| by alternating single-site maximization.

    Restart 0 starts from the largest-amplitude basis string; the others start
    from uniformly random Bloch vectors drawn from per-restart substreams, so
    the result does not depend on `workers`.
    """
    require_statevector(psi.n)
    if restarts < 1:
        raise InputError("geometric_measure needs at least one restart")
    tensor = psi.tensor()
    streams = np.random.SeedSequence(seed).spawn(restarts)

    def run(index: int) -> _RestartResult:
        if index == 0:
            sites = _dominant_sites(psi)
        else:
            rng = np.random.default_rng(streams[index])
            sites = [_random_site(rng) for _ in range(psi.n)]
        return _optimize_product(tensor, sites, index, max_iters, conv_tol)

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]

    best = max(results, key=lambda r: (r.overlap, -r.index))
    product = StateVector.from_unnormalized(psi.n, _product_vector(best.sites))
    achieved = min(1.0, abs(np.vdot(product.amplitudes, psi.amplitudes)))
    value = -np.log2(achieved) if achieved > 0 else float("inf")
    flags = () if best.converged else ("not_converged",)
    if not best.converged:
        logger.warning(f"geometric measure: best restart hit {max_iters} sweeps without converging")
    logger.debug(f"geometric measure: overlap {achieved:.12f} from restart {best.index} after {best.sweeps} sweeps")
    return MeasureValue("geometric", value, UPPER_BOUND,
                        certificate={"product_state": product, "sites": best.sites, "overlap": achieved},
                        flags=flags)


# -- concurrence and n-tangle -----------------------------------------------------

def _subset_purity_sum(psi: StateVector) -> float:
    n = psi.n
    total = 0.0
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            spectrum = subset_spectrum(psi, subset)
            total += float(np.sum(spectrum ** 2))
    return total


def _apply_symmetric_projectors(tensor: np.ndarray, n: int) -> np.ndarray:
    """Apply P = (I + SWAP)/2 on each axis pair (i, n+i) of a tensor with ≥ 2n leading qubit axes."""
    for i in range(n):
        tensor = 0.5 * (tensor + np.swapaxes(tensor, i, n + i))
    return tensor


def symmetric_projector_matrix(n: int) -> np.ndarray:
    dim = 1 << (2 * n)
    identity = np.eye(dim, dtype=np.complex128).reshape([2] * (2 * n) + [dim])
    return _apply_symmetric_projectors(identity, n).reshape(dim, dim)


def _local_symmetric_projector() -> np.ndarray:
    # projector onto span{|00>, |11>, (|01>+|10>)/√2}
    triplet = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 1, 1, 0] / np.sqrt(2)], dtype=np.complex128)
    return triplet.T @ triplet.conj()


def symmetric_expectation(psi: StateVector, method: str = "subset") -> float:
    """<ψ|⊗2 P_1⊗…⊗P_n |ψ>⊗2 computed one of three independent ways."""
    n = psi.n
    if method == "subset":
        if n > CONCURRENCE_SUBSET_CAP:
            raise CapExceededError(f"subset-purity concurrence is capped at {CONCURRENCE_SUBSET_CAP} qubits")
        return _subset_purity_sum(psi) / (1 << n)
    if method == "doubled":
        if n > CONCURRENCE_DOUBLED_CAP:
            raise CapExceededError(f"doubled-space concurrence is capped at {CONCURRENCE_DOUBLED_CAP} qubits")
        doubled = np.kron(psi.amplitudes, psi.amplitudes)
        projected = _apply_symmetric_projectors(doubled.reshape([2] * (2 * n)), n).reshape(-1)
        return float(np.vdot(doubled, projected).real)
    if method == "matrix":
        if n > CONCURRENCE_MATRIX_CAP:
            raise CapExceededError(f"explicit-matrix concurrence is capped at {CONCURRENCE_MATRIX_CAP} qubits")
        # pair-major ordering (q0, q0', q1, q1', ...) then permuted to copy-major
        local = _local_symmetric_projector()
        full = np.array([[1.0 + 0j]])
        for _ in range(n):
            full = np.kron(full, local)
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        perm = full.reshape([2] * (4 * n)).transpose(order + [2 * n + o for o in order])
        op = perm.reshape(1 << (2 * n), 1 << (2 * n))
        doubled = np.kron(psi.amplitudes, psi.amplitudes)
        return float(np.vdot(doubled, op @ doubled).real)
    raise InputError(f"unknown concurrence method {method!r}")


@lru_cache(maxsize=1)
def _subset_identity_validated() -> bool:
    rng = np.random.default_rng(12345)
    for n in (1, 2, 3):
        amps = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
        psi = StateVector.from_unnormalized(n, amps)
        gap = abs(symmetric_expectation(psi, "subset") - symmetric_expectation(psi, "doubled"))
        if gap > 1e-10:
            raise AssertionError(f"subset-purity identity disagrees with the doubled-space formula by {gap:.3e}")
    logger.debug("subset-purity identity validated against the doubled-space formula")
    return True


def concurrence(psi: StateVector, method: str = "subset") -> MeasureValue:
    if method == "subset":
        _subset_identity_validated()
    inner = symmetric_expectation(psi, method)
    return MeasureValue("concurrence", 2.0 * np.sqrt(max(0.0, 1.0 - inner)), EXACT,
                        certificate={"method": method, "symmetric_expectation": inner})


def y_conjugate_overlap(psi: StateVector) -> complex:
    """<ψ|Y⊗n|ψ*>; Y⊗n|b> = i^n (−1)^|b| |b̄>."""
    n = psi.n
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        parity ^= (idx >> k) & 1
    signs = np.where(parity == 1, -1.0, 1.0)
    image = np.empty(1 << n, dtype=np.complex128)
    image[(1 << n) - 1 - idx] = (1j ** n) * signs * psi.amplitudes.conj()
    return complex(np.vdot(psi.amplitudes, image))


def n_tangle(psi: StateVector) -> MeasureValue:
    if psi.n % 2:
        raise DomainError(f"the n-tangle is defined for an even number of qubits, got {psi.n}")
    return MeasureValue("n_tangle", abs(y_conjugate_overlap(psi)) ** 2, EXACT)


# -- squashed and localizable entanglement ---------------------------------------

def squashed_entanglement_pure(psi: StateVector, parts: Partition) -> MeasureValue:
    if parts.n != psi.n:
        raise InputError(f"partition covers {parts.n} qubits, state has {psi.n}")
    per_part = [entropy_of_spectrum(subset_spectrum(psi, p)) for p in parts.parts]
    return MeasureValue("squashed", float(sum(per_part)), EXACT,
                        certificate={"parts": [list(p) for p in parts.parts], "entropies": per_part})


@dataclass
class LocalizableBounds:
    lower: Optional[MeasureValue]
    upper: MeasureValue
    angles: Dict[int, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": self.lower.to_dict() if self.lower else None,
            "upper": self.upper.to_dict(),
            "angles": {str(k): list(v) for k, v in self.angles.items()},
        }


def _measurement_basis(theta: float, phi: float) -> np.ndarray:
    # rows are <b0|, <b1| for b0 = cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    b0 = np.array([c, np.exp(1j * phi) * s])
    b1 = np.array([-np.exp(-1j * phi) * s, c])
    return np.vstack([b0.conj(), b1.conj()])


def _protocol_value(tensor: np.ndarray, measured: Sequence[int], angles: Dict[int, Tuple[float, float]]) -> float:
    """Average pair entropy over all outcomes when every measured qubit uses its own fixed basis."""
    t = tensor
    for axis, q in enumerate(measured, start=2):
        t = np.moveaxis(np.tensordot(_measurement_basis(*angles[q]), t, axes=([1], [axis])), 0, axis)
    branches = t.reshape(2, 2, -1).transpose(2, 0, 1)
    probs = np.einsum("kij,kij->k", branches, branches.conj()).real
    keep = probs > 1e-14
    if not np.any(keep):
        return 0.0
    singular = np.linalg.svd(branches[keep] / np.sqrt(probs[keep])[:, None, None], compute_uv=False)
    spectra = singular ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(spectra > 1e-12, -spectra * np.log2(np.where(spectra > 1e-12, spectra, 1.0)), 0.0)
    return float(np.dot(probs[keep], terms.sum(axis=1)))


def localizable_entanglement(psi: StateVector, i: int, j: int, grid: int = LOCALIZABLE_GRID,
                             refine_iters: int = LOCALIZABLE_REFINE, search: bool = True) -> LocalizableBounds:
    """
    Sandwich LE_ij between a searched non-adaptive measurement protocol and
    min(E({i}, rest), E({j}, rest)). With search=False only the upper side is computed.
    """
    n = psi.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise InputError(f"need two distinct qubits in 0..{n - 1}, got ({i}, {j})")
    if n == 2:
        e = entanglement_entropy(psi, Bipartition(2, (i,))).value
        return LocalizableBounds(MeasureValue("localizable", e, LOWER_BOUND),
                                 MeasureValue("localizable", e, UPPER_BOUND))
    upper = min(entanglement_entropy(psi, Bipartition(n, (i,))).value,
                entanglement_entropy(psi, Bipartition(n, (j,))).value)
    upper_value = MeasureValue("localizable", upper, UPPER_BOUND)
    if not search:
        return LocalizableBounds(None, upper_value)
    if n > LOCALIZABLE_CAP:
        raise CapExceededError(f"localizable-entanglement search is capped at {LOCALIZABLE_CAP} qubits, got {n}")

    measured = [q for q in range(n) if q not in (i, j)]
    tensor = np.transpose(psi.tensor(), [i, j] + measured)
    angles = {q: (0.0, 0.0) for q in measured}
    thetas = np.linspace(0.0, np.pi, grid)
    phis = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    best = _protocol_value(tensor, measured, angles)

    # coordinate-wise grid scan, one measured qubit at a time
    for _ in range(2):
        for q in measured:
            for theta in thetas:
                for phi in phis:
                    trial = dict(angles)
                    trial[q] = (float(theta), float(phi))
                    value = _protocol_value(tensor, measured, trial)
                    if value > best + 1e-15:
                        best, angles = value, trial

    step = np.pi / max(1, grid - 1)
    for _ in range(refine_iters):
        for q in measured:
            for coord in (0, 1):
                for direction in (1.0, -1.0):
                    trial = dict(angles)
                    point = list(trial[q])
                    point[coord] += direction * step
                    trial[q] = (point[0], point[1])
                    value = _protocol_value(tensor, measured, trial)
                    if value > best + 1e-15:
                        best, angles = value, trial
        step /= 2.0

    lower = MeasureValue("localizable", best, LOWER_BOUND,
                         certificate={"angles": {str(q): list(a) for q, a in angles.items()}})
    return LocalizableBounds(lower, upper_value, angles)


# -- relative entropy, ε-measures and witnesses ---------------------------------

def separable_reference(n: int, eps: float) -> np.ndarray:
    """σ = (1−ε)|0><0|ⁿ + ε I/2ⁿ, diagonal and fully separable."""
    dim = 1 << n
    sigma = np.eye(dim, dtype=np.complex128) * (eps / dim)
    sigma[0, 0] += 1.0 - eps
    return sigma


@dataclass
class RelativeEntropyReport:
    bound: MeasureValue
    exact: Optional[MeasureValue] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"bound": self.bound.to_dict(), "exact": self.exact.to_dict() if self.exact else None}


def relative_entropy_ub(psi: StateVector, eps, exact: bool = True) -> RelativeEntropyReport:
    eps = float(getattr(eps, "epsilon", eps))
    n = psi.n
    distance = trace_distance_pure(psi, zero_state(n))
    if distance > eps + 1e-12:
        raise OutOfRegimeError(f"state is at trace distance {distance:.6g} from |0>^n, beyond eps={eps:g}")
    from src.core.bounds import relative_entropy_bound  # bounds imports this module

    T = 2.0 * eps
    lam = eps / (1 << n)
    bound = relative_entropy_bound(n, T, lam)
    report = RelativeEntropyReport(MeasureValue("relative_entropy", bound, UPPER_BOUND,
                                                certificate={"T": T, "lambda": lam}))
    if exact and n <= DENSITY_CAP:
        rho = DensityOperator.from_state(psi)
        value = relative_entropy(rho, separable_reference(n, eps))
        report.exact = MeasureValue("relative_entropy", value, UPPER_BOUND,
                                    certificate={"sigma": "(1-eps)|0><0| + eps*I/2^n"})
    return report


EPSILON_BASES = ("schmidt_rank", "entanglement_entropy")


def _base_value(base: str, psi: StateVector, A: Bipartition) -> float:
    if base == "schmidt_rank":
        return schmidt_rank(psi, A).value
    if base == "entanglement_entropy":
        return entanglement_entropy(psi, A).value
    raise InputError(f"epsilon-measure base must be one of {EPSILON_BASES}, got {base!r}")


def epsilon_measure_ub(psi: StateVector, eps_ball: float, base: str, A: Bipartition,
                       geometric: Optional[MeasureValue] = None, seed: int = 0) -> MeasureValue:
    if eps_ball < 0:
        raise InputError(f"ball radius must be nonnegative, got {eps_ball!r}")
    candidates = [("self", psi, 0.0)]
    zero = zero_state(psi.n)
    zero_distance = trace_distance_pure(psi, zero)
    if zero_distance <= eps_ball + 1e-12:
        candidates.append(("zero", zero, zero_distance))
    elif eps_ball > 0:
        if geometric is None:
            geometric = geometric_measure(psi, restarts=4, seed=seed)
        product = geometric.certificate["product_state"]
        product_distance = trace_distance_pure(psi, product)
        if product_distance <= eps_ball + 1e-12:
            candidates.append(("product", product, product_distance))
    scored = [(_base_value(base, state, A), label, d) for label, state, d in candidates]
    value, label, d = min(scored, key=lambda s: (s[0], s[2]))
    return MeasureValue(f"epsilon_{base}", value, UPPER_BOUND,
                        certificate={"candidate": label, "distance": d, "ball": eps_ball})


def witness_measure(psi: StateVector, family: Sequence[Witness]) -> MeasureValue:
    if not family:
        raise InputError("witness family must be nonempty")
    expectations = [w.expectation(psi) for w in family]
    best = int(np.argmax(expectations))
    return MeasureValue("witness", max(0.0, -expectations[best]), EXACT,
                        certificate={"witness": family[best].name, "expectation": expectations[best]})
