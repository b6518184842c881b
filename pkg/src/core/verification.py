"""
Randomized verification suites for the proved inequalities and exact identities.

Sample i of a suite always draws from substream i of the suite seed, so a
failing instance is reproduced from (seed, index) alone and results do not
depend on the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.core.bounds import (
    FANNES_REGIME,
    BoundCheck,
    PolynomialForm,
    concurrence_bound,
    entropy_bound,
    entropy_check,
    fannes_bound,
    fannes_check,
    geometric_bound,
    n_tangle_bound,
    poly_continuity_check,
    squashed_bound,
    tensor_distance_check,
    witness_norm_check,
)
from src.core.circuitir import random_circuit, simulate
from src.core.dilution import EpsilonParams, dilute, step_identity_deviation, step_states
from src.core.errors import InputError, LittleEntError
from src.core.experiments import (
    CounterexampleSpec,
    counterexample_report,
    sample_s_epsilon,
)
from src.core.measures import (
    Partition,
    bell_witness,
    concurrence,
    geometric_measure,
    ghz_witness,
    localizable_entanglement,
    n_tangle,
    relative_entropy_ub,
    renyi_entanglement,
    squashed_entanglement_pure,
    symmetric_expectation,
)
from src.core.statecore import (
    Bipartition,
    StateVector,
    outcome_probability,
    random_density,
    random_state,
    trace_distance_pure,
    zero_state,
)

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-10
RENYI_ORDERS = (1.0, 1.5, 2.0)


@dataclass
class SuiteResult:
    name: str
    seed: int
    total: int = 0
    passed: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def add(self, index: int, check: BoundCheck) -> None:
        self.total += 1
        if check.passed:
            self.passed += 1
        else:
            self.failures.append({"seed": self.seed, "index": index, "check": check.to_dict()})

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "seed": self.seed, "total": self.total, "passed": self.passed,
                "failures": list(self.failures)}
        if self.details:
            data["details"] = dict(self.details)
        return data


@dataclass
class VerificationReport:
    seed: int
    suites: List[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.suites)

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "passed": self.passed, "suites": [s.to_dict() for s in self.suites]}


SampleFn = Callable[[int, np.random.Generator], List[BoundCheck]]


def _run_samples(result: SuiteResult, samples: int, sample: SampleFn, workers: int = 1) -> SuiteResult:
    streams = np.random.SeedSequence(result.seed).spawn(samples)

    def run(index: int) -> List[BoundCheck]:
        rng = np.random.default_rng(streams[index])
        try:
            return sample(index, rng)
        except LittleEntError as e:
            logger.error(f"{result.name} sample {index} raised {type(e).__name__}: {e}")
            return [BoundCheck(1.0, 0.0, {"error": f"{type(e).__name__}: {e}"})]

    if workers > 1 and samples > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(samples)))
    else:
        outcomes = [run(i) for i in range(samples)]
    for index, checks in enumerate(outcomes):
        for check in checks:
            result.add(index, check)
    return result


def _nearby(psi: StateVector, rng: np.random.Generator, scale: float) -> StateVector:
    noise = rng.standard_normal(psi.dim) + 1j * rng.standard_normal(psi.dim)
    return StateVector.from_unnormalized(psi.n, psi.amplitudes + scale * noise / np.linalg.norm(noise))


def _pair(n: int, rng: np.random.Generator):
    psi = random_state(n, rng)
    if rng.random() < 0.5:
        return psi, random_state(n, rng)
    return psi, _nearby(psi, rng, rng.uniform(0.0, 0.3))


# -- suites ------------------------------------------------------------------------

def fannes_suite(seed: int, samples: int = 1000, max_dim: int = 32, workers: int = 1) -> SuiteResult:
    """|S(ρ) − S(σ)| ≤ 2T log d − 2T log 2T on random pairs with T ≤ 1/(2e)."""

    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        d = int(rng.integers(2, max_dim + 1))
        rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        tau = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        # T(ρ, σ) = s·T(ρ, τ) ≤ s for σ on the segment towards τ
        s = rng.uniform(0.0, FANNES_REGIME)
        sigma = (1.0 - s) * rho + s * tau
        return [fannes_check(rho, sigma)]

    return _run_samples(SuiteResult("fannes", seed), samples, sample, workers)


def entropy_bound_suite(seed: int, samples: int = 100, n: int = 10, eps: float = 0.01,
                        workers: int = 1) -> SuiteResult:
    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        psi = sample_s_epsilon(n, eps, rng)
        return [entropy_check(psi, A, eps) for A in Bipartition.contiguous(n)]

    return _run_samples(SuiteResult("entropy_bound", seed), samples, sample, workers)


def tensor_distance_suite(seed: int, samples: int = 500, n: int = 3, ks: Sequence[int] = (2, 5, 20),
                          workers: int = 1) -> SuiteResult:
    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        psi, phi = _pair(n, rng)
        return [tensor_distance_check(psi, phi, k) for k in ks]

    return _run_samples(SuiteResult("tensor_distance", seed), samples, sample, workers)


def polynomial_suite(seed: int, samples: int = 500, n_f: int = 3, n_g: int = 4, workers: int = 1) -> SuiteResult:
    """4kT‖A‖ for the concurrence f-form (k=2) and 8kT‖A‖ for the n-tangle g-form (k=1)."""
    f_form = PolynomialForm.concurrence_form()
    g_form = PolynomialForm.n_tangle_form()
    result = SuiteResult("polynomial", seed)
    for label, form, size in (("f", f_form, min(n_f, 3)), ("g", g_form, min(n_g, 4))):
        try:
            gap = form.self_test(n=size, seed=seed)
        except AssertionError as e:
            logger.error(f"polynomial self-test: {e}")
            gap = math.inf
        result.add(-1, BoundCheck(gap, IDENTITY_TOL, {"check": "self_test", "form": label}))

    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        f_pair = _pair(n_f, rng)
        g_pair = _pair(n_g, rng)
        return [poly_continuity_check(f_form, *f_pair), poly_continuity_check(g_form, *g_pair)]

    return _run_samples(result, samples, sample, workers)


def witness_suite(seed: int, samples: int = 200, max_eps: float = 0.2, workers: int = 1) -> SuiteResult:
    bell = bell_witness()
    ghz3 = ghz_witness(3)

    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        eps = rng.uniform(0.0, max_eps)
        return [witness_norm_check(bell, sample_s_epsilon(2, eps, rng), eps),
                witness_norm_check(ghz3, sample_s_epsilon(3, eps, rng), eps)]

    return _run_samples(SuiteResult("witness", seed), samples, sample, workers)


def small_distance_suite(seed: int, samples: int = 100, n: int = 10, eps: float = 0.01, relative_n: int = 6,
                       geometric_restarts: int = 4, workers: int = 1) -> SuiteResult:
    witness = ghz_witness(n)
    halves = Partition(n, (tuple(range(n // 2)), tuple(range(n // 2, n))))
    singles = Partition.singletons(n)

    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        psi = sample_s_epsilon(n, eps, rng)
        checks = []
        for A in Bipartition.contiguous(n):
            bound = entropy_bound(eps, len(A.A))
            for alpha in RENYI_ORDERS:
                value = renyi_entanglement(psi, A, alpha).value
                checks.append(BoundCheck(value, bound, {"measure": f"renyi_{alpha:g}", "bipartition": A.label}))
        g = geometric_measure(psi, restarts=geometric_restarts, seed=index)
        checks.append(BoundCheck(g.value, geometric_bound(eps), {"measure": "geometric"}))
        for parts in (singles, halves):
            value = squashed_entanglement_pure(psi, parts).value
            sizes = [len(p) for p in parts.parts]
            checks.append(BoundCheck(value, squashed_bound(eps, sizes), {"measure": "squashed", "parts": sizes}))
        checks.append(BoundCheck(concurrence(psi).value, concurrence_bound(eps), {"measure": "concurrence"}))
        if n % 2 == 0:
            checks.append(BoundCheck(n_tangle(psi).value, n_tangle_bound(eps), {"measure": "n_tangle"}))
        checks.append(witness_norm_check(witness, psi, eps))
        for q in range(n - 1):
            upper = localizable_entanglement(psi, q, q + 1, search=False).upper.value
            checks.append(BoundCheck(upper, entropy_bound(eps, 1), {"measure": "localizable", "pair": [q, q + 1]}))
        small = sample_s_epsilon(relative_n, eps, rng)
        report = relative_entropy_ub(small, eps)
        checks.append(BoundCheck(report.exact.value, report.bound.value, {"measure": "relative_entropy"}))
        return checks

    return _run_samples(SuiteResult("small_distance", seed), samples, sample, workers)


def counterexample_suite(seed: int, m: int = 10, alpha: float = 0.5) -> SuiteResult:
    report = counterexample_report(CounterexampleSpec(m, alpha))
    result = SuiteResult("counterexample", seed, details=report.to_dict())
    gap = abs(report.renyi - report.renyi_closed_form)
    result.add(0, BoundCheck(gap, 0.0, {"check": "renyi_closed_form"}))
    result.add(0, BoundCheck(report.von_neumann, report.renyi, {"check": "renyi_dominates_von_neumann"}))
    result.add(0, BoundCheck(abs(report.distance - math.sqrt(report.eps)), 0.0, {"check": "distance_is_sqrt_eps"}))
    return result


def dilution_suite(seed: int, samples: int = 20, n: int = 6, max_depth: int = 40,
                   epsilons: Sequence[float] = (0.5, 0.1, 0.01), workers: int = 1) -> SuiteResult:
    """q = εp on the ancilla-controlled circuit, and every step sits exactly at distance √ε."""

    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        c = random_circuit(n, int(rng.integers(1, max_depth + 1)), rng, name=f"random-{index}")
        p = outcome_probability(simulate(c), 0)
        checks = []
        for eps in epsilons:
            d = dilute(c, EpsilonParams(eps))
            q = outcome_probability(simulate(d.transformed), 0)
            checks.append(BoundCheck(abs(q - eps * p), IDENTITY_TOL, {"check": "q_equals_eps_p", "eps": eps}))
            zero = zero_state(d.transformed.n)
            worst = max(abs(trace_distance_pure(s, zero) - math.sqrt(eps)) for s in step_states(d))
            checks.append(BoundCheck(worst, IDENTITY_TOL, {"check": "step_distance", "eps": eps}))
            checks.append(BoundCheck(step_identity_deviation(d), IDENTITY_TOL, {"check": "step_identity", "eps": eps}))
        return checks

    return _run_samples(SuiteResult("dilution", seed), samples, sample, workers)


def concurrence_oracle_suite(seed: int, samples: int = 100, ns: Sequence[int] = (2, 3, 4),
                             workers: int = 1) -> SuiteResult:
    def sample(index: int, rng: np.random.Generator) -> List[BoundCheck]:
        checks = []
        for n in ns:
            psi = random_state(n, rng)
            values = [symmetric_expectation(psi, method) for method in ("subset", "doubled", "matrix")]
            checks.append(BoundCheck(max(values) - min(values), IDENTITY_TOL, {"check": "concurrence_oracle", "n": n}))
        return checks

    return _run_samples(SuiteResult("concurrence_oracle", seed), samples, sample, workers)


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "fannes": fannes_suite,
    "entropy_bound": entropy_bound_suite,
    "tensor_distance": tensor_distance_suite,
    "polynomial": polynomial_suite,
    "witness": witness_suite,
    "small_distance": small_distance_suite,
    "counterexample": counterexample_suite,
    "dilution": dilution_suite,
    "concurrence_oracle": concurrence_oracle_suite,
}


def injected_violation(d: int = 4) -> BoundCheck:
    """A Fannes check evaluated at T = 0 on states with different entropies; it must fail."""
    lhs = math.log2(d)
    return BoundCheck(lhs, fannes_bound(0.0, d), {"bound": "fannes", "injected": True, "d": d})


def run_suites(names: Optional[Sequence[str]] = None, seed: int = 1, workers: int = 1,
               inject_violation: bool = False, samples: Optional[int] = None,
               m: int = 10, alpha: float = 0.5) -> VerificationReport:
    names = list(SUITES) if not names else list(names)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise InputError(f"unknown suite(s) {unknown}; choose from {list(SUITES)}")
    report = VerificationReport(seed)
    for name in names:
        if name == "counterexample":
            result = counterexample_suite(seed, m=m, alpha=alpha)
        else:
            kwargs: Dict[str, Any] = {"workers": workers}
            if samples is not None:
                kwargs["samples"] = samples
            result = SUITES[name](seed, **kwargs)
        if inject_violation:
            result.add(-1, injected_violation())
        level = logging.INFO if result.ok else logging.ERROR
        logger.log(level, f"suite {name}: {result.passed}/{result.total} checks passed")
        report.suites.append(result)
    return report
