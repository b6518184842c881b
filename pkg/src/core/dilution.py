import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from src.core.bounds import FANNES_REGIME, entropy_bound
from src.core.circuitir import Circuit, iter_steps, simulate_steps
from src.core.errors import ArityError, InputError
from src.core.resources import require_statevector
from src.core.statecore import GateInstance, StateVector, trace_distance_pure, zero_state

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class EpsilonParams:
    epsilon: float
    delta: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise InputError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")
        if self.delta is not None and self.delta <= 0:
            raise InputError(f"delta must be positive, got {self.delta!r}")

    @property
    def epsilon_bar(self) -> float:
        return math.sqrt(self.epsilon)

    @property
    def theta(self) -> float:
        return 2.0 * math.asin(math.sqrt(self.epsilon))

    @classmethod
    def for_entropy_target(cls, delta: float, n: int) -> "EpsilonParams":
        """Largest ε whose dilution radius √ε keeps every proper bipartition of n qubits at entropy ≤ delta."""
        if n < 2:
            raise InputError("an entropy target needs a register of at least 2 qubits")
        if delta <= 0:
            raise InputError(f"delta must be positive, got {delta!r}")
        size = n - 1
        if entropy_bound(FANNES_REGIME, size) <= delta:
            radius = FANNES_REGIME
        else:
            radius = brentq(lambda r: entropy_bound(r, size) - delta, 1e-300, FANNES_REGIME, xtol=1e-300, rtol=1e-14)
        logger.debug(f"entropy target {delta} on {n} qubits -> radius {radius:.6g}")
        return cls(min(1.0, radius * radius), delta)


@dataclass(frozen=True)
class DilutedCircuit:
    base: Circuit
    epsilon: EpsilonParams
    transformed: Circuit

    @property
    def ancilla(self) -> int:
        return self.base.n

    @property
    def theta(self) -> float:
        return self.epsilon.theta


def dilute(c: Circuit, eps: EpsilonParams) -> DilutedCircuit:
    m = c.n
    gates = [GateInstance("ry", (m,), (), (eps.theta,))]
    for position, gate in enumerate(c.gates):
        if len(gate.qubits) > 2:
            raise ArityError(f"gate {position} ({gate!r}) already touches {len(gate.qubits)} qubits; "
                             f"adding the ancilla control would exceed 3")
        gates.append(gate.with_control(m))
    name = f"{c.name}-diluted" if c.name else None
    return DilutedCircuit(c, eps, Circuit(m + 1, tuple(gates), name))


def step_states(d: DilutedCircuit) -> List[StateVector]:
    require_statevector(d.transformed.n)
    return simulate_steps(d.transformed)[1:]


def step_identity_deviation(d: DilutedCircuit) -> float:
    """Max componentwise gap between simulated steps and √(1−ε)|0..0,0> + √ε C_t|0..0>|1>."""
    a0 = math.sqrt(1.0 - d.epsilon.epsilon)
    a1 = math.sqrt(d.epsilon.epsilon)
    zero = zero_state(d.base.n).amplitudes
    worst = 0.0
    for state, base_state in zip(step_states(d), iter_steps(d.base)):
        expected = np.kron(zero, [a0, 0.0]) + np.kron(base_state.amplitudes, [0.0, a1])
        worst = max(worst, float(np.abs(state.amplitudes - expected).max()))
    return worst


@dataclass
class StepMembership:
    step: int
    distance: float
    passed: bool


@dataclass
class SEpsilonReport:
    radius: float
    steps: List[StepMembership] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.steps)

    @property
    def first_failure(self) -> Optional[int]:
        for s in self.steps:
            if not s.passed:
                return s.step
        return None

    @property
    def max_distance(self) -> float:
        return max((s.distance for s in self.steps), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radius": self.radius,
            "passed": self.passed,
            "max_distance": self.max_distance,
            "steps": [{"step": s.step, "distance": s.distance, "pass": s.passed} for s in self.steps],
        }


def verify_s_epsilon(c: Circuit, radius: float) -> SEpsilonReport:
    report = SEpsilonReport(radius)
    reference = zero_state(c.n)
    for t, state in enumerate(iter_steps(c)):
        distance = trace_distance_pure(state, reference)
        report.steps.append(StepMembership(t, distance, distance <= radius + MEMBERSHIP_TOL))
    if not report.passed:
        logger.info(f"register leaves S_{radius:g} at step {report.first_failure}")
    return report
