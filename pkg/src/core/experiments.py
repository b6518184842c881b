"""
End-to-end experiments: the promise-decision run on a diluted circuit,
the small-distance/large-Renyi counterexample state, the S_ε sampler,
pseudo-pure states and per-step entanglement traces.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.bounds import (
    BoundCheck,
    concurrence_bound,
    entropy_bound,
    geometric_bound,
    n_tangle_bound,
    squashed_bound,
    witness_norm_check,
)
from src.core.circuitir import Circuit, simulate, simulate_steps
from src.core.dilution import EpsilonParams, dilute
from src.core.errors import InputError, LittleEntError, OutOfRegimeError
from src.core.measures import (
    EXACT,
    GEOMETRIC_RESTARTS,
    LOCALIZABLE_CAP,
    MeasureValue,
    Partition,
    Witness,
    concurrence,
    entanglement_entropy,
    epsilon_measure_ub,
    geometric_measure,
    ghz_witness,
    localizable_entanglement,
    n_tangle,
    relative_entropy_ub,
    renyi_entanglement,
    renyi_entropy,
    schmidt_rank,
    squashed_entanglement_pure,
    witness_measure,
)
from src.core.resources import require_density, require_statevector
from src.core.statecore import (
    Bipartition,
    DensityOperator,
    StateVector,
    entropy_of_spectrum,
    outcome_probability,
    schmidt_spectrum,
    trace_distance_pure,
    zero_state,
)

logger = logging.getLogger(__name__)

DRAW_CHUNK = 4096
INCONCLUSIVE_MARGIN = 1.0 / 12.0
HIGH = "p ≥ 2/3"
LOW = "p ≤ 1/3"
INCONCLUSIVE = "inconclusive"


# -- promise decision -------------------------------------------------------------

def required_runs(eps: float, fail_prob: float) -> int:
    """Smallest N with 2·exp(−2N(ε/6)²) ≤ fail_prob."""
    if not 0.0 < eps <= 1.0:
        raise InputError(f"eps must lie in (0, 1], got {eps!r}")
    if not 0.0 < fail_prob < 1.0:
        raise InputError(f"fail_prob must lie in (0, 1), got {fail_prob!r}")
    return int(math.ceil(math.log(2.0 / fail_prob) * 18.0 / (eps * eps)))


@dataclass
class DecisionReport:
    q_hat: float
    p_hat: float
    decision: str
    runs: int
    seed: int
    epsilon: float
    q_exact: Optional[float] = None
    literal: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q_hat": self.q_hat,
            "p_hat": self.p_hat,
            "decision": self.decision,
            "runs": self.runs,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "q_exact": self.q_exact,
            "literal": self.literal,
        }


def decide(p_hat: float) -> str:
    if abs(p_hat - 0.5) < INCONCLUSIVE_MARGIN:
        return INCONCLUSIVE
    return HIGH if p_hat > 0.5 else LOW


def _chunks(runs: int, chunk: int) -> List[int]:
    sizes = [chunk] * (runs // chunk)
    if runs % chunk:
        sizes.append(runs % chunk)
    return sizes


def _count_ones(draw: Callable[[np.random.Generator, int], int], runs: int, seed: int,
                workers: int, chunk: int = DRAW_CHUNK) -> int:
    """Sum draw(rng_i, size_i) over fixed-size chunks, chunk i using substream i of `seed`."""
    sizes = _chunks(runs, chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(index: int) -> int:
        return draw(np.random.default_rng(streams[index]), sizes[index])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return int(sum(pool.map(run, range(len(sizes)))))
    return int(sum(run(i) for i in range(len(sizes))))


def decision_experiment(c: Circuit, eps: EpsilonParams, runs: int, seed: int,
                        literal: bool = False, workers: int = 1) -> DecisionReport:
    """
    Estimate q = εp on the diluted circuit and decide the promise side of p.

    By default repetitions are Bernoulli draws from the exact final
    distribution. With literal=True every repetition re-simulates the circuit
    before its draw; both paths consume the same random streams, so they
    agree bit for bit.
    """
    if runs <= 0:
        raise InputError(f"number of runs must be positive, got {runs}")
    require_statevector(c.n + 1)
    diluted = dilute(c, eps)
    q = outcome_probability(simulate(diluted.transformed), 0)

    if literal:
        def draw(rng: np.random.Generator, size: int) -> int:
            ones = 0
            for u in rng.random(size):
                state = simulate(diluted.transformed)
                ones += int(u < outcome_probability(state, 0))
            return ones
    else:
        def draw(rng: np.random.Generator, size: int) -> int:
            return int(np.count_nonzero(rng.random(size) < q))

    ones = _count_ones(draw, runs, seed, workers)
    q_hat = ones / runs
    p_hat = q_hat / eps.epsilon
    report = DecisionReport(q_hat, p_hat, decide(p_hat), runs, seed, eps.epsilon, q_exact=q, literal=literal)
    logger.info(f"decision on {c.name or 'circuit'}: q_hat={q_hat:.6f} (exact {q:.6f}) -> {report.decision}")
    return report


@dataclass
class MetaTrialSummary:
    trials: int
    runs: int
    p_exact: float
    expected: Optional[str]
    counts: Dict[str, int] = field(default_factory=dict)

    @property
    def correct(self) -> int:
        return self.counts.get(self.expected, 0) if self.expected else 0

    def to_dict(self) -> Dict[str, Any]:
        return {"trials": self.trials, "runs": self.runs, "p_exact": self.p_exact,
                "expected": self.expected, "counts": dict(self.counts), "correct": self.correct}


def meta_trials(c: Circuit, eps: EpsilonParams, runs: int, trials: int, seed: int,
                workers: int = 1) -> MetaTrialSummary:
    if trials <= 0:
        raise InputError(f"number of trials must be positive, got {trials}")
    if runs <= 0:
        raise InputError(f"number of runs must be positive, got {runs}")
    require_statevector(c.n + 1)
    q = outcome_probability(simulate(dilute(c, eps).transformed), 0)
    p = q / eps.epsilon
    expected = HIGH if p >= 2.0 / 3.0 else LOW if p <= 1.0 / 3.0 else None
    if expected is None:
        logger.warning(f"p = {p:.4f} violates the promise; meta-trials have no correct side")

    def trial(child: np.random.SeedSequence) -> str:
        ones = _count_ones(lambda rng, size: int(np.count_nonzero(rng.random(size) < q)),
                           runs, int(child.generate_state(1)[0]), 1)
        return decide(ones / runs / eps.epsilon)

    children = np.random.SeedSequence(seed).spawn(trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            decisions = list(pool.map(trial, children))
    else:
        decisions = [trial(ch) for ch in children]

    summary = MetaTrialSummary(trials, runs, p, expected)
    for d in decisions:
        summary.counts[d] = summary.counts.get(d, 0) + 1
    logger.info(f"meta-trials: {summary.correct}/{trials} correct at p={p:.4f}")
    return summary


# -- counterexample -------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleSpec:
    m: int
    alpha: float

    def __post_init__(self):
        if self.m < 1:
            raise InputError(f"half-system size must be positive, got {self.m}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @property
    def beta(self) -> float:
        return (1.0 - self.alpha) / (2.0 * self.alpha)

    @property
    def eps(self) -> float:
        return 2.0 ** (-self.beta * self.m)


def counterexample_state(spec: CounterexampleSpec) -> StateVector:
    """√(1−ε)|0,0> + Σ_{x≠0} √(ε/(2^m−1)) |x,x> on 2m qubits."""
    m = spec.m
    require_statevector(2 * m)
    amps = np.zeros(1 << (2 * m), dtype=np.complex128)
    x = np.arange(1, 1 << m)
    amps[(x << m) + x] = math.sqrt(spec.eps / ((1 << m) - 1))
    amps[0] = math.sqrt(1.0 - spec.eps)
    return StateVector(2 * m, amps)


def counterexample_renyi_closed_form(spec: CounterexampleSpec, alpha: float) -> float:
    eps, tail = spec.eps, (1 << spec.m) - 1
    if alpha == 1:
        return -(1 - eps) * math.log2(1 - eps) - eps * math.log2(eps / tail)
    return math.log2((1 - eps) ** alpha + tail ** (1 - alpha) * eps ** alpha) / (1 - alpha)


@dataclass
class CounterexampleReport:
    m: int
    alpha: float
    eps: float
    renyi: float
    renyi_closed_form: float
    von_neumann: float
    distance: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "alpha": self.alpha,
            "eps": self.eps,
            f"S_{self.alpha:g}": self.renyi,
            f"S_{self.alpha:g}_closed_form": self.renyi_closed_form,
            "S_1": self.von_neumann,
            "trace_distance": self.distance,
            "expected_distance": math.sqrt(self.eps),
        }


def counterexample_report(spec: CounterexampleSpec) -> CounterexampleReport:
    psi = counterexample_state(spec)
    spectrum = schmidt_spectrum(psi, Bipartition(psi.n, tuple(range(spec.m))))
    return CounterexampleReport(
        m=spec.m,
        alpha=spec.alpha,
        eps=spec.eps,
        renyi=renyi_entropy(spectrum, spec.alpha),
        renyi_closed_form=counterexample_renyi_closed_form(spec, spec.alpha),
        von_neumann=entropy_of_spectrum(spectrum),
        distance=trace_distance_pure(psi, zero_state(psi.n)),
    )


# -- S_ε sampling and pseudo-pure states ------------------------------------------

def sample_s_epsilon(n: int, eps: float, seed) -> StateVector:
    """√(1−T'²)|0>ⁿ + T' e^{iφ}|χ> with χ ⊥ |0>ⁿ Haar-random and T' uniform on [0, eps]."""
    if not 0.0 <= eps <= 1.0:
        raise InputError(f"eps must lie in [0, 1], got {eps!r}")
    require_statevector(n)
    if eps == 0:
        return zero_state(n)
    rng = np.random.default_rng(seed)
    chi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    chi[0] = 0.0
    chi /= np.linalg.norm(chi)
    distance = rng.uniform(0.0, eps)
    phase = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    amps = distance * phase * chi
    amps[0] = math.sqrt(1.0 - distance * distance)
    return StateVector(n, amps)


def pseudo_pure(psi: StateVector, eps: float) -> DensityOperator:
    if not 0.0 <= eps <= 1.0:
        raise InputError(f"eps must lie in [0, 1], got {eps!r}")
    require_density(psi.n)
    dim = 1 << psi.n
    rho = eps * np.outer(psi.amplitudes, psi.amplitudes.conj()) + (1.0 - eps) * np.eye(dim) / dim
    return DensityOperator(psi.n, rho)


def pseudo_pure_convex_bound(eps: float, value: float) -> float:
    if not 0.0 <= eps <= 1.0:
        raise InputError(f"eps must lie in [0, 1], got {eps!r}")
    if value < 0:
        raise InputError(f"measure values are nonnegative, got {value!r}")
    return eps * value


# -- entanglement traces -------------------------------------------------------------

BIPARTITE_MEASURES = ("entropy", "renyi2", "schmidt_rank", "epsilon_rank")
GLOBAL_MEASURES = ("geometric", "concurrence", "n_tangle", "squashed", "relative_entropy", "witness")
PAIR_MEASURES = ("localizable",)
TRACE_MEASURES = BIPARTITE_MEASURES + GLOBAL_MEASURES + PAIR_MEASURES
WHOLE_REGISTER = "*"


@dataclass
class TraceRecord:
    measure: str
    bipartition: str
    value: Optional[MeasureValue] = None
    check: Optional[BoundCheck] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "measure": self.measure,
            "bipartition": self.bipartition,
            "value": self.value.to_dict() if self.value else None,
            "check": self.check.to_dict() if self.check else None,
            "error": self.error,
        }


@dataclass
class StepTrace:
    step: int
    distance: float
    records: List[TraceRecord] = field(default_factory=list)

    @property
    def measures(self) -> Dict[str, MeasureValue]:
        return {f"{r.measure}@{r.bipartition}": r.value for r in self.records if r.value is not None}

    @property
    def checks(self) -> Dict[str, BoundCheck]:
        return {f"{r.measure}@{r.bipartition}": r.check for r in self.records if r.check is not None}

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {"step": self.step, "distance": self.distance, "records": [r.to_dict() for r in self.records]}


class _TraceContext:
    def __init__(self, n: int, eps_context: Optional[float], geometric_restarts: int, seed: int):
        self.n = n
        self.radius = None if eps_context is None else math.sqrt(eps_context)
        self.geometric_restarts = geometric_restarts
        self.seed = seed
        self._witness: Optional[Witness] = None

    def radius_for(self, distance: float) -> float:
        if self.radius is None:
            return distance
        if distance > self.radius + 1e-12:
            raise OutOfRegimeError(f"state at distance {distance:.6g} lies outside the declared ball {self.radius:.6g}")
        return self.radius

    @property
    def witness(self) -> Witness:
        if self._witness is None:
            self._witness = ghz_witness(self.n)
        return self._witness


CheckThunk = Optional[Callable[[], BoundCheck]]


def _bipartite_entry(name: str, psi: StateVector, A: Bipartition, r: float) -> Tuple[MeasureValue, CheckThunk]:
    if name == "entropy":
        value = entanglement_entropy(psi, A)
        return value, lambda: BoundCheck(value.value, entropy_bound(r, len(A.A)), {"bound": "entropy", "radius": r})
    if name == "renyi2":
        value = renyi_entanglement(psi, A, 2.0)
        return value, lambda: BoundCheck(value.value, entropy_bound(r, len(A.A)), {"bound": "entropy", "radius": r})
    if name == "schmidt_rank":
        return schmidt_rank(psi, A), None
    value = epsilon_measure_ub(psi, r, "schmidt_rank", A)
    return value, lambda: BoundCheck(value.value, 0.0, {"bound": "epsilon_ball_contains_zero", "radius": r})


def _global_entry(name: str, psi: StateVector, r: float, ctx: _TraceContext) -> Tuple[MeasureValue, CheckThunk]:
    if name == "geometric":
        value = geometric_measure(psi, restarts=ctx.geometric_restarts, seed=ctx.seed)
        return value, lambda: BoundCheck(value.value, geometric_bound(r), {"bound": "geometric", "radius": r})
    if name == "concurrence":
        value = concurrence(psi)
        return value, lambda: BoundCheck(value.value, concurrence_bound(r), {"bound": "concurrence", "radius": r})
    if name == "n_tangle":
        value = n_tangle(psi)
        return value, lambda: BoundCheck(value.value, n_tangle_bound(r), {"bound": "n_tangle", "radius": r})
    if name == "squashed":
        value = squashed_entanglement_pure(psi, Partition.singletons(psi.n))
        return value, lambda: BoundCheck(value.value, squashed_bound(r, [1] * psi.n), {"bound": "squashed", "radius": r})
    if name == "relative_entropy":
        if r <= 0:
            value = MeasureValue("relative_entropy", 0.0, EXACT)
            return value, lambda: BoundCheck(0.0, 0.0, {"bound": "relative_entropy", "radius": r})
        report = relative_entropy_ub(psi, r)
        value = report.exact or report.bound
        return value, lambda: BoundCheck(value.value, report.bound.value, {"bound": "relative_entropy", "radius": r})
    value = witness_measure(psi, [ctx.witness])
    return value, lambda: witness_norm_check(ctx.witness, psi, r)


def _pair_entry(psi: StateVector, i: int, j: int, r: float) -> Tuple[MeasureValue, CheckThunk]:
    bounds = localizable_entanglement(psi, i, j, search=psi.n <= LOCALIZABLE_CAP)
    value = bounds.upper
    if bounds.lower is not None:
        value.certificate = {"lower": bounds.lower.value, "angles": bounds.lower.certificate["angles"]}
    return value, lambda: BoundCheck(value.value, entropy_bound(r, 1), {"bound": "entropy", "radius": r})


def _record(measure: str, label: str, compute: Callable[[], Tuple[MeasureValue, CheckThunk]]) -> TraceRecord:
    try:
        value, check = compute()
    except LittleEntError as e:
        logger.warning(f"{measure}@{label}: {e}")
        return TraceRecord(measure, label, error=f"{type(e).__name__}: {e}")
    if check is None:
        return TraceRecord(measure, label, value)
    try:
        return TraceRecord(measure, label, value, check())
    except LittleEntError as e:
        # the value stands; only its bound is unavailable at this radius
        logger.info(f"{measure}@{label}: no bound ({e})")
        return TraceRecord(measure, label, value, error=f"{type(e).__name__}: {e}")


def _trace_step(t: int, psi: StateVector, bipartitions: Sequence[Bipartition], measures: Sequence[str],
                ctx: _TraceContext) -> StepTrace:
    distance = trace_distance_pure(psi, zero_state(psi.n))
    step = StepTrace(t, distance)
    try:
        r = ctx.radius_for(distance)
    except LittleEntError as e:
        step.records.append(TraceRecord("membership", WHOLE_REGISTER, error=str(e)))
        r = distance
    for name in measures:
        if name in BIPARTITE_MEASURES:
            for A in bipartitions:
                step.records.append(_record(name, A.label, lambda A=A: _bipartite_entry(name, psi, A, r)))
        elif name in GLOBAL_MEASURES:
            step.records.append(_record(name, WHOLE_REGISTER, lambda: _global_entry(name, psi, r, ctx)))
        else:
            for q in range(psi.n - 1):
                step.records.append(_record(name, f"{q},{q + 1}", lambda q=q: _pair_entry(psi, q, q + 1, r)))
    return step


def entanglement_trace(c: Circuit, bipartitions: Optional[Sequence[Bipartition]] = None,
                       measures: Sequence[str] = ("entropy",), eps_context: Optional[float] = None,
                       workers: int = 1, geometric_restarts: int = GEOMETRIC_RESTARTS,
                       seed: int = 0) -> List[StepTrace]:
    """
    Evaluate measures and their bounds at every step of `c`, starting from |0>ⁿ.

    With eps_context = ε (the circuit is a dilution at ε) bounds are taken at
    radius √ε; otherwise at each step's own distance to |0>ⁿ.
    """
    unknown = [m for m in measures if m not in TRACE_MEASURES]
    if unknown:
        raise InputError(f"unknown trace measure(s) {unknown}; choose from {list(TRACE_MEASURES)}")
    require_statevector(c.n)
    bipartitions = Bipartition.contiguous(c.n) if bipartitions is None else list(bipartitions)
    for A in bipartitions:
        if A.n != c.n:
            raise InputError(f"bipartition {A.label} is for {A.n} qubits, circuit has {c.n}")
    ctx = _TraceContext(c.n, eps_context, geometric_restarts, seed)
    states = simulate_steps(c)

    def run(t: int) -> StepTrace:
        return _trace_step(t, states[t], bipartitions, measures, ctx)

    if "witness" in measures:
        try:
            ctx.witness
        except LittleEntError as e:
            logger.warning(f"witness unavailable: {e}")

    if workers > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trace = list(pool.map(run, range(len(states))))
    else:
        trace = [run(t) for t in range(len(states))]
    failures = sum(1 for s in trace for chk in s.checks.values() if not chk.passed)
    logger.info(f"traced {len(trace)} steps of {c.name or 'circuit'} ({failures} failing checks)")
    return trace


TRACE_COLUMNS = ["step", "bipartition", "measure", "value", "kind", "bound", "pass", "error"]


def trace_frame(trace: Sequence[StepTrace]) -> pd.DataFrame:
    rows = []
    for step in trace:
        for r in step.records:
            rows.append({
                "step": step.step,
                "bipartition": r.bipartition,
                "measure": r.measure,
                "value": r.value.value if r.value else None,
                "kind": r.value.kind if r.value else None,
                "bound": r.check.rhs if r.check else None,
                "pass": r.check.passed if r.check else None,
                "error": r.error,
            })
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def trace_summary(trace: Sequence[StepTrace]) -> pd.DataFrame:
    df = trace_frame(trace)
    if df.empty:
        return pd.DataFrame(columns=["measure", "max_value", "min_slack", "checks", "failed", "errors"])
    value = pd.to_numeric(df["value"], errors="coerce")
    df = df.assign(
        value=value,
        slack=pd.to_numeric(df["bound"], errors="coerce") - value,
        failed=df["pass"].eq(False),
        has_error=df["error"].notna(),
    )
    summary = df.groupby("measure", sort=False).agg(
        max_value=("value", "max"),
        min_slack=("slack", "min"),
        checks=("pass", "count"),
        failed=("failed", "sum"),
        errors=("has_error", "sum"),
    )
    return summary.reset_index()


def integrated_entanglement(trace: Sequence[StepTrace], runs: int) -> float:
    """runs × the largest entanglement entropy seen on any step; an informational figure only."""
    if runs < 0:
        raise InputError(f"runs must be nonnegative, got {runs}")
    peak = max((r.value.value for s in trace for r in s.records
                if r.measure == "entropy" and r.value is not None), default=0.0)
    return runs * peak
