import io
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.cli.config import RunConfig, parse_bipartitions
from src.core.circuitir import load_circuit, serialize_circuit
from src.core.dilution import EpsilonParams, dilute
from src.core.experiments import (
    decision_experiment,
    entanglement_trace,
    integrated_entanglement,
    required_runs,
    trace_frame,
    trace_summary,
)
from src.core.resources import monitor
from src.core.verification import run_suites

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_CAP_EXCEEDED = 3

CommandResult = Tuple[int, Dict[str, Any]]


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, default=_json_default, ensure_ascii=False) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _frame_csv(df: pd.DataFrame) -> str:
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _workers(config: RunConfig) -> int:
    return config.threads if config.threads else monitor().default_workers()


def cmd_dilute(config: RunConfig) -> CommandResult:
    circuit = load_circuit(config.input)
    eps = EpsilonParams(config.epsilon)
    diluted = dilute(circuit, eps)
    emit(serialize_circuit(diluted.transformed), config.out)
    print(f"{len(diluted.transformed)} gates on {diluted.transformed.n} qubits, "
          f"theta = {diluted.theta!r}", file=sys.stderr)
    return EXIT_OK, {"gates": len(diluted.transformed), "qubits": diluted.transformed.n, "theta": diluted.theta}


def cmd_decide(config: RunConfig) -> CommandResult:
    circuit = load_circuit(config.input)
    eps = EpsilonParams(config.epsilon)
    runs = config.runs if config.runs is not None else required_runs(config.epsilon, config.fail_prob)
    report = decision_experiment(circuit, eps, runs, config.seed, literal=config.literal, workers=_workers(config))
    payload = {"schema": SCHEMA_VERSION, "command": "decide", "circuit": circuit.name,
               "fail_prob": config.fail_prob, **report.to_dict()}
    if config.format == "csv":
        emit(_frame_csv(pd.DataFrame([payload])), config.out)
    else:
        emit(to_json(payload), config.out)
    return EXIT_OK, payload


def cmd_trace(config: RunConfig) -> CommandResult:
    """
    Trace a circuit step by step. With --dilute the input is diluted first;
    either way a given --epsilon is read as the dilution parameter, so bounds
    use radius √ε, and without it each step's own distance.
    """
    circuit = load_circuit(config.input)
    eps_context = config.epsilon
    if config.dilute:
        circuit = dilute(circuit, EpsilonParams(config.epsilon)).transformed
    bipartitions = parse_bipartitions(config.bipartitions, circuit.n)
    trace = entanglement_trace(circuit, bipartitions, config.measures, eps_context=eps_context,
                               workers=_workers(config), seed=config.seed or 0)
    if config.format == "csv":
        emit(_frame_csv(trace_frame(trace)), config.out)
    summary = trace_summary(trace)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "trace",
        "circuit": circuit.name,
        "qubits": circuit.n,
        "eps_context": eps_context,
        "radius": math.sqrt(eps_context) if eps_context is not None else None,
        "steps": [step.to_dict() for step in trace],
        "summary": summary.to_dict(orient="records"),
        "integrated_entanglement": integrated_entanglement(trace, config.runs or 1),
    }
    if config.format == "json":
        emit(to_json(payload), config.out)
    return EXIT_OK, payload


def cmd_verify(config: RunConfig) -> CommandResult:
    report = run_suites(config.suites, seed=config.seed, workers=_workers(config),
                        inject_violation=config.inject_violation, samples=config.samples,
                        m=config.m, alpha=config.alpha)
    payload = {"schema": SCHEMA_VERSION, "command": "verify", **report.to_dict()}
    if config.format == "csv":
        rows = [{"suite": s.name, "total": s.total, "passed": s.passed, "failures": len(s.failures)}
                for s in report.suites]
        emit(_frame_csv(pd.DataFrame(rows, columns=["suite", "total", "passed", "failures"])), config.out)
    else:
        emit(to_json(payload), config.out)
    return (EXIT_OK if report.passed else EXIT_VERIFY_FAILED), payload


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "dilute": cmd_dilute,
    "decide": cmd_decide,
    "trace": cmd_trace,
    "verify": cmd_verify,
}
