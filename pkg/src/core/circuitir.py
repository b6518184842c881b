"""
Circuit intermediate representation and its line-oriented text format.

    qubits 3            # header, required first
    h 0
    cnot 0 1
    ctrl 2 ry 0.5 1     # ctrl prefixes add controls to the gate on that line
    unitary 0           # explicit matrix block: 2^k rows of re/im pairs, then `end`
      0 0 1 0
      1 0 0 0
    end
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import CircuitParseError, InputError
from src.core.statecore import GATE_ARITY, GateInstance, StateVector, apply_gate, zero_state
from src.core.resources import require_statevector

logger = logging.getLogger(__name__)

MNEMONICS = ("x", "y", "z", "h", "s", "t", "cnot", "ry")
CANONICAL_GATE_SET = frozenset({"h", "t", "cnot"})
MAX_TOUCHED = 3
_INT_RE = re.compile(r"-?[0-9]+")
_DECIMAL_RE = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"line {self.line}, col {self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: Tuple[GateInstance, ...] = ()
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"circuit needs at least one qubit, got {self.n}")
        gates = tuple(self.gates)
        for position, gate in enumerate(gates):
            for q in gate.qubits:
                if not 0 <= q < self.n:
                    raise InputError(f"gate {position} ({gate!r}) addresses qubit {q} outside 0..{self.n - 1}")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)


@dataclass
class ParseResult:
    circuit: Optional[Circuit] = None
    diagnostics: List[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.circuit is not None


class _Token:
    __slots__ = ("text", "column")

    def __init__(self, text: str, column: int):
        self.text = text
        self.column = column


def _tokenize(line: str) -> List[_Token]:
    code = line.split("#", 1)[0]
    tokens = []
    column = 0
    for piece in code.split():
        column = code.index(piece, column)
        tokens.append(_Token(piece, column + 1))
        column += len(piece)
    return tokens


class CircuitParser:
    """Recursive-descent parser over lines; collects diagnostics instead of raising."""

    def __init__(self, text: str, name: Optional[str] = None):
        self.lines = [line[:-1] if line.endswith("\r") else line for line in text.split("\n")]
        self.name = name
        self.diagnostics: List[ParseDiagnostic] = []
        self.n = 0
        self.gates: List[GateInstance] = []
        self.pos = 0

    def parse(self) -> ParseResult:
        if not self._parse_header():
            return ParseResult(None, self.diagnostics)
        while self.pos < len(self.lines):
            lineno = self.pos + 1
            tokens = _tokenize(self.lines[self.pos])
            self.pos += 1
            if tokens:
                self._parse_statement(tokens, lineno)
        if self.diagnostics:
            return ParseResult(None, self.diagnostics)
        return ParseResult(Circuit(self.n, tuple(self.gates), self.name), [])

    def _error(self, line: int, column: int, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic(line, column, message))

    def _parse_header(self) -> bool:
        while self.pos < len(self.lines):
            lineno = self.pos + 1
            tokens = _tokenize(self.lines[self.pos])
            self.pos += 1
            if not tokens:
                continue
            if tokens[0].text.lower() != "qubits":
                self._error(lineno, tokens[0].column, "missing 'qubits' header")
                return False
            if len(tokens) != 2:
                self._error(lineno, tokens[0].column, "header must be 'qubits N'")
                return False
            count = self._parse_int(tokens[1], lineno)
            if count is None:
                return False
            if count < 1:
                self._error(lineno, tokens[1].column, f"qubit count must be at least 1, got {count}")
                return False
            self.n = count
            return True
        self._error(max(1, len(self.lines)), 1, "missing 'qubits' header")
        return False

    def _parse_int(self, token: _Token, lineno: int) -> Optional[int]:
        text = token.text
        if not _INT_RE.fullmatch(text):
            self._error(lineno, token.column, f"expected an integer, got '{text}'")
            return None
        return int(text)

    def _parse_qubit(self, token: _Token, lineno: int) -> Optional[int]:
        q = self._parse_int(token, lineno)
        if q is None:
            return None
        if not 0 <= q < self.n:
            self._error(lineno, token.column, f"qubit index {q} out of range for {self.n} qubits")
            return None
        return q

    def _parse_float(self, token: _Token, lineno: int) -> Optional[float]:
        if not _DECIMAL_RE.fullmatch(token.text):
            self._error(lineno, token.column, f"expected a decimal number, got '{token.text}'")
            return None
        value = float(token.text)
        if not math.isfinite(value):
            self._error(lineno, token.column, f"parameter must be finite, got '{token.text}'")
            return None
        return value

    def _parse_statement(self, tokens: List[_Token], lineno: int) -> None:
        i = 0
        controls: List[int] = []
        while i < len(tokens) and tokens[i].text.lower() == "ctrl":
            if i + 1 >= len(tokens):
                self._error(lineno, tokens[i].column, "'ctrl' needs a qubit index")
                return
            q = self._parse_qubit(tokens[i + 1], lineno)
            if q is None:
                return
            controls.append(q)
            i += 2
        if i >= len(tokens):
            self._error(lineno, tokens[-1].column, "expected a gate mnemonic after 'ctrl'")
            return

        head = tokens[i]
        mnemonic = head.text.lower()
        if mnemonic == "qubits":
            self._error(lineno, head.column, "duplicate 'qubits' header")
            return
        if mnemonic == "unitary":
            self._parse_unitary(tokens[i + 1:], controls, head, lineno)
            return
        if mnemonic not in MNEMONICS:
            self._error(lineno, head.column, f"unknown mnemonic '{head.text}'")
            return

        args = tokens[i + 1:]
        params: List[float] = []
        if mnemonic == "ry":
            if not args:
                self._error(lineno, head.column, "'ry' needs an angle and a qubit")
                return
            theta = self._parse_float(args[0], lineno)
            if theta is None:
                return
            params.append(theta)
            args = args[1:]

        arity = GATE_ARITY[mnemonic]
        if len(args) != arity:
            self._error(lineno, head.column, f"'{mnemonic}' takes {arity} qubit(s), got {len(args)}")
            return
        targets = self._parse_targets(args, controls, lineno, head)
        if targets is None:
            return
        self._emit(lineno, head, mnemonic, targets, tuple(controls), tuple(params))

    def _parse_targets(self, args: Sequence[_Token], controls: List[int], lineno: int,
                       head: _Token) -> Optional[Tuple[int, ...]]:
        targets = []
        seen = set(controls)
        if len(seen) != len(controls):
            self._error(lineno, head.column, "repeated qubit among 'ctrl' prefixes")
            return None
        for token in args:
            q = self._parse_qubit(token, lineno)
            if q is None:
                return None
            if q in seen:
                self._error(lineno, token.column, f"repeated qubit {q} within one instruction")
                return None
            seen.add(q)
            targets.append(q)
        if len(seen) > MAX_TOUCHED:
            self._error(lineno, head.column,
                        f"instruction touches {len(seen)} qubits; at most {MAX_TOUCHED} allowed")
            return None
        return tuple(targets)

    def _parse_unitary(self, args: List[_Token], controls: List[int], head: _Token, lineno: int) -> None:
        if len(args) not in (1, 2):
            self._error(lineno, head.column, f"'unitary' takes 1 or 2 qubits, got {len(args)}")
            self._skip_block()
            return
        targets = self._parse_targets(args, controls, lineno, head)
        dim = 1 << len(args)
        rows = []
        while len(rows) < dim and self.pos < len(self.lines):
            row_lineno = self.pos + 1
            row_tokens = _tokenize(self.lines[self.pos])
            self.pos += 1
            if not row_tokens:
                continue
            if row_tokens[0].text.lower() == "end":
                self._error(row_lineno, row_tokens[0].column, f"unitary block ended after {len(rows)} of {dim} rows")
                return
            if not _DECIMAL_RE.fullmatch(row_tokens[0].text):
                # a statement, not a row: report and resume there
                self.pos -= 1
                self._error(lineno, head.column, f"unitary block ended after {len(rows)} of {dim} rows")
                return
            if len(row_tokens) != 2 * dim:
                self._error(row_lineno, row_tokens[0].column,
                            f"unitary row needs {dim} real/imag pairs, got {len(row_tokens)} numbers")
                self._skip_block()
                return
            values = [self._parse_float(t, row_lineno) for t in row_tokens]
            if any(v is None for v in values):
                self._skip_block()
                return
            rows.append([complex(values[2 * j], values[2 * j + 1]) for j in range(dim)])
        if len(rows) < dim:
            self._error(lineno, head.column, "unterminated unitary block")
            return
        if not self._expect_end(lineno, head):
            return
        if targets is None:
            return
        matrix = np.array(rows, dtype=np.complex128)
        self._emit(lineno, head, "unitary", targets, tuple(controls), (), matrix)

    def _expect_end(self, lineno: int, head: _Token) -> bool:
        while self.pos < len(self.lines):
            end_lineno = self.pos + 1
            tokens = _tokenize(self.lines[self.pos])
            self.pos += 1
            if not tokens:
                continue
            if len(tokens) == 1 and tokens[0].text.lower() == "end":
                return True
            self._error(end_lineno, tokens[0].column, "expected 'end' to close the unitary block")
            if all(_DECIMAL_RE.fullmatch(t.text) for t in tokens):
                self._skip_block()
            else:
                self.pos -= 1
            return False
        self._error(lineno, head.column, "unterminated unitary block")
        return False

    def _skip_block(self) -> None:
        # drop the rest of a rejected block: numeric rows plus a closing `end`, nothing else
        while self.pos < len(self.lines):
            tokens = _tokenize(self.lines[self.pos])
            if not tokens:
                self.pos += 1
                continue
            if len(tokens) == 1 and tokens[0].text.lower() == "end":
                self.pos += 1
                return
            if not all(_DECIMAL_RE.fullmatch(t.text) for t in tokens):
                return
            self.pos += 1

    def _emit(self, lineno: int, head: _Token, kind: str, targets: Tuple[int, ...], controls: Tuple[int, ...],
              params: Tuple[float, ...], matrix: Optional[np.ndarray] = None) -> None:
        try:
            self.gates.append(GateInstance(kind, targets, controls, params, matrix))
        except InputError as e:
            self._error(lineno, head.column, str(e))


def _decode(data: Union[str, bytes]) -> Tuple[Optional[str], List[ParseDiagnostic]]:
    if isinstance(data, str):
        return data, []
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[:e.start].count(b"\n") + 1
        column = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        return None, [ParseDiagnostic(line, column, "input is not valid UTF-8")]
    return text.lstrip("\ufeff"), []


def parse_circuit(text: Union[str, bytes], name: Optional[str] = None) -> ParseResult:
    decoded, diagnostics = _decode(text)
    if decoded is None:
        return ParseResult(None, diagnostics)
    try:
        return CircuitParser(decoded, name).parse()
    except Exception as e:
        logger.exception("parser failed unexpectedly")
        return ParseResult(None, [ParseDiagnostic(1, 1, f"internal parser error: {e}")])


def load_circuit(path: Union[str, Path]) -> Circuit:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise InputError(f"cannot read circuit file {path}: {e}") from e
    result = parse_circuit(data, name=path.stem)
    if not result.ok:
        raise CircuitParseError(result.diagnostics)
    return result.circuit


def _format_targets(qubits: Sequence[int]) -> str:
    return " ".join(str(q) for q in qubits)


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n}"]
    for gate in c.gates:
        prefix = "".join(f"ctrl {q} " for q in gate.controls)
        if gate.kind == "unitary":
            lines.append(f"{prefix}unitary {_format_targets(gate.targets)}")
            for row in gate.matrix:
                lines.append("  " + " ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))
            lines.append("end")
        elif gate.kind == "ry":
            lines.append(f"{prefix}ry {gate.params[0]!r} {_format_targets(gate.targets)}")
        else:
            lines.append(f"{prefix}{gate.kind} {_format_targets(gate.targets)}")
    return "\n".join(lines) + "\n"


def save_circuit(c: Circuit, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_circuit(c), encoding="utf-8", newline="\n")


def validate_universal_set(c: Circuit) -> bool:
    return all(g.kind in CANONICAL_GATE_SET for g in c.gates)


def random_circuit(n: int, depth: int, rng: np.random.Generator,
                   gate_set: Sequence[str] = ("h", "t", "cnot"), name: Optional[str] = None) -> Circuit:
    kinds = [k for k in gate_set if GATE_ARITY.get(k, 0) <= n]
    if not kinds:
        raise InputError(f"no gate in {list(gate_set)} fits on {n} qubit(s)")
    gates = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        qubits = tuple(int(q) for q in rng.choice(n, size=GATE_ARITY[kind], replace=False))
        params = (float(rng.uniform(0.0, 2.0 * np.pi)),) if kind == "ry" else ()
        gates.append(GateInstance(kind, qubits, (), params))
    return Circuit(n, tuple(gates), name)


def iter_steps(c: Circuit, initial: Optional[StateVector] = None) -> Iterator[StateVector]:
    """Yield the register before any gate, then after each gate in order."""
    require_statevector(c.n)
    state = zero_state(c.n) if initial is None else initial
    yield state
    for gate in c.gates:
        state = apply_gate(state, gate)
        yield state


def simulate_steps(c: Circuit, initial: Optional[StateVector] = None) -> List[StateVector]:
    return list(iter_steps(c, initial))


def simulate(c: Circuit, initial: Optional[StateVector] = None) -> StateVector:
    state = None
    for state in iter_steps(c, initial):
        pass
    return state
