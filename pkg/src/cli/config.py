import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

from src.core.errors import InputError
from src.core.statecore import Bipartition

logger = logging.getLogger(__name__)

COMMANDS = ("dilute", "decide", "trace", "verify")
FORMATS = ("json", "csv")
ALL_CONTIGUOUS = "all-contiguous"
VERIFY_DEFAULT_SEED = 1
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    epsilon: Optional[float] = None
    fail_prob: float = 1e-3
    runs: Optional[int] = None
    seed: Optional[int] = None
    bipartitions: str = ALL_CONTIGUOUS
    measures: List[str] = field(default_factory=lambda: ["entropy"])
    out: Optional[str] = None
    format: str = "json"
    threads: Optional[int] = None
    db: Optional[str] = None
    dilute: bool = False
    literal: bool = False
    suites: List[str] = field(default_factory=list)
    samples: Optional[int] = None
    m: int = 10
    alpha: float = 0.5
    inject_violation: bool = False
    log_level: str = "WARNING"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.log_level not in LOG_LEVELS:
            raise InputError(f"log level must be one of {LOG_LEVELS}, got {self.log_level!r}")
        if self.format not in FORMATS:
            raise InputError(f"--format must be one of {FORMATS}, got {self.format!r}")
        if self.epsilon is not None and not 0.0 < self.epsilon <= 1.0:
            raise InputError(f"--epsilon must lie in (0, 1], got {self.epsilon!r}")
        if not 0.0 < self.fail_prob < 1.0:
            raise InputError(f"--fail-prob must lie in (0, 1), got {self.fail_prob!r}")
        if self.runs is not None and self.runs <= 0:
            raise InputError(f"--runs must be positive, got {self.runs}")
        if self.threads is not None and self.threads < 1:
            raise InputError(f"--threads must be at least 1, got {self.threads}")
        if self.command in ("dilute", "decide", "trace") and not self.input:
            raise InputError(f"{self.command} needs an input circuit file")
        if self.command in ("dilute", "decide") and self.epsilon is None:
            raise InputError(f"{self.command} needs --epsilon")
        if self.command == "trace" and self.dilute and self.epsilon is None:
            raise InputError("trace --dilute needs --epsilon")
        if self.command == "decide" and self.seed is None:
            raise InputError("decide samples repetitions and needs --seed")
        if self.command == "verify" and self.seed is None:
            self.seed = VERIFY_DEFAULT_SEED
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _split_list(value: Any) -> List[str]:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [str(item) for item in value]


def _coerce(key: str, value: Any, annotation: Any, path: str) -> Any:
    optional = get_origin(annotation) is Union
    if optional:
        annotation = next(a for a in get_args(annotation) if a is not type(None))
        if value is None:
            return None
    try:
        if get_origin(annotation) in (list, List):
            if isinstance(value, str):
                return value
            if isinstance(value, list) and all(isinstance(item, str) for item in value):
                return value
            raise TypeError("expected a string or a list of strings")
        if annotation is bool:
            if isinstance(value, bool):
                return value
            raise TypeError("expected true or false")
        if isinstance(value, (bool, list, dict)) or value is None:
            raise TypeError(f"expected {annotation.__name__}")
        if annotation is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if annotation is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise InputError(f"config key {key!r} in {path} has bad value {value!r}: {e}") from e


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise InputError(f"config file {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    normalized = {key.replace("-", "_"): value for key, value in data.items()}
    unknown = sorted(set(normalized) - known)
    if unknown:
        raise InputError(f"unknown config key(s) in {path}: {unknown}")
    hints = get_type_hints(RunConfig)
    return {key: _coerce(key, value, hints[key], path) for key, value in normalized.items()}


def build_config(command: str, flags: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """Defaults, then the config file, then any flag that was actually given."""
    values: Dict[str, Any] = {}
    if config_path:
        values.update(load_config_file(config_path))
        logger.info(f"loaded config from {config_path}")
    values.update({key: value for key, value in flags.items() if value is not None})
    values["command"] = command
    for key in ("measures", "suites"):
        if key in values:
            values[key] = _split_list(values[key])
    return RunConfig(**values).validate()


def parse_bipartitions(selector: str, n: int) -> List[Bipartition]:
    """`all-contiguous` or explicit A sides such as `0,1;2`."""
    selector = selector.strip()
    if selector == ALL_CONTIGUOUS:
        return Bipartition.contiguous(n)
    parts = []
    for group in selector.split(";"):
        group = group.strip()
        if not group:
            continue
        try:
            qubits = tuple(int(q) for q in group.split(","))
        except ValueError as e:
            raise InputError(f"bad bipartition {group!r} in {selector!r}") from e
        parts.append(Bipartition(n, qubits))
    if not parts:
        raise InputError(f"no bipartitions in {selector!r}")
    return parts
