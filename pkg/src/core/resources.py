import logging
import os
from typing import Optional

import psutil

from src.core.errors import CapExceededError

logger = logging.getLogger(__name__)

DEFAULT_STATEVECTOR_CAP = 24
DENSITY_CAP = 12
DOUBLED_CAP = 10
CAP_ENV_VAR = "LITTLENT_CAP_QUBITS"

BYTES_PER_AMPLITUDE = 16


def statevector_cap() -> int:
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_STATEVECTOR_CAP
    try:
        cap = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {CAP_ENV_VAR}={raw!r}")
        return DEFAULT_STATEVECTOR_CAP
    if cap < 1:
        logger.warning(f"Ignoring {CAP_ENV_VAR}={cap}; must be at least 1")
        return DEFAULT_STATEVECTOR_CAP
    return cap


class ResourceMonitor:
    """Snapshot of host memory and CPUs used to refuse oversized simulations."""

    def __init__(self):
        self.update()

    def update(self) -> None:
        mem = psutil.virtual_memory()
        self.total_memory = mem.total
        self.available_memory = mem.available
        self.memory_percent = mem.percent
        self.cpu_count = psutil.cpu_count() or 1

    def default_workers(self) -> int:
        return max(1, self.cpu_count)

    def check_statevector(self, n: int, copies: int = 3) -> None:
        cap = statevector_cap()
        if n > cap:
            raise CapExceededError(f"{n} qubits exceeds the statevector cap of {cap}")
        self._check_memory(copies * BYTES_PER_AMPLITUDE * (1 << n), f"{n}-qubit statevector")

    def check_density(self, n: int, cap: int = DENSITY_CAP) -> None:
        if n > cap:
            raise CapExceededError(f"{n} qubits exceeds the density-operator cap of {cap}")
        self._check_memory(2 * BYTES_PER_AMPLITUDE * (1 << (2 * n)), f"{n}-qubit density operator")

    def _check_memory(self, required: int, what: str) -> None:
        if required > self.available_memory:
            raise CapExceededError(
                f"{what} needs {required / (1024 * 1024):.1f} MB but only "
                f"{self.available_memory / (1024 * 1024):.1f} MB are available"
            )


_monitor: Optional[ResourceMonitor] = None


def monitor() -> ResourceMonitor:
    global _monitor
    if _monitor is None:
        _monitor = ResourceMonitor()
    return _monitor


def require_statevector(n: int) -> None:
    guard = monitor()
    guard.update()
    guard.check_statevector(n)


def require_density(n: int, cap: int = DENSITY_CAP) -> None:
    guard = monitor()
    guard.update()
    guard.check_density(n, cap)
