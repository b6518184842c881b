import numpy as np
import pytest

from src.core.circuitir import parse_circuit
from src.core.measures import bell_state, ghz_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def bell():
    return bell_state()


@pytest.fixture
def ghz3():
    return ghz_state(3)


@pytest.fixture
def bell_circuit():
    return parse_circuit("qubits 2\nh 0\ncnot 0 1\n", name="bell").circuit


@pytest.fixture
def circuit_file(tmp_path):
    def write(text: str, name: str = "circuit.qc"):
        path = tmp_path / name
        path.write_bytes(text.encode("utf-8"))
        return path
    return write
