import numpy as np
import pytest

from colorqubit.config import DeviceConfig
from colorqubit.dispersion import EffectiveIndexModel, WaveguideGeometry
from colorqubit.pipeline import run_design


@pytest.fixture(scope="session")
def ring_model():
    return EffectiveIndexModel(WaveguideGeometry(0.9976, 0.7))


@pytest.fixture(scope="session")
def dfg_model():
    return EffectiveIndexModel(WaveguideGeometry(1.9133, 0.7))


@pytest.fixture(scope="session")
def small_config():
    return DeviceConfig().with_values({"grids.points": 96})


@pytest.fixture(scope="session")
def small_design(small_config):
    return run_design(small_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance_log():
    """Record one verdict line per acceptance criterion; printed in the terminal summary."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
