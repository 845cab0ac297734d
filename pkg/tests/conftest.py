import json
import os
import tempfile

os.environ.setdefault("WAVEGUIDE_LOG_DIR", tempfile.mkdtemp(prefix="waveguide-logs-"))
os.environ.setdefault("WAVEGUIDE_LOG_LEVEL", "WARNING")

import pytest

from src.logger_config import LoggerConfig
from src.model_core import SystemConfig
from src.oracle_dynamics import spectral_cache

LoggerConfig()


@pytest.fixture(autouse=True)
def clear_spectral_cache():
    spectral_cache.clear()
    yield
    spectral_cache.clear()


@pytest.fixture
def fig2a_config():
    """Un émetteur, deux diffuseurs forts, Δx impair"""
    return SystemConfig.from_dimensionless(VA_over_2J=0.08, VB_over_2J=1.8, MA=1, MB=2, dx=7)


@pytest.fixture
def fig2b_config():
    return SystemConfig.from_dimensionless(VA_over_2J=0.08, VB_over_2J=1.8, MA=1, MB=2, dx=8)


@pytest.fixture
def fig3c_config():
    return SystemConfig.from_dimensionless(VA_over_2J=0.08, VB_over_2J=1.27, MA=2, MB=2, dx=1)


@pytest.fixture
def free_emitter():
    return SystemConfig.from_dimensionless(VA_over_2J=0.08, VB_over_2J=0.0, MA=1, MB=0, dx=0)


@pytest.fixture
def small_scenario_data():
    return {
        "name": "petit",
        "J2": 1.0,
        "VA_over_2J": 0.1,
        "VB_over_2J": 1.0,
        "MA": 1,
        "MB": 1,
        "dx": 3,
        "n_sites": 61,
        "t_max": 12.0,
        "dt_out": 0.2,
        "solvers": ["oracle"],
    }


@pytest.fixture
def write_scenario(tmp_path):
    def _write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
