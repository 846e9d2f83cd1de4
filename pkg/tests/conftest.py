import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from analytics.model import gaussian_instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_arm_instance():
    return gaussian_instance([0.5, 0.0], [1.0, 1.0])


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="run.yaml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
