from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from preamble_forge.scenario import load_default  # noqa: E402
from preamble_forge.spectral_ops import FrameConfig  # noqa: E402

# criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def table1():
    return load_default()


@pytest.fixture
def small_cfg():
    return FrameConfig.create(16, [6, 7, 8], n_cp=2, l_os=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
