import math

import numpy as np
import pytest

from milattice.model import ModelParams
from milattice.series import TrigSeries

LAM = 12 / (37 * math.sqrt(2))
OMEGA = math.sqrt(37) / 5


def base_params(gamma=0.0, h=None, omega=OMEGA, lam=LAM):
    """Resonant instance: p = pi/4, k0 = +-1."""
    return ModelParams.with_rational_phase(gamma, lam, omega, 1, 4, h or TrigSeries.zeros())


def cos_series(amp=1.0, k=1):
    return TrigSeries.from_cos_sin(0.0, {k: amp})


def random_series(rng, K, scale=1.0, decay=1.0):
    k = np.arange(1, K + 1)
    c = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) * scale / k**decay
    modes = {0: scale * rng.standard_normal()}
    modes.update({int(j): complex(v) for j, v in zip(k, c)})
    return TrigSeries.from_modes(modes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def resonant():
    return base_params(0.0, cos_series())


# (criterion, passed, detail) rows collected by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
