import numpy as np
import pytest

from wlprecoding.channel import RngStream, draw_rayleigh_channel

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""
    def _report(name, ok, detail):
        line = '{0} {1}: {2}'.format('PASS' if ok else 'FAIL', name, detail)
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def channel_factory():
    def make(M, K, trial=0, seed=7, noise_var=1.0):
        return draw_rayleigh_channel(M, K, RngStream(seed, trial), noise_var=noise_var)
    return make
