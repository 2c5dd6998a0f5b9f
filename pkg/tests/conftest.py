import numpy as np
import pytest

from coopnoma.channel import ChannelRealization, SystemConfig

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(criterion: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def k2_config():
    return SystemConfig(num_users=2, transmit_snr=10.0, power_alloc=(0.8, 0.2))


def realization(direct, inter=None):
    direct = np.asarray(direct, dtype=float)
    K = len(direct)
    g = np.zeros((K, K))
    for (j, k), v in (inter or {}).items():
        g[j - 1, k - 1] = v
    return ChannelRealization(direct_gains=direct, inter_user_gains=g)
