import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import CRITERIA

    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        parts = CRITERIA[number]
        verdict = "PASS" if all(ok for _, ok, _, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}")
        for label, ok, elapsed, detail in parts:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {label} [{elapsed:.2f} s] {detail.strip()}")
