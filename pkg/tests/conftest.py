import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("dnch", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dnch")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number, passed, detail, seconds=None):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        if seconds is not None:
            line += f"  [{seconds:.2f} s]"
        _ACCEPTANCE.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
