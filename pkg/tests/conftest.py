import pytest
from hypothesis import HealthCheck, settings

from phonon_gate import PhysicalParams, run_cnot
from phonon_gate.protocol import DEFAULT_OPTIONS

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def small_params():
    return PhysicalParams(N_cutoff=6)


@pytest.fixture(scope="session")
def report(params):
    return run_cnot(params, DEFAULT_OPTIONS)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for res in RESULTS.values():
        terminalreporter.write_line(res.line())
