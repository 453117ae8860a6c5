import pytest

from singletrack.core import Config, VehicleParams


@pytest.fixture
def params():
    return VehicleParams(m=4.0, l_v=0.18, l_h=0.18, J_z=0.05, C_v=50.0, C_h=50.0)


@pytest.fixture
def cfg(params):
    return Config(params)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
