import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, reported after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def acceptance_lines():
    return ACCEPTANCE_LINES


TABLE_ALPHAS = (2.0, 2.5, 3.0, 3.5, 4.0)


@pytest.fixture(scope="session")
def table_rows():
    """Threshold/gain summary rows for the standard path-loss exponents (computed once)."""
    from ffrplan.optimizer import threshold_table_row

    return {a: threshold_table_row(a) for a in TABLE_ALPHAS}
