import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from symorbits import shooting

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1_report():
    return shooting.reproduce_table1()


@pytest.fixture(scope="session")
def table1_orbits(table1_report):
    """(row, problem, record, full trajectory) for every converged Table 1 row."""
    out = []
    for row, res in zip(shooting.TABLE1, table1_report.rows):
        problem = shooting.ShootingProblem(row.family, row.T0)
        record, traj = shooting.solve(problem, [res.record.a, res.record.b], return_trajectory=True)
        out.append((row, problem, record, traj))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line, then assert."""

    def report(label: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
