import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from maxent_donut.graph import build_kdonut, shortest_path_metric

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def k3():
    g = build_kdonut(3)
    return g, shortest_path_metric(g)


def load_data(name: str) -> dict:
    return json.loads((DATA / name).read_text())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
