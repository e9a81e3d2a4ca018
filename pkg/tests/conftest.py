import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pidtune.env import EpisodeConfig  # noqa: E402
from pidtune.plant import PlantModel, discretize  # noqa: E402


@pytest.fixture(scope="session")
def plant():
    return discretize(PlantModel())


@pytest.fixture(scope="session")
def episode():
    return EpisodeConfig()


def pytest_terminal_summary(terminalreporter):
    from criteria import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
