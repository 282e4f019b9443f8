import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridflex.config import FIXTURE_DIR, build_scenario, fixture_config, load_config  # noqa: E402
from gridflex.grid import load_grid_case  # noqa: E402
from gridflex.timeline import load_timeline  # noqa: E402


def fixture_case(relaxed=False):
    d = FIXTURE_DIR
    return load_grid_case(d / "buses.csv", d / ("branches_relaxed.csv" if relaxed else "branches.csv"),
                          d / "generators.csv", d / "loads.csv")


def fixture_timeline(case, capacity="capacity.csv"):
    d = FIXTURE_DIR
    return load_timeline(case, d / "timeline.csv", d / capacity, d / "interruptible_commitment.csv")


@pytest.fixture(scope="session")
def case9():
    return fixture_case()


@pytest.fixture(scope="session")
def case9_relaxed():
    return fixture_case(relaxed=True)


@pytest.fixture(scope="session")
def timeline9(case9):
    return fixture_timeline(case9)


@pytest.fixture(scope="session")
def scenario9():
    return build_scenario(load_config(fixture_config("scenario")))


@pytest.fixture(scope="session")
def scenario9_relaxed():
    return build_scenario(load_config(fixture_config("relaxed")))


@pytest.fixture(scope="session")
def scenario9_adequate():
    return build_scenario(load_config(fixture_config("adequate")))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
