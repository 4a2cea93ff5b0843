import pytest

from chenbound import chen
from chenbound.cache import PsiCache


@pytest.fixture(scope="session")
def psi_cache(tmp_path_factory):
    # shared so the nine and forty grids compute the Psi2 rows once
    return PsiCache(tmp_path_factory.mktemp("psi"))


@pytest.fixture(scope="session")
def nine_report(psi_cache):
    return chen.solve_grid("nine", cache=psi_cache)


@pytest.fixture(scope="session")
def wu_report():
    return chen.solve_grid("nine", b_source="wu-published")


@pytest.fixture(scope="session")
def forty_report(psi_cache):
    return chen.solve_grid("forty", cache=psi_cache)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it and assert it."""

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        assert ok, line

    return record


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run the multi-hour fourhundred grid")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="multi-hour run; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
