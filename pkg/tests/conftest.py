from pathlib import Path

import pytest

from evfw.dataset import load_csv, standardize

DATA_DIR = Path(__file__).parent / "data"
IRIS_CSV = DATA_DIR / "iris.csv"

_criteria = []


@pytest.fixture(scope="session")
def iris():
    return standardize(load_csv(IRIS_CSV, label_column="species"), "min-max")


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number, passed, detail):
        _criteria.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
