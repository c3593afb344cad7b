import csv
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def load_oracles():
    with open(DATA / "oracles.csv", newline="") as fh:
        return {r["name"]: (float(r["input"]), float(r["output"]), float(r["tolerance"]))
                for r in csv.DictReader(fh)}


@pytest.fixture(scope="session")
def oracles():
    return load_oracles()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
