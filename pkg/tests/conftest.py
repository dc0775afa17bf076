import csv
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def _load():
    out = {}
    with open(DATA / "reference_curves.csv") as fh:
        for row in csv.DictReader(fh):
            out.setdefault((row["figure"], row["series"]), []).append((float(row["snr_db"]), float(row["rate"])))
    return out


@pytest.fixture(scope="session")
def reference():
    """Published sum-rate curves, ``reference(figure, series) -> [(snr_db, rate)]``."""
    table = _load()
    return lambda fig, series: table[(fig, series)]


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_criterion_" not in report.nodeid or report.when != "call":
        return
    lines = [ln for ln in report.capstdout.splitlines() if ln.startswith(("PASS criterion", "FAIL criterion"))]
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE[name] = lines[-1] if lines else f"FAIL {name}: raised before reporting"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[name])
