import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emailnet.ingest import Label, Status, Transmission  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def tx(s, r, ts=0, kind="ham"):
    if kind == "rejected":
        return Transmission(s, r, ts, Status.REJECTED, Label.UNKNOWN)
    return Transmission(s, r, ts, Status.ACCEPTED, Label(kind))


@pytest.fixture
def fixtures_dir():
    return Path(__file__).parent / "fixtures"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
