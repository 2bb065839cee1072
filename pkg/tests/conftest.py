import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    """Store a verdict for an acceptance criterion; parts of one criterion are ANDed."""
    def _record(number, ok, detail=""):
        prev_ok, prev = ACCEPTANCE.get(number, (True, ""))
        ACCEPTANCE[number] = (prev_ok and bool(ok), f"{prev}; {detail}" if prev else detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return _record
