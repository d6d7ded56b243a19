from __future__ import annotations

from pathlib import Path

import pytest

from slt.rng import SplitMix64

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return SplitMix64(1234)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; call before asserting so failures are listed too."""

    def report(name: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE.append((name, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
