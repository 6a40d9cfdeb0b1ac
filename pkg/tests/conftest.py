from __future__ import annotations

from functools import lru_cache

import pytest

from acmlink import DesignSpec, Rayleigh, db_to_linear, design

# filled by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


@lru_cache(maxsize=None)
def cached_design(scheme: str, n: int, k=None, gbar_db: float = 10.0, cap=None):
    """Designs are expensive and several modules reuse the same ones."""
    model = Rayleigh(db_to_linear(gbar_db))
    return design(DesignSpec(scheme, n, k, outage_cap=cap), model)


@pytest.fixture(scope="session")
def designs():
    return cached_design


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split(".")[0]), s)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
