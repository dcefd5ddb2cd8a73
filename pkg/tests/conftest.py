from pathlib import Path

import numpy as np
import pytest

from lnss_timing.orbits.catalog import nrho_orbit

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def almanac_text():
    return (DATA / "almanac_31.alm").read_text()


@pytest.fixture(scope="session")
def nrho():
    """Corrected NRHO (state, period); a few seconds to build, so shared."""
    return nrho_orbit()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance report -----------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
