from pathlib import Path

import numpy as np
import pytest

from panelflux.panel import PanelDataset, Period, quarter_range

FIXTURES = Path(__file__).parent / "fixtures"


def make_panel(cube, indicators=None, units=None, start=Period(2000, 1)):
    cube = np.asarray(cube, dtype=float)
    n, t, k = cube.shape
    units = units or ("USA", "CAN", "DEU", "FRA", "JPN", "TUR", "KOR", "PRT", "GRC", "IRN")[:n]
    indicators = indicators or tuple(f"V{j}" for j in range(k))
    return PanelDataset(tuple(units), quarter_range(start, t), tuple(indicators), cube)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail, seconds = RESULTS[number]
        tr.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  [{seconds:6.1f}s]  {detail}")
