"""Synthetic country panel with a known data-generating process.

Trade openness ``F`` and ``ICT`` follow a known fixed-effects VAR(1); GDP
grows along gentle country-specific trends and exports/imports are split so
that ``(XP + MP) / GDP`` reproduces ``F`` exactly.
"""
from __future__ import annotations

import numpy as np

from .panel import PanelDataset, Period, quarter_range
from .pvar import simulate

COUNTRIES = ("IRN", "USA", "CAN", "DEU", "FRA", "JPN", "TUR", "KOR", "PRT", "GRC")
LAG_MATRIX = np.array([[0.5, 0.2], [0.1, 0.4]])
SIGMA = np.array([[1.6e-3, 4.0e-4], [4.0e-4, 1.0e-3]])


def unit_means(n_units: int, rng: np.random.Generator) -> np.ndarray:
    """Long-run (F, ICT) levels per unit."""
    return np.column_stack([rng.uniform(0.4, 0.9, n_units), rng.uniform(0.3, 0.8, n_units)])


def generate(seed: int = 2021, start: Period = Period(1971, 1), n_periods: int = 200,
             countries=COUNTRIES) -> tuple[PanelDataset, dict]:
    """Quarterly XP/MP/GDP/ICT panel plus the parameters it was drawn from."""
    rng = np.random.default_rng(seed)
    n = len(countries)
    mu = unit_means(n, rng)
    intercepts = mu @ (np.eye(2) - LAG_MATRIX).T  # a_i = (I - G) mu_i
    fi = simulate(LAG_MATRIX, SIGMA, n, n_periods, intercepts, seed=int(rng.integers(2**31)))
    f, ict = fi[:, :, 0], fi[:, :, 1]
    t = np.arange(n_periods) / 4.0
    growth = rng.uniform(0.005, 0.015, n)[:, None]
    level = rng.uniform(2e11, 2e12, n)[:, None]
    cycle = 0.03 * np.sin(2 * np.pi * t / rng.uniform(6.0, 10.0, n)[:, None])
    gdp = level * np.exp(growth * t + cycle)
    export_share = rng.uniform(0.4, 0.6, n)[:, None]
    xp = export_share * f * gdp
    mp = (1.0 - export_share) * f * gdp
    cube = np.stack([xp, mp, gdp, ict], axis=2)
    ds = PanelDataset(tuple(countries), quarter_range(start, n_periods), ("XP", "MP", "GDP", "ICT"), cube)
    truth = {"lag_matrix": LAG_MATRIX.tolist(), "sigma": SIGMA.tolist(), "unit_means": mu.tolist()}
    return ds, truth
