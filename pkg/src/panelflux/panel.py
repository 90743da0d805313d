"""Panel data model, CSV I/O and deterministic series transforms.

A :class:`PanelDataset` is a dense ``(unit, period, indicator)`` cube with
``NaN`` marking missing cells.  All transforms are pure: they return new
objects and never modify their inputs.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateScaleError,
    InsufficientDataError,
    MissingIndicatorError,
    NonPositiveGDPError,
    PanelError,
)

CSV_HEADER = ("country", "year", "quarter", "indicator", "value")
_ISO3 = re.compile(r"^[A-Z]{3}$")


class Period(NamedTuple):
    year: int
    quarter: int | None = None

    @property
    def label(self) -> str:
        return f"{self.year}" if self.quarter is None else f"{self.year}Q{self.quarter}"

    def ordinal(self) -> int:
        return self.year if self.quarter is None else self.year * 4 + self.quarter - 1

    def shift(self, steps: int) -> "Period":
        if self.quarter is None:
            return Period(self.year + steps)
        k = self.ordinal() + steps
        return Period(k // 4, k % 4 + 1)

    def __str__(self) -> str:
        return self.label


def quarter_range(start: Period, count: int) -> tuple[Period, ...]:
    return tuple(start.shift(i) for i in range(count))


@dataclass(frozen=True)
class Series:
    """One (unit, indicator) time series."""

    values: np.ndarray
    periods: tuple[Period, ...] | None = None
    unit: str | None = None
    indicator: str | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise PanelError("a series needs at least one value")
        if self.periods is not None and len(self.periods) != v.size:
            raise PanelError("period axis length does not match values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def replace(self, values, periods=None) -> "Series":
        return Series(values, periods, self.unit, self.indicator)


@dataclass(frozen=True)
class ScaleParams:
    min: float
    max: float

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.min) / (self.max - self.min)

    def invert(self, z):
        return np.asarray(z, dtype=float) * (self.max - self.min) + self.min

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max}


@dataclass(frozen=True)
class PanelDataset:
    """Balanced-axis panel: ``values[i, t, k]`` for unit i, period t, indicator k."""

    units: tuple[str, ...]
    periods: tuple[Period, ...]
    indicators: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        units = tuple(self.units)
        periods = tuple(Period(*p) for p in self.periods)
        indicators = tuple(self.indicators)
        values = np.array(self.values, dtype=float)
        if values.shape != (len(units), len(periods), len(indicators)):
            raise PanelError(
                f"values shape {values.shape} does not match "
                f"({len(units)}, {len(periods)}, {len(indicators)})"
            )
        if len(set(units)) != len(units):
            raise PanelError("duplicate unit codes")
        if len(set(indicators)) != len(indicators):
            raise PanelError("duplicate indicator names")
        for u in units:
            if not _ISO3.match(u):
                raise PanelError(f"unit code {u!r} is not an ISO-3166 alpha-3 code")
        kinds = {p.quarter is None for p in periods}
        if len(kinds) > 1:
            raise PanelError("mixed annual and quarterly periods")
        for q in (p.quarter for p in periods):
            if q is not None and q not in (1, 2, 3, 4):
                raise PanelError(f"quarter must be 1-4, got {q}")
        ords = [p.ordinal() for p in periods]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise PanelError("periods must be strictly increasing without duplicates")
        if np.isinf(values).any():
            raise PanelError("values must be finite or NaN (missing)")
        if "GDP" in indicators:
            g = values[:, :, indicators.index("GDP")]
            bad = np.argwhere(~np.isnan(g) & (g <= 0))
            if bad.size:
                i, t = bad[0]
                raise NonPositiveGDPError(units[i], periods[t].label, float(g[i, t]))
        values.setflags(write=False)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "indicators", indicators)
        object.__setattr__(self, "values", values)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def annual(self) -> bool:
        return bool(self.periods) and self.periods[0].quarter is None

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def index(self, indicator: str) -> int:
        try:
            return self.indicators.index(indicator)
        except ValueError:
            raise MissingIndicatorError(
                f"indicator {indicator!r} not in panel (have {list(self.indicators)})"
            ) from None

    def cube(self, indicators: Sequence[str] | None = None) -> np.ndarray:
        """Writable copy of the values for the given indicators, shape (N, T, K)."""
        if indicators is None:
            return self.values.copy()
        return self.values[:, :, [self.index(k) for k in indicators]].copy()

    def series(self, unit: str, indicator: str) -> Series:
        i = self.units.index(unit)
        return Series(self.values[i, :, self.index(indicator)], self.periods, unit, indicator)

    def select(self, units=None, indicators=None) -> "PanelDataset":
        units = tuple(units) if units is not None else self.units
        indicators = tuple(indicators) if indicators is not None else self.indicators
        missing_units = [u for u in units if u not in self.units]
        if missing_units:
            raise PanelError(f"units not in panel: {missing_units}")
        ui = [self.units.index(u) for u in units]
        ki = [self.index(k) for k in indicators]
        return PanelDataset(units, self.periods, indicators, self.values[ui][:, :, ki])

    def slice_periods(self, start: int, stop: int | None = None) -> "PanelDataset":
        return PanelDataset(
            self.units, self.periods[start:stop], self.indicators, self.values[:, start:stop]
        )

    def with_indicator(self, name: str, values: np.ndarray) -> "PanelDataset":
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape[:2]:
            raise PanelError(f"indicator array must have shape {self.values.shape[:2]}")
        if name in self.indicators:
            cube = self.values.copy()
            cube[:, :, self.index(name)] = values
            return PanelDataset(self.units, self.periods, self.indicators, cube)
        cube = np.concatenate([self.values, values[:, :, None]], axis=2)
        return PanelDataset(self.units, self.periods, self.indicators + (name,), cube)

    def rename(self, mapping: dict[str, str]) -> "PanelDataset":
        return PanelDataset(
            self.units,
            self.periods,
            tuple(mapping.get(k, k) for k in self.indicators),
            self.values,
        )


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, Series) else np.asarray(s, dtype=float)


def _wrap(s, values, periods=None):
    if isinstance(s, Series):
        return s.replace(values, periods)
    return np.asarray(values, dtype=float)


# ---------------------------------------------------------------- transforms


def trade_openness(ds: PanelDataset, name: str = "F", exports: str = "XP",
                   imports: str = "MP", gdp: str = "GDP") -> PanelDataset:
    """Add ``name = (exports + imports) / gdp``; missing wherever an input is."""
    xp, mp, g = (ds.values[:, :, ds.index(k)] for k in (exports, imports, gdp))
    present = ~np.isnan(g)
    bad = np.argwhere(present & (g <= 0))
    if bad.size:
        i, t = bad[0]
        raise NonPositiveGDPError(ds.units[i], ds.periods[t].label, float(g[i, t]))
    with np.errstate(invalid="ignore", divide="ignore"):
        f = (xp + mp) / np.where(present, g, np.nan)
    return ds.with_indicator(name, f)


def difference(s, order: int = 1):
    """``order``-th difference; the result is ``order`` elements shorter."""
    v = _values(s)
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order >= v.size:
        raise InsufficientDataError(f"cannot difference {v.size} values {order} times")
    if order == 0:
        return s if isinstance(s, Series) else v.copy()
    periods = s.periods[order:] if isinstance(s, Series) and s.periods else None
    return _wrap(s, np.diff(v, n=order), periods)


def difference_panel(ds: PanelDataset, indicators: Iterable[str], order: int = 1) -> PanelDataset:
    """Difference selected indicators; every indicator loses the first ``order`` periods."""
    indicators = set(indicators)
    if order == 0 or not indicators:
        return ds
    if order >= len(ds.periods):
        raise InsufficientDataError("panel too short to difference")
    cube = ds.values[:, order:].copy()
    for k in indicators:
        j = ds.index(k)
        cube[:, :, j] = np.diff(ds.values[:, :, j], n=order, axis=1)
    return PanelDataset(ds.units, ds.periods[order:], ds.indicators, cube)


# Quarter centres relative to the year midpoint, in years.
_QUARTER_OFFSETS = np.array([-0.375, -0.125, 0.125, 0.375])


def disaggregate_annual_to_quarterly(annual):
    """Linear interpolation through annual values placed at each year's midpoint.

    Quarter values are read off the piecewise-linear curve at the quarter
    centres; the first and last segments are extended with the boundary slope.
    """
    a = _values(annual)
    if a.size < 2:
        raise InsufficientDataError("need at least two annual observations")
    if np.isnan(a).any():
        raise PanelError("annual series contains missing values")
    slopes = np.diff(a)
    before = np.concatenate([[slopes[0]], slopes])   # slope on the segment ending at year y
    after = np.concatenate([slopes, [slopes[-1]]])   # slope on the segment starting at year y
    out = np.empty((a.size, 4))
    out[:, :2] = a[:, None] + before[:, None] * _QUARTER_OFFSETS[:2]
    out[:, 2:] = a[:, None] + after[:, None] * _QUARTER_OFFSETS[2:]
    periods = None
    if isinstance(annual, Series) and annual.periods:
        periods = tuple(Period(p.year, q) for p in annual.periods for q in (1, 2, 3, 4))
    return _wrap(annual, out.ravel(), periods)


def disaggregate_panel(ds: PanelDataset) -> PanelDataset:
    """Annual panel to quarterly; series are first trimmed to their all-present span."""
    if not ds.annual:
        return ds
    bal = balance(ds)
    n, t, k = bal.shape
    cube = np.empty((n, 4 * t, k))
    for i in range(n):
        for j in range(k):
            cube[i, :, j] = disaggregate_annual_to_quarterly(bal.values[i, :, j])
    periods = tuple(Period(p.year, q) for p in bal.periods for q in (1, 2, 3, 4))
    return PanelDataset(bal.units, periods, bal.indicators, cube)


def normalize(s, params: ScaleParams | None = None):
    """Min-max scale to [0, 1].  Pass ``params`` to reuse a fitted scaling."""
    v = _values(s)
    if params is None:
        lo, hi = float(np.min(v)), float(np.max(v))
        if not hi > lo:
            raise DegenerateScaleError(f"cannot min-max scale a constant series (value {lo!r})")
        params = ScaleParams(lo, hi)
    return _wrap(s, params.apply(v), getattr(s, "periods", None)), params


def denormalize(z, params: ScaleParams):
    return _wrap(z, params.invert(_values(z)), getattr(z, "periods", None))


def windowize(s, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Supervised pairs: ``X[k] = s[k:k+window]``, ``y[k] = s[k+window]``."""
    v = _values(s)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window >= v.size:
        raise InsufficientDataError(f"window {window} needs more than {v.size} observations")
    X = np.lib.stride_tricks.sliding_window_view(v, window)[:-1].copy()
    return X, v[window:].copy()


def balance(ds: PanelDataset) -> PanelDataset:
    """Trim to the longest contiguous period span where every cell is present."""
    ok = ~ds.missing.any(axis=(0, 2))
    best, best_start, run, start = 0, 0, 0, 0
    for t, flag in enumerate(ok):
        if flag:
            if run == 0:
                start = t
            run += 1
            if run > best:
                best, best_start = run, start
        else:
            run = 0
    if best == 0:
        raise PanelError("no period has every unit and indicator present")
    return ds.slice_periods(best_start, best_start + best)


# ----------------------------------------------------------------------- CSV


def read_panel_csv(path) -> PanelDataset:
    """Read the long ``country,year,quarter,indicator,value`` format."""
    cells: dict[tuple[str, Period, str], float] = {}
    units: list[str] = []
    indicators: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise PanelError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                q = row["quarter"].strip()
                period = Period(int(row["year"]), int(q) if q else None)
                raw = row["value"].strip()
                value = float(raw) if raw else math.nan
            except (TypeError, ValueError) as exc:
                raise PanelError(f"{path}:{lineno}: {exc}") from None
            unit, ind = row["country"].strip(), row["indicator"].strip()
            key = (unit, period, ind)
            if key in cells:
                raise PanelError(f"{path}:{lineno}: duplicate cell {unit} {period} {ind}")
            cells[key] = value
            if unit not in units:
                units.append(unit)
            if ind not in indicators:
                indicators.append(ind)
    if not cells:
        raise PanelError(f"{path}: no data rows")
    present = {p for _, p, _ in cells}
    if len({p.quarter is None for p in present}) > 1:
        raise PanelError(f"{path}: mixes annual and quarterly rows")
    first = min(present, key=Period.ordinal)
    last = max(present, key=Period.ordinal)
    periods = quarter_range(first, last.ordinal() - first.ordinal() + 1)
    pos = {p: t for t, p in enumerate(periods)}
    cube = np.full((len(units), len(periods), len(indicators)), np.nan)
    for (u, p, k), v in cells.items():
        cube[units.index(u), pos[p], indicators.index(k)] = v
    return PanelDataset(tuple(units), periods, tuple(indicators), cube)


def write_panel_csv(ds: PanelDataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, unit in enumerate(ds.units):
            for t, p in enumerate(ds.periods):
                for k, ind in enumerate(ds.indicators):
                    v = ds.values[i, t, k]
                    if np.isnan(v):
                        continue
                    w.writerow([unit, p.year, "" if p.quarter is None else p.quarter, ind, repr(float(v))])
    return path
