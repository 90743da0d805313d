"""End-to-end run: ingest, disaggregate, forecast, test, estimate, respond.

Each stage writes a CSV that the next one reads, so any stage can be rerun
by hand from the previous stage's output.
"""
from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import irf as irf_mod
from . import pvar, unitroot
from .config import PipelineConfig, load_config
from .errors import PanelError, StageError
from .mlp import ForecastResult, forecast_series
from .panel import (
    PanelDataset,
    balance,
    difference_panel,
    disaggregate_panel,
    quarter_range,
    read_panel_csv,
    trade_openness,
    write_panel_csv,
)
from .plot import render_irf_svg
from .worldbank import fetch_worldbank

log = logging.getLogger(__name__)

MODEL_VARIABLES = ("F", "ICT")


@dataclass
class RunReport:
    stages: list[dict] = field(default_factory=list)
    manifest: list[str] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    status: str = "running"

    def add_file(self, path: Path, out: Path) -> None:
        rel = str(Path(path).relative_to(out))
        if rel not in self.manifest:
            self.manifest.append(rel)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "stages": self.stages,
            "manifest": self.manifest,
            "warnings": self.warnings,
            "results": self.results,
        }

    def write(self, out: Path) -> Path:
        path = out / "run_report.json"
        if "run_report.json" not in self.manifest:
            self.manifest.append("run_report.json")
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path


@contextmanager
def _stage(report: RunReport, name: str):
    entry = {"name": name, "status": "running", "seconds": 0.0}
    report.stages.append(entry)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            yield entry
        except Exception as exc:
            entry["status"] = "failed"
            entry["error"] = str(exc)
            raise StageError(name, exc) from exc
        finally:
            entry["seconds"] = round(time.perf_counter() - t0, 3)
            for w in caught:
                report.warnings.append({"stage": name, "message": str(w.message)})
    entry["status"] = "ok"


def ingest(cfg: PipelineConfig) -> PanelDataset:
    """Load XP/MP/GDP/ICT for the configured countries and observed years."""
    names = ("XP", "MP", "GDP", "ICT")
    if cfg.source == "csv":
        ds = read_panel_csv(cfg.input)
        ds = ds.rename({v: k for k, v in cfg.indicators.items() if v in ds.indicators and k not in ds.indicators})
    else:
        parts = []
        for name in names:
            path = fetch_worldbank(cfg.countries, cfg.indicators[name], cfg.observed_start,
                                   cfg.observed_end, cache=cfg.cache, refresh=cfg.refresh, label=name)
            parts.append(read_panel_csv(path))
        ds = _merge(parts)
    ds = ds.select(units=cfg.countries, indicators=names)
    keep = [t for t, p in enumerate(ds.periods) if cfg.observed_start <= p.year <= cfg.observed_end]
    if not keep:
        raise PanelError("no observations inside the observed span")
    return ds.slice_periods(keep[0], keep[-1] + 1)


def _merge(parts: list[PanelDataset]) -> PanelDataset:
    units = parts[0].units
    periods = sorted({p for d in parts for p in d.periods}, key=lambda p: p.ordinal())
    periods = quarter_range(periods[0], periods[-1].ordinal() - periods[0].ordinal() + 1)
    pos = {p: t for t, p in enumerate(periods)}
    inds = [k for d in parts for k in d.indicators]
    cube = np.full((len(units), len(periods), len(inds)), np.nan)
    col = 0
    for d in parts:
        sub = d.select(units=units)
        for t, p in enumerate(sub.periods):
            cube[:, pos[p], col:col + len(d.indicators)] = sub.values[:, t]
        col += len(d.indicators)
    return PanelDataset(units, periods, tuple(inds), cube)


def forecast_panel(ds: PanelDataset, cfg: PipelineConfig) -> tuple[PanelDataset, dict[tuple[str, str], ForecastResult]]:
    """Forecast every (unit, indicator) series ``cfg.forecast.steps`` quarters ahead.

    Per-series seeds are spawned from the root seed, so results do not
    depend on ``cfg.workers``.
    """
    keys = [(u, k) for u in ds.units for k in ds.indicators]
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(len(keys))]

    def job(args):
        (unit, ind), seed = args
        return forecast_series(ds.series(unit, ind).values, cfg.forecast, seed=seed)

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        results = dict(zip(keys, pool.map(job, zip(keys, seeds))))
    steps = cfg.forecast.steps
    periods = quarter_range(ds.periods[-1].shift(1), steps)
    cube = np.empty((len(ds.units), steps, len(ds.indicators)))
    for i, u in enumerate(ds.units):
        for j, k in enumerate(ds.indicators):
            cube[i, :, j] = results[(u, k)].predicted
    return PanelDataset(ds.units, periods, ds.indicators, cube), results


def fuse(observed: PanelDataset, forecast: PanelDataset) -> PanelDataset:
    if forecast.periods[0] != observed.periods[-1].shift(1):
        raise PanelError("forecast span must follow the observed span")
    cube = np.concatenate([observed.values, forecast.values], axis=1)
    return PanelDataset(observed.units, observed.periods + forecast.periods, observed.indicators, cube)


def _write_accuracy(results: dict, path: Path) -> Path:
    lines = ["country,indicator,accuracy,mape,rmse"]
    for (u, k), r in results.items():
        a = r.accuracy
        lines.append(f"{u},{k},{a.accuracy!r},{a.mape!r},{a.rmse!r}" if a else f"{u},{k},,,")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Execute every stage in order.  On failure the partial report is still written."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport()

    def emit(path):
        report.add_file(Path(path), out)
        return path

    try:
        with _stage(report, "ingest") as st:
            observed = ingest(cfg)
            emit(write_panel_csv(observed, out / "panel_observed.csv"))
            st["detail"] = f"{len(observed.units)} units, {len(observed.periods)} periods"
        with _stage(report, "disaggregate") as st:
            if observed.annual:
                quarterly = disaggregate_panel(observed)
                st["detail"] = "annual to quarterly"
            else:
                quarterly = balance(observed)
                st["detail"] = "already quarterly"
            emit(write_panel_csv(quarterly, out / "panel_quarterly.csv"))
        with _stage(report, "forecast") as st:
            future, results = forecast_panel(quarterly, cfg)
            emit(write_panel_csv(future, out / "forecasts.csv"))
            emit(_write_accuracy(results, out / "forecast_accuracy.csv"))
            scores = [r.accuracy.accuracy for r in results.values() if r.accuracy is not None]
            report.results["forecast_mean_accuracy"] = float(np.mean(scores)) if scores else None
            st["detail"] = f"{len(results)} series, {cfg.forecast.steps} steps"
        with _stage(report, "fuse"):
            fused = trade_openness(fuse(quarterly, future))
            emit(write_panel_csv(fused, out / "panel_fused.csv"))
        with _stage(report, "unitroot") as st:
            model_panel = fused.select(indicators=MODEL_VARIABLES)
            to_difference = []
            for var in MODEL_VARIABLES:
                suite = unitroot.panel_unit_root_suite(
                    model_panel, var, cfg.unitroot_lags, cfg.unitroot_det, level=cfg.unitroot_level
                )
                emit(unitroot.write_report_csv(suite.reports, out / f"unitroot_{var}.csv"))
                if suite.nonstationary:
                    to_difference.append(var)
                    warnings.warn(f"{var} is non-stationary in levels; using first differences")
            report.results["differenced"] = to_difference
            st["detail"] = f"differenced: {', '.join(to_difference) or 'none'}"
        with _stage(report, "difference"):
            model_panel = difference_panel(model_panel, to_difference)
            emit(write_panel_csv(model_panel, out / "panel_model.csv"))
        with _stage(report, "pvar") as st:
            model = fit_model(model_panel, cfg)
            emit(pvar.write_report_csv(model, out / "pvar_estimates.csv"))
            stab = pvar.stability(model)
            if not stab.stable:
                warnings.warn(f"estimated VAR is unstable (max modulus {stab.moduli[0]:.4f})")
            report.results["pvar"] = {
                "lags": model.lags,
                "lag_matrices": model.lag_matrices.tolist(),
                "max_modulus": float(stab.moduli[0]),
                "included_observations": model.nobs,
            }
            st["detail"] = f"p={model.lags}, n={model.nobs}"
        with _stage(report, "irf") as st:
            result = irf_outputs(model, model_panel, cfg, out, emit)
            report.results["irf_ordering"] = list(result.ordering)
            report.results["bootstrap_dropped"] = result.dropped
            st["detail"] = f"H={result.horizon}, ordering {', '.join(result.ordering)}"
        report.status = "ok"
    except StageError:
        report.status = "failed"
        report.write(out)
        raise
    report.write(out)
    return report


def fit_model(model_panel: PanelDataset, cfg: PipelineConfig) -> pvar.PvarModel:
    lags = cfg.pvar_lags
    if isinstance(lags, str):
        lags = pvar.select_lag(model_panel, cfg.pvar_max_lags, lags, MODEL_VARIABLES)
    return pvar.fit(model_panel, lags, MODEL_VARIABLES, fe_dof=cfg.pvar_fe_dof)


def irf_outputs(model, model_panel, cfg: PipelineConfig, out: Path, emit=lambda p: p):
    if cfg.bootstrap_reps:
        result = irf_mod.bootstrap_bands(
            model, model_panel, cfg.bootstrap_reps, cfg.irf_horizon, cfg.bootstrap_level,
            cfg.irf_ordering, seed=cfg.seed,
        )
        if result.dropped:
            warnings.warn(f"{result.dropped} bootstrap replicate(s) dropped")
    else:
        result = irf_mod.impulse_response(model, cfg.irf_horizon, cfg.irf_ordering)
    emit(irf_mod.write_irf_csv(result, out / "irf.csv"))
    for resp in model.variables:
        for shock in model.variables:
            emit(render_irf_svg(result, (resp, shock), out / f"irf_{resp}_to_{shock}.svg"))
    return result


def demo_config_path() -> Path:
    return Path(str(resources.files("panelflux") / "data" / "papersim.ini"))


def run_demo(out=None, seed=None, **overrides) -> RunReport:
    cfg = load_config(demo_config_path(), out=Path(out) if out else None, seed=seed, **overrides)
    return run_pipeline(cfg)
