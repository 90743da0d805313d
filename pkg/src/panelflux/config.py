"""Pipeline configuration: an INI file plus command-line overrides."""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .mlp import ForecastConfig, TrainConfig

DEFAULT_COUNTRIES = ("IRN", "USA", "CAN", "DEU", "FRA", "JPN", "TUR", "KOR", "PRT", "GRC")
# World Bank WDI codes.  These are choices, not the original study's (unstated) series.
DEFAULT_INDICATORS = {
    "XP": "NE.EXP.GNFS.CD",   # exports of goods and services, current US$
    "MP": "NE.IMP.GNFS.CD",   # imports of goods and services, current US$
    "GDP": "NY.GDP.MKTP.CD",  # GDP, current US$
    "ICT": "IT.NET.USER.ZS",  # individuals using the Internet, % of population
}


def _list(value: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in re.split(r"[,\s]+", value) if x.strip())


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


@dataclass(frozen=True)
class PipelineConfig:
    countries: tuple[str, ...] = DEFAULT_COUNTRIES
    indicators: dict = field(default_factory=lambda: dict(DEFAULT_INDICATORS))
    source: str = "worldbank"           # "worldbank" or "csv"
    input: Path | None = None           # CSV input when source == "csv"
    observed_start: int = 2000
    observed_end: int = 2020
    forecast: ForecastConfig = ForecastConfig()
    workers: int = 4
    unitroot_det: str = "c"
    unitroot_lags: int | None = None    # None: BIC per unit
    unitroot_level: float = 0.05
    pvar_lags: int | str = "bic"        # fixed order, "aic" or "bic"
    pvar_max_lags: int = 4
    pvar_fe_dof: bool = False
    irf_horizon: int = 10
    irf_ordering: tuple[str, ...] = ("ICT", "F")
    bootstrap_reps: int = 200
    bootstrap_level: float = 0.90
    out: Path = Path("out")
    seed: int = 2021
    refresh: bool = False
    cache: Path | None = None

    def __post_init__(self):
        if len(self.countries) < 2:
            raise ConfigError("at least two countries are required")
        missing = {"XP", "MP", "GDP", "ICT"} - set(self.indicators)
        if missing:
            raise ConfigError(f"indicator mapping lacks {sorted(missing)}")
        if self.source not in ("worldbank", "csv"):
            raise ConfigError(f"unknown source {self.source!r}")
        if self.source == "csv" and self.input is None:
            raise ConfigError("source = csv needs an input path")
        if self.observed_end < self.observed_start:
            raise ConfigError("observed span is empty")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if isinstance(self.pvar_lags, str) and self.pvar_lags not in ("aic", "bic"):
            raise ConfigError(f"pvar lags must be an integer, 'aic' or 'bic', got {self.pvar_lags!r}")
        if sorted(self.irf_ordering) != ["F", "ICT"]:
            raise ConfigError("irf ordering must list F and ICT")
        if self.bootstrap_reps and self.bootstrap_reps < 100:
            raise ConfigError("bootstrap needs 0 (off) or at least 100 replicates")

    @property
    def forecast_years(self) -> tuple[int, int]:
        """Calendar span covered by the forecast, directly after the observed span."""
        years = -(-self.forecast.steps // 4)
        return self.observed_end + 1, self.observed_end + years

    def override(self, **kwargs) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def load_config(path=None, **overrides) -> PipelineConfig:
    """Read an INI file (sections data/indicators/mlp/unitroot/pvar/irf/run).

    Relative ``input`` paths are resolved against the file's directory.
    Keyword overrides that are not ``None`` win over file values.
    """
    kw: dict = {}
    if path is not None:
        path = Path(path)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str  # keep indicator keys upper-case
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read config file {path}")
        try:
            kw = _from_parser(cp, path.parent)
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}: {exc}") from None
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**kw)


def _from_parser(cp: configparser.ConfigParser, base: Path) -> dict:
    kw: dict = {}
    if cp.has_section("data"):
        d = cp["data"]
        if "countries" in d:
            kw["countries"] = tuple(c.upper() for c in _list(d["countries"]))
        if "source" in d:
            kw["source"] = d["source"].strip().lower()
        if "input" in d:
            p = Path(d["input"].strip())
            kw["input"] = p if p.is_absolute() else base / p
        for key in ("observed_start", "observed_end"):
            if key in d:
                kw[key] = int(d[key])
    if cp.has_section("indicators"):
        ind = dict(DEFAULT_INDICATORS)
        ind.update({k: v.strip() for k, v in cp["indicators"].items()})
        kw["indicators"] = ind
    fc, tc = ForecastConfig(), TrainConfig()
    if cp.has_section("mlp"):
        m = cp["mlp"]
        fkw: dict = {}
        if "window" in m:
            fkw["window"] = int(m["window"])
        if "hidden" in m:
            fkw["hidden"] = tuple(int(x) for x in _list(m["hidden"]))
        if "activation" in m:
            fkw["activation"] = m["activation"].strip()
        for key in ("holdout", "steps"):
            if key in m:
                fkw[key] = int(m[key])
        tkw: dict = {}
        if "learning_rate" in m:
            tkw["learning_rate"] = float(m["learning_rate"])
        if "epochs" in m:
            tkw["epochs"] = int(m["epochs"])
        fc = replace(fc, train=replace(tc, **tkw), **fkw)
        if "workers" in m:
            kw["workers"] = int(m["workers"])
    kw["forecast"] = fc
    if cp.has_section("unitroot"):
        u = cp["unitroot"]
        if "deterministic" in u:
            kw["unitroot_det"] = u["deterministic"].strip()
        if "lags" in u:
            v = u["lags"].strip().lower()
            kw["unitroot_lags"] = None if v in ("auto", "bic") else int(v)
        if "level" in u:
            kw["unitroot_level"] = float(u["level"])
    if cp.has_section("pvar"):
        p = cp["pvar"]
        if "lags" in p:
            v = p["lags"].strip().lower()
            kw["pvar_lags"] = v if v in ("aic", "bic") else int(v)
        if "max_lags" in p:
            kw["pvar_max_lags"] = int(p["max_lags"])
        if "fe_dof" in p:
            kw["pvar_fe_dof"] = _bool(p["fe_dof"])
    if cp.has_section("irf"):
        i = cp["irf"]
        if "horizon" in i:
            kw["irf_horizon"] = int(i["horizon"])
        if "ordering" in i:
            kw["irf_ordering"] = _list(i["ordering"])
        if "bootstrap" in i:
            kw["bootstrap_reps"] = int(i["bootstrap"])
        if "level" in i:
            kw["bootstrap_level"] = float(i["level"])
    if cp.has_section("run"):
        r = cp["run"]
        if "out" in r:
            kw["out"] = Path(r["out"].strip())
        if "seed" in r:
            kw["seed"] = int(r["seed"])
        if "cache" in r:
            kw["cache"] = Path(r["cache"].strip())
    return kw
