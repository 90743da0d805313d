from pathlib import Path

import pytest

from panelflux.config import DEFAULT_COUNTRIES, DEFAULT_INDICATORS, PipelineConfig, load_config
from panelflux.errors import ConfigError
from panelflux.pipeline import demo_config_path

INI = """
[data]
countries = USA, CAN DEU
source = csv
input = panel.csv
observed_start = 1990
observed_end = 2010

[indicators]
ICT = IT.CEL.SETS.P2

[mlp]
window = 6
hidden = 8, 4
learning_rate = 0.05
epochs = 100
workers = 2

[unitroot]
deterministic = ct
lags = 2

[pvar]
lags = 3
fe_dof = yes

[irf]
horizon = 12
ordering = F, ICT
bootstrap = 0

[run]
out = results
seed = 7
"""


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.countries == DEFAULT_COUNTRIES and len(cfg.countries) == 10
    assert (cfg.observed_start, cfg.observed_end) == (2000, 2020)
    assert cfg.forecast_years == (2021, 2025)
    assert cfg.forecast.steps == 20
    assert cfg.indicators == DEFAULT_INDICATORS


def test_ini_parsing(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(INI)
    cfg = load_config(path)
    assert cfg.countries == ("USA", "CAN", "DEU")
    assert cfg.input == tmp_path / "panel.csv"
    assert cfg.indicators["ICT"] == "IT.CEL.SETS.P2" and cfg.indicators["XP"] == DEFAULT_INDICATORS["XP"]
    assert cfg.forecast.window == 6 and cfg.forecast.hidden == (8, 4)
    assert cfg.forecast.train.learning_rate == 0.05 and cfg.forecast.train.epochs == 100
    assert cfg.workers == 2
    assert (cfg.unitroot_det, cfg.unitroot_lags) == ("ct", 2)
    assert cfg.pvar_lags == 3 and cfg.pvar_fe_dof
    assert cfg.irf_horizon == 12 and cfg.irf_ordering == ("F", "ICT") and cfg.bootstrap_reps == 0
    assert cfg.out == Path("results") and cfg.seed == 7


def test_overrides_win(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(INI)
    cfg = load_config(path, seed=99, pvar_lags="aic", countries=("USA", "KOR"), out=None)
    assert cfg.seed == 99 and cfg.pvar_lags == "aic" and cfg.countries == ("USA", "KOR")
    assert cfg.out == Path("results")


@pytest.mark.parametrize("kwargs, match", [
    ({"countries": ("USA",)}, "two countries"),
    ({"source": "ftp"}, "source"),
    ({"source": "csv"}, "input"),
    ({"observed_start": 2020, "observed_end": 2000}, "empty"),
    ({"seed": None}, "seed"),
    ({"pvar_lags": "hqic"}, "lags"),
    ({"irf_ordering": ("F", "GDP")}, "ordering"),
    ({"bootstrap_reps": 20}, "bootstrap"),
])
def test_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        PipelineConfig(**kwargs)


def test_bad_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[mlp]\nwindow = eight\n")
    with pytest.raises(ConfigError, match="bad.ini"):
        load_config(bad)


def test_demo_config_loads():
    cfg = load_config(demo_config_path())
    assert cfg.source == "csv" and cfg.input.exists()
    assert cfg.forecast_years == (2021, 2025)
