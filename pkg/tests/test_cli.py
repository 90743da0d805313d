import csv

import pytest

from panelflux import cli
from panelflux.config import DEFAULT_INDICATORS
from panelflux.pipeline import run_pipeline
from test_pipeline import quick_config


@pytest.fixture(scope="module")
def stage_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    run_pipeline(quick_config(out))
    return out


def test_parser_knows_every_subcommand_and_flag():
    p = cli.build_parser()
    for sub in ("fetch", "run", "demo"):
        args = p.parse_args([sub, "--config", "c.ini", "--out", "o", "--seed", "3", "--refresh",
                             "--countries", "usa,can", "--lags", "2", "--horizon", "8", "--ordering", "F,ICT"])
        assert args.command == sub and args.countries == ("USA", "CAN")
        assert args.lags == 2 and args.horizon == 8 and args.ordering == ("F", "ICT") and args.refresh
    for sub in ("forecast", "unitroot", "pvar", "irf"):
        assert p.parse_args([sub, "--input", "x.csv"]).command == sub
    assert p.parse_args(["run", "--lags", "BIC"]).lags == "bic"
    with pytest.raises(SystemExit):
        p.parse_args(["run", "--lags", "0"])


def test_validation_error_exit_code(capsys):
    assert cli.main(["demo", "--countries", "USA"]) == 2
    assert "at least two countries" in capsys.readouterr().err


def test_fetch_uses_every_indicator(monkeypatch, tmp_path, capsys):
    calls = []

    def fake_fetch(countries, code, start, end, cache=None, refresh=False, label=None):
        calls.append((tuple(countries), code, label, refresh))
        return tmp_path / f"{label}.csv"

    monkeypatch.setattr(cli, "fetch_worldbank", fake_fetch)
    assert cli.main(["fetch", "--countries", "USA,CAN", "--refresh"]) == 0
    assert {c[1] for c in calls} == set(DEFAULT_INDICATORS.values())
    assert all(c[0] == ("USA", "CAN") and c[3] for c in calls)
    assert len(capsys.readouterr().out.splitlines()) == 4


def test_stage_commands_replay_from_csv(stage_files, tmp_path):
    out = tmp_path / "replay"
    assert cli.main(["unitroot", "--input", str(stage_files / "panel_fused.csv"), "--out", str(out)]) == 0
    assert (out / "unitroot_F.csv").read_bytes() == (stage_files / "unitroot_F.csv").read_bytes()
    assert cli.main(["pvar", "--input", str(stage_files / "panel_model.csv"), "--out", str(out),
                     "--lags", "1"]) == 0
    assert (out / "pvar_estimates.csv").read_bytes() == (stage_files / "pvar_estimates.csv").read_bytes()
    assert cli.main(["irf", "--input", str(stage_files / "panel_model.csv"), "--out", str(out),
                     "--lags", "1", "--horizon", "4", "--ordering", "F,ICT", "--bootstrap", "0"]) == 0
    rows = list(csv.DictReader((out / "irf.csv").open()))
    assert max(int(r["horizon"]) for r in rows) == 4
    assert rows[0]["lower"] == ""
    assert (out / "irf_ICT_to_F.svg").exists()


def test_forecast_command(stage_files, tmp_path):
    out = tmp_path / "fc"
    cfg = tmp_path / "fast.ini"
    cfg.write_text("[data]\nsource = csv\ninput = x.csv\n[mlp]\nepochs = 50\nsteps = 4\n")
    assert cli.main(["forecast", "--config", str(cfg), "--input", str(stage_files / "panel_quarterly.csv"),
                     "--out", str(out), "--seed", "1"]) == 0
    lines = (out / "forecasts.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * 4 * 4
    assert (out / "forecast_accuracy.csv").exists()
