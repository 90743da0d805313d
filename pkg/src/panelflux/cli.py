"""Command-line entry point: ``panelflux <subcommand> [options]``.

Every stage subcommand reads the CSV written by the previous stage, so a
full run can be replayed piecewise::

    panelflux run --config my.ini --out out/
    panelflux pvar --input out/panel_model.csv --lags 2 --out out2/
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import irf as irf_mod
from . import pipeline, pvar, unitroot
from .config import PipelineConfig, load_config
from .errors import PanelfluxError
from .panel import read_panel_csv, trade_openness, write_panel_csv
from .worldbank import fetch_worldbank

log = logging.getLogger("panelflux")


def _csv_list(text: str) -> tuple[str, ...]:
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _lags(text: str):
    v = text.strip().lower()
    if v in ("aic", "bic"):
        return v
    try:
        n = int(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lags must be an integer, 'aic' or 'bic', got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("lags must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="root random seed")
    common.add_argument("--refresh", action="store_true", default=None, help="ignore cached downloads")
    common.add_argument("--countries", type=lambda s: tuple(c.upper() for c in _csv_list(s)),
                        help="comma-separated ISO3 codes")
    common.add_argument("--lags", type=_lags, help="P-VAR lag order, or aic/bic")
    common.add_argument("--horizon", type=int, help="IRF horizon in quarters")
    common.add_argument("--ordering", type=_csv_list, help="Cholesky ordering, e.g. ICT,F")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="panelflux", description="Panel VAR of trade openness and ICT.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fetch", parents=[common], help="download World Bank indicators into the cache")
    for name, text in (
        ("forecast", "MLP forecasts for every series of a panel CSV"),
        ("unitroot", "LLC / ADF-Fisher / PP-Fisher suite on F and ICT"),
        ("pvar", "fit the panel VAR"),
        ("irf", "impulse responses with bootstrap bands"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--input", type=Path, required=True, help="panel CSV from the previous stage")
        if name in ("irf",):
            p.add_argument("--bootstrap", type=int, help="bootstrap replicates (0 disables bands)")
    sub.add_parser("run", parents=[common], help="full pipeline")
    sub.add_parser("demo", parents=[common], help="full pipeline on the bundled synthetic panel")
    return parser


def _config(args, base=None) -> PipelineConfig:
    path = args.config if args.config is not None else base
    return load_config(
        path,
        out=args.out,
        seed=args.seed,
        refresh=args.refresh,
        countries=args.countries,
        pvar_lags=args.lags,
        irf_horizon=args.horizon,
        irf_ordering=args.ordering,
        bootstrap_reps=getattr(args, "bootstrap", None),
    )


def _model_panel(path: Path):
    ds = read_panel_csv(path)
    if "F" not in ds.indicators and {"XP", "MP", "GDP"} <= set(ds.indicators):
        ds = trade_openness(ds)
    return ds.select(indicators=pipeline.MODEL_VARIABLES)


def cmd_fetch(args) -> int:
    cfg = _config(args)
    for name, code in cfg.indicators.items():
        path = fetch_worldbank(cfg.countries, code, cfg.observed_start, cfg.observed_end,
                               cache=cfg.cache, refresh=cfg.refresh, label=name)
        print(path)
    return 0


def cmd_forecast(args) -> int:
    cfg = _config(args)
    ds = read_panel_csv(args.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    future, results = pipeline.forecast_panel(ds, cfg)
    print(write_panel_csv(future, cfg.out / "forecasts.csv"))
    print(pipeline._write_accuracy(results, cfg.out / "forecast_accuracy.csv"))
    return 0


def cmd_unitroot(args) -> int:
    cfg = _config(args)
    ds = _model_panel(args.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for var in pipeline.MODEL_VARIABLES:
        suite = unitroot.panel_unit_root_suite(ds, var, cfg.unitroot_lags, cfg.unitroot_det,
                                               level=cfg.unitroot_level)
        print(unitroot.write_report_csv(suite.reports, cfg.out / f"unitroot_{var}.csv"))
        print(f"  {var}: {suite.recommendation}")
    return 0


def cmd_pvar(args) -> int:
    cfg = _config(args)
    ds = _model_panel(args.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    model = pipeline.fit_model(ds, cfg)
    print(pvar.write_report_csv(model, cfg.out / "pvar_estimates.csv"))
    stab = pvar.stability(model)
    print(f"  p={model.lags}, max modulus {stab.moduli[0]:.4f} ({'stable' if stab.stable else 'UNSTABLE'})")
    return 0


def cmd_irf(args) -> int:
    cfg = _config(args)
    ds = _model_panel(args.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    model = pipeline.fit_model(ds, cfg)
    result = pipeline.irf_outputs(model, ds, cfg, cfg.out, emit=print)
    if result.dropped:
        log.warning("%d bootstrap replicate(s) dropped", result.dropped)
    return 0


def _report(rep) -> int:
    for st in rep.stages:
        print(f"{st['name']:<13} {st['status']:<6} {st['seconds']:8.3f}s  {st.get('detail', '')}")
    for w in rep.warnings:
        print(f"warning [{w['stage']}]: {w['message']}")
    return 0 if rep.status == "ok" else 1


def cmd_run(args) -> int:
    return _report(pipeline.run_pipeline(_config(args)))


def cmd_demo(args) -> int:
    return _report(pipeline.run_pipeline(_config(args, base=pipeline.demo_config_path())))


COMMANDS = {
    "fetch": cmd_fetch,
    "forecast": cmd_forecast,
    "unitroot": cmd_unitroot,
    "pvar": cmd_pvar,
    "irf": cmd_irf,
    "run": cmd_run,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PanelfluxError as exc:
        print(f"panelflux {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
