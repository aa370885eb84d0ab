"""Command-line interface: single runs, benchmark campaigns, data utilities.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 solver
failure.  Every failure prints one machine-parsable line to stderr of the
form ``error: code=<config|data|solver> <message>``.  No prompts; all
commands are CI-safe.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import comfort, data, simulation
from .data import DataError
from .model import ContractError
from .mpc import MpcConfig

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class SolverFailure(RuntimeError):
    pass


def _fail(code: int, kind: str, message: str) -> int:
    print(f"error: code={kind} {message}", file=sys.stderr)
    return code


def _data_dir() -> Path:
    return Path(os.environ.get("HEATDR_DATA_DIR", "."))


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            cfg = yaml.safe_load(handle)
    except OSError as exc:
        raise ContractError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ContractError(f"malformed config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ContractError(f"config {path} must be a mapping")
    return cfg


def _run_config(cfg: dict, controller_override: str | None = None) -> simulation.RunConfig:
    mpc_cfg = MpcConfig(**cfg.get("mpc", {}))
    known = {"scenario", "parameter_set", "controller", "weeks", "n_rooms",
             "initial_temperature", "warmup_days", "weekly_reset", "perturbation_seed"}
    kwargs = {k: v for k, v in cfg.items() if k in known}
    if controller_override:
        kwargs["controller"] = controller_override
    try:
        return simulation.RunConfig(mpc=mpc_cfg, **kwargs)
    except TypeError as exc:
        raise ContractError(str(exc)) from exc


def _load_series(cfg: dict) -> data.AlignedSeries:
    spec = cfg.get("data", {})
    if "synthetic" in spec:
        synth = spec["synthetic"]
        weeks = int(synth.get("weeks", cfg.get("weeks", 9)))
        return data.generate_synthetic(weeks=weeks, seed=int(synth.get("seed", 0)))
    if "weather" in spec and "prices" in spec:
        base = _data_dir()
        weather = data.load_weather(base / spec["weather"])
        prices = data.load_prices(base / spec["prices"])
        return data.align(weather, prices)
    raise ContractError(
        "config needs data.synthetic {weeks, seed} or data.weather + data.prices paths")


def _check_solver(trace: simulation.SimulationTrace) -> None:
    if trace.config.controller == "mpc" and np.any(trace.solver_iterations < 0):
        raise SolverFailure("planner reported a failed solve")


def cmd_simulate(args) -> int:
    cfg_raw = load_config(args.config)
    cfg = _run_config(cfg_raw, args.controller)
    series = _load_series(cfg_raw)
    trace = simulation.run_closed_loop(cfg, series)
    _check_solver(trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    simulation.write_trace_csv(trace, out / "trace.csv")
    summary = simulation.run_summary(trace)
    (out / "summary.json").write_text(simulation.dumps_summary(summary), encoding="utf-8")
    print(f"wrote {out / 'trace.csv'} and {out / 'summary.json'}")
    return 0


def cmd_campaign(args) -> int:
    cfg_raw = load_config(args.config)
    cfg = _run_config(cfg_raw)
    series = _load_series(cfg_raw)
    report = simulation.compare_campaign(
        series, weeks=cfg.weeks, base_config=cfg, parallel=max(1, args.parallel))
    simulation.write_campaign_outputs(report, args.out)
    print(f"wrote campaign outputs to {args.out} "
          f"({len(report['cells'])} cells, {len(report['failures'])} failed)")
    if report["failures"]:
        return _fail(EXIT_SOLVER, "solver",
                     f"cells failed: {', '.join(report['failures'])}")
    return 0


def cmd_generate_data(args) -> int:
    series = data.generate_synthetic(weeks=args.weeks, seed=args.seed)
    weather, prices = data.split_aligned(series)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.save_weather(weather, out / "weather.csv")
    data.save_prices(prices, out / "prices.csv")
    print(f"wrote {out / 'weather.csv'} and {out / 'prices.csv'} "
          f"({args.weeks} weeks, seed {args.seed})")
    return 0


def cmd_validate_data(args) -> int:
    weather = data.load_weather(args.weather)
    prices = data.load_prices(args.prices)
    aligned = data.align(weather, prices)
    print(f"ok: {aligned.weeks} aligned weeks starting {aligned.start.isoformat()}")
    return 0


def cmd_export_plots_data(args) -> int:
    try:
        report = json.loads(Path(args.summary).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read campaign summary: {exc}") from exc
    if "cells" not in report:
        raise DataError("summary file carries no campaign cells")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "plots_data.csv"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["controller", "scenario", "parameter_set", "week",
                         "cost_eur", "discomfort_k", "band_violation_k"])
        for key, cell in report["cells"].items():
            controller, scenario, parameter_set = key.split("/")
            for week in cell.get("weeks", []):
                writer.writerow([controller, scenario, parameter_set, week["week"],
                                 week["cost_eur"], week["discomfort_k"],
                                 week["band_violation_k"]])
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatdr",
        description="Multi-zone thermal building benchmark for demand-response heating control")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one controller and write trace + summary")
    p.add_argument("--config", required=True)
    p.add_argument("--controller", choices=simulation.CONTROLLER_NAMES,
                   help="override the controller named in the config")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="run the full controller/scenario/parameter grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("generate-data", help="write deterministic synthetic weather and prices")
    p.add_argument("--weeks", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("validate-data", help="check weather and price CSVs and their alignment")
    p.add_argument("--weather", required=True)
    p.add_argument("--prices", required=True)
    p.set_defaults(func=cmd_validate_data)

    p = sub.add_parser("export-plots-data", help="flatten a campaign summary into tidy CSV")
    p.add_argument("--summary", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_export_plots_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except DataError as exc:
        return _fail(EXIT_DATA, "data", str(exc))
    except SolverFailure as exc:
        return _fail(EXIT_SOLVER, "solver", str(exc))


if __name__ == "__main__":
    sys.exit(main())
