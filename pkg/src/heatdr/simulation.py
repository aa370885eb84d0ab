"""Closed-loop benchmark runner, KPIs, and the controller comparison campaign.

One run binds a controller to the building over ``weeks`` weeks of aligned
data.  The simulation is continuous across weeks (no reset); a configurable
warm-up replays the first day before KPI accounting starts so week one is
not biased by the initial condition.  A campaign runs the full controller x
scenario x parameter grid on shared data and reports weekly and mean KPIs
plus reductions against the hysteresis baseline.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import comfort
from .controllers import HEURISTIC_CONTROLLERS, ControlAction, ControllerContext
from .data import AlignedSeries
from .model import (DEFAULT_HEAT_PUMP, PARAMETER_SETS, STEPS_PER_DAY,
                    STEPS_PER_WEEK, BuildingParams, BuildingState,
                    ContractError, DiscreteDynamics, discretize,
                    draw_multipliers)
from .mpc import MpcConfig, MpcController

logger = logging.getLogger(__name__)

CONTROLLER_NAMES = ("hysteresis", "pc", "psc", "mpc")
SUMMARY_SCHEMA = "heatdr-summary/1"

#: EUR for one step: price ct/kWh * P_el W -> EUR over 15 minutes.
_EUR_STEP = 0.25 / 1000.0 / 100.0


@dataclass(frozen=True)
class RunConfig:
    """Reproducible description of one closed-loop run."""

    scenario: str = "base"
    parameter_set: str = "high"
    controller: str = "psc"
    weeks: int = 9
    n_rooms: int = 5
    dt: float = 900.0
    initial_temperature: float = 20.0
    warmup_days: int = 1
    weekly_reset: bool = False
    perturbation_seed: int = 7
    multipliers: np.ndarray | None = None
    mpc: MpcConfig = field(default_factory=MpcConfig)

    def __post_init__(self):
        if self.scenario not in comfort.SCENARIOS:
            raise ContractError(f"unknown scenario {self.scenario!r}")
        if self.parameter_set not in PARAMETER_SETS:
            raise ContractError(f"unknown parameter set {self.parameter_set!r}")
        if self.controller not in CONTROLLER_NAMES:
            raise ContractError(
                f"unknown controller {self.controller!r}; valid: {', '.join(CONTROLLER_NAMES)}")
        if self.weeks < 1:
            raise ContractError("weeks must be >= 1")
        if 3600.0 % self.dt != 0.0:
            raise ContractError("dt must divide one hour")
        if self.multipliers is None:
            object.__setattr__(self, "multipliers",
                               draw_multipliers(self.n_rooms, self.perturbation_seed))

    def building(self) -> BuildingParams:
        return BuildingParams.uniform(PARAMETER_SETS[self.parameter_set],
                                      self.n_rooms, self.multipliers)

    def echo(self) -> dict:
        """JSON-ready configuration record, frozen multipliers included."""
        out = asdict(self)
        out["multipliers"] = np.asarray(self.multipliers).round(12).tolist()
        out["mpc"] = asdict(self.mpc)
        return out


@dataclass
class SimulationTrace:
    """Per-step arrays of one closed-loop run (KPI accounting window only)."""

    config: RunConfig
    start: object                  # datetime of step 0
    t_air: np.ndarray              # (steps, rooms) end-of-slot temperatures
    t_medium: np.ndarray
    heat: np.ndarray               # (steps, rooms) delivered heat flows W
    chi_mod: np.ndarray            # (steps,)
    p_el: np.ndarray               # (steps,) electrical power W
    price: np.ndarray
    t_ambient: np.ndarray
    solar: np.ndarray
    lower: np.ndarray              # (steps, rooms)
    upper: np.ndarray
    underheat: np.ndarray          # (steps, rooms) K below the band
    overheat: np.ndarray           # (steps, rooms) K above the band
    step_cost: np.ndarray          # (steps,) EUR
    slack_sum: np.ndarray          # (steps,) planner slack, zero for heuristics
    solver_iterations: np.ndarray  # (steps,)
    clamped_steps: int = 0

    @property
    def steps(self) -> int:
        return self.t_air.shape[0]

    @property
    def p_buy(self) -> np.ndarray:
        """Grid power equals the pump's electrical power in this model."""
        return self.p_el


def make_controller(cfg: RunConfig, dynamics: DiscreteDynamics,
                    bounds: comfort.BoundsSchedule, series: AlignedSeries):
    if cfg.controller == "mpc":
        return MpcController(dynamics, DEFAULT_HEAT_PUMP,
                             series.t_ambient, series.solar, series.price,
                             bounds.lower, bounds.upper, cfg.mpc)
    return HEURISTIC_CONTROLLERS[cfg.controller](cfg.n_rooms)


def run_closed_loop(cfg: RunConfig, series: AlignedSeries, controller=None
                    ) -> SimulationTrace:
    """Simulate one controller over the full horizon and collect the trace.

    Each slot the controller sees the temperatures measured at the end of
    the previous slot (the planner additionally reads the full state and the
    recorded series over its horizon), the runner clamps the action to the
    pump envelope with a logged warning if a controller overshoots it, and
    the building advances one exact discrete step.  Slot k's band violation
    is judged on the end-of-slot temperatures against slot k's bounds.
    """
    steps = cfg.weeks * STEPS_PER_WEEK
    if len(series) < steps:
        raise ContractError(f"data covers {len(series)} steps, run needs {steps}")
    building = cfg.building()
    dynamics = discretize(building, cfg.dt)
    bounds = comfort.build_scenario(cfg.scenario, cfg.n_rooms, steps, cfg.dt)
    if controller is None:
        controller = make_controller(cfg, dynamics, bounds, series)
    pump = DEFAULT_HEAT_PUMP
    n = cfg.n_rooms

    trace = SimulationTrace(
        config=cfg, start=series.start,
        t_air=np.empty((steps, n)), t_medium=np.empty((steps, n)),
        heat=np.empty((steps, n)), chi_mod=np.empty(steps), p_el=np.empty(steps),
        price=series.price[:steps].copy(), t_ambient=series.t_ambient[:steps].copy(),
        solar=series.solar[:steps].copy(),
        lower=bounds.lower.copy(), upper=bounds.upper.copy(),
        underheat=np.empty((steps, n)), overheat=np.empty((steps, n)),
        step_cost=np.empty(steps), slack_sum=np.zeros(steps),
        solver_iterations=np.zeros(steps, dtype=int))

    x = BuildingState.uniform(n, cfg.initial_temperature).vector()
    clamped = 0

    def one_step(k: int, x: np.ndarray, record: bool) -> np.ndarray:
        nonlocal clamped
        if k % STEPS_PER_DAY == 0:
            controller.begin_day(series.day_hourly_prices(k // STEPS_PER_DAY))
        if isinstance(controller, MpcController):
            action = controller.step_at(k, x)
        else:
            action = controller.step(ControllerContext(
                t_previous=x[:n], lower=bounds.lower[k], upper=bounds.upper[k],
                price=series.price[k], t_ambient=series.t_ambient[k],
                pump=pump, dt=cfg.dt))
        flows = np.asarray(action.heat_flows, dtype=float)
        envelope = pump.max_heat(series.t_ambient[k])
        total = flows.sum()
        if total > envelope * (1.0 + 1e-9):
            logger.warning("step %d: controller %s exceeded the pump envelope "
                           "(%.1f W > %.1f W); clamping", k, cfg.controller, total, envelope)
            flows = flows * (envelope / total)
            action = ControlAction(heat_flows=flows, chi_mod=action.chi_mod,
                                   p_el=envelope / pump.cop(series.t_ambient[k]),
                                   info=action.info)
            clamped += 1
        x_next = dynamics.step_vector(x, flows, series.t_ambient[k], series.solar[k])
        if record:
            trace.t_air[k] = x_next[:n]
            trace.t_medium[k] = x_next[n:]
            trace.heat[k] = flows
            trace.chi_mod[k] = action.chi_mod
            trace.p_el[k] = action.p_el
            trace.step_cost[k] = series.price[k] * action.p_el * _EUR_STEP
            trace.underheat[k] = np.maximum(0.0, bounds.lower[k] - x_next[:n])
            trace.overheat[k] = np.maximum(0.0, x_next[:n] - bounds.upper[k])
            trace.slack_sum[k] = action.info.get("slack_sum", 0.0)
            trace.solver_iterations[k] = action.info.get("iterations", 0)
        return x_next

    # warm-up on the first day's data; controller state carries over
    for day in range(cfg.warmup_days):
        for k in range(STEPS_PER_DAY):
            x = one_step(k, x, record=False)
    for k in range(steps):
        if cfg.weekly_reset and k > 0 and k % STEPS_PER_WEEK == 0:
            x = BuildingState.uniform(n, cfg.initial_temperature).vector()
        x = one_step(k, x, record=True)

    trace.clamped_steps = clamped
    return trace


def kpi_costs(trace: SimulationTrace, week: int) -> float:
    """Electricity cost of one week in EUR."""
    sl = slice(week * STEPS_PER_WEEK, (week + 1) * STEPS_PER_WEEK)
    if sl.stop > trace.steps:
        raise ContractError(f"week {week} not covered by the trace")
    return float(trace.step_cost[sl].sum())


def kpi_discomfort(trace: SimulationTrace, week: int) -> float:
    """Mean weekly discomfort in K: per-step room shortfalls below the band,
    summed over rooms and averaged over the week's steps."""
    sl = slice(week * STEPS_PER_WEEK, (week + 1) * STEPS_PER_WEEK)
    if sl.stop > trace.steps:
        raise ContractError(f"week {week} not covered by the trace")
    return float(trace.underheat[sl].sum() / STEPS_PER_WEEK)


def kpi_band_violation(trace: SimulationTrace, week: int) -> float:
    """Two-sided variant of the discomfort KPI (shortfall plus overshoot)."""
    sl = slice(week * STEPS_PER_WEEK, (week + 1) * STEPS_PER_WEEK)
    return float((trace.underheat[sl] + trace.overheat[sl]).sum() / STEPS_PER_WEEK)


@dataclass(frozen=True)
class WeeklyResult:
    week: int
    cost_eur: float
    discomfort_k: float
    band_violation_k: float
    energy_kwh: float
    room_underheat_k: tuple[float, ...]


def weekly_results(trace: SimulationTrace) -> list[WeeklyResult]:
    out = []
    for week in range(trace.steps // STEPS_PER_WEEK):
        sl = slice(week * STEPS_PER_WEEK, (week + 1) * STEPS_PER_WEEK)
        out.append(WeeklyResult(
            week=week + 1,
            cost_eur=kpi_costs(trace, week),
            discomfort_k=kpi_discomfort(trace, week),
            band_violation_k=kpi_band_violation(trace, week),
            energy_kwh=float(trace.p_el[sl].sum() * 0.25 / 1000.0),
            room_underheat_k=tuple(float(v) for v in trace.underheat[sl].sum(axis=0))))
    return out


def run_summary(trace: SimulationTrace) -> dict:
    """JSON-ready record of one run: config echo, weekly and mean KPIs."""
    weekly = weekly_results(trace)
    weeks = len(weekly)
    return {
        "schema": SUMMARY_SCHEMA,
        "config": trace.config.echo(),
        "weeks": [asdict(w) for w in weekly],
        "mean_weekly_cost_eur": round(sum(w.cost_eur for w in weekly) / weeks, 10),
        "mean_discomfort_k": round(sum(w.discomfort_k for w in weekly) / weeks, 10),
        "mean_band_violation_k": round(sum(w.band_violation_k for w in weekly) / weeks, 10),
        "total_energy_kwh": round(sum(w.energy_kwh for w in weekly), 10),
        "planner_slack_total_k": float(trace.slack_sum.sum()),
        "clamped_steps": trace.clamped_steps,
    }


def write_trace_csv(trace: SimulationTrace, path) -> None:
    """Tidy per-step trace; one row per slot with per-room columns."""
    n = trace.t_air.shape[1]
    rooms = range(1, n + 1)
    header = (["timestamp", "t_ambient_c", "solar_wm2", "price_ct_kwh",
               "chi_mod", "p_el_w", "p_buy_w", "step_cost_eur",
               "planner_slack_k", "solver_iterations"]
              + [f"t_air_{j}_c" for j in rooms] + [f"t_medium_{j}_c" for j in rooms]
              + [f"q_heat_{j}_w" for j in rooms]
              + [f"t_lower_{j}_c" for j in rooms] + [f"t_upper_{j}_c" for j in rooms]
              + [f"underheat_{j}_k" for j in rooms] + [f"overheat_{j}_k" for j in rooms])
    from datetime import timedelta
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for k in range(trace.steps):
            stamp = trace.start + timedelta(seconds=900 * k)
            row = [stamp.isoformat(),
                   repr(float(trace.t_ambient[k])), repr(float(trace.solar[k])),
                   repr(float(trace.price[k])), repr(float(trace.chi_mod[k])),
                   repr(float(trace.p_el[k])), repr(float(trace.p_el[k])),
                   repr(float(trace.step_cost[k])), repr(float(trace.slack_sum[k])),
                   int(trace.solver_iterations[k])]
            for block in (trace.t_air, trace.t_medium, trace.heat,
                          trace.lower, trace.upper, trace.underheat, trace.overheat):
                row.extend(repr(float(v)) for v in block[k])
            writer.writerow(row)


# --- campaign -----------------------------------------------------------

def _campaign_cell(args):
    """One grid cell; module-level so process pools can pickle it.

    Failures are recorded in the cell instead of aborting the campaign, so
    the surviving cells still reach the report.
    """
    cfg, series = args
    try:
        return run_summary(run_closed_loop(cfg, series))
    except Exception as exc:  # noqa: BLE001 - cell isolation is the point
        logger.exception("campaign cell %s/%s/%s failed",
                         cfg.controller, cfg.scenario, cfg.parameter_set)
        return {"schema": SUMMARY_SCHEMA, "config": cfg.echo(), "error": str(exc),
                "mean_weekly_cost_eur": None, "mean_discomfort_k": None,
                "mean_band_violation_k": None, "weeks": []}


def compare_campaign(series: AlignedSeries, weeks: int,
                     controllers=CONTROLLER_NAMES,
                     scenarios=comfort.SCENARIOS,
                     parameter_sets=tuple(PARAMETER_SETS),
                     base_config: RunConfig | None = None,
                     parallel: int = 1) -> dict:
    """Run the controller x scenario x parameter grid and compare KPIs.

    Every cell shares the same data, perturbation multipliers, and run
    settings, differing only along the grid axes.  The report carries each
    cell's weekly breakdown plus relative cost reductions against the
    hysteresis cell of the same scenario and parameter set.
    """
    proto = base_config or RunConfig()
    cells = []
    for controller in controllers:
        for scenario in scenarios:
            for parameter_set in parameter_sets:
                cfg = RunConfig(
                    scenario=scenario, parameter_set=parameter_set,
                    controller=controller, weeks=weeks, n_rooms=proto.n_rooms,
                    dt=proto.dt, initial_temperature=proto.initial_temperature,
                    warmup_days=proto.warmup_days, weekly_reset=proto.weekly_reset,
                    perturbation_seed=proto.perturbation_seed,
                    multipliers=proto.multipliers, mpc=proto.mpc)
                cells.append(cfg)

    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            summaries = list(pool.map(_campaign_cell, [(c, series) for c in cells]))
    else:
        summaries = [_campaign_cell((c, series)) for c in cells]

    results = {}
    failures = []
    for cfg, summary in zip(cells, summaries):
        key = f"{cfg.controller}/{cfg.scenario}/{cfg.parameter_set}"
        results[key] = summary
        if summary.get("error"):
            failures.append(key)

    reductions = {}
    for scenario in scenarios:
        for parameter_set in parameter_sets:
            base_key = f"hysteresis/{scenario}/{parameter_set}"
            base_cost = results.get(base_key, {}).get("mean_weekly_cost_eur")
            if not base_cost:
                continue
            for controller in controllers:
                key = f"{controller}/{scenario}/{parameter_set}"
                cost = results[key]["mean_weekly_cost_eur"]
                if cost is not None:
                    reductions[key] = round(100.0 * (1.0 - cost / base_cost), 10)

    return {
        "schema": SUMMARY_SCHEMA,
        "weeks": weeks,
        "grid": {"controllers": list(controllers), "scenarios": list(scenarios),
                 "parameter_sets": list(parameter_sets)},
        "cells": results,
        "cost_reduction_vs_hysteresis_pct": reductions,
        "failures": failures,
    }


def write_campaign_outputs(report: dict, out_dir) -> None:
    """Summary JSON plus aggregate and per-week CSVs ready for plotting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "campaign_summary.json").write_text(dumps_summary(report), encoding="utf-8")
    with open(out / "campaign_aggregate.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["controller", "scenario", "parameter_set",
                         "mean_weekly_cost_eur", "mean_discomfort_k",
                         "mean_band_violation_k", "cost_reduction_vs_hysteresis_pct"])
        for key, cell in report["cells"].items():
            controller, scenario, parameter_set = key.split("/")
            fmt = lambda v: "" if v is None else repr(v)
            writer.writerow([controller, scenario, parameter_set,
                             fmt(cell["mean_weekly_cost_eur"]),
                             fmt(cell["mean_discomfort_k"]),
                             fmt(cell["mean_band_violation_k"]),
                             fmt(report["cost_reduction_vs_hysteresis_pct"].get(key))])
    with open(out / "campaign_weekly.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["controller", "scenario", "parameter_set", "week",
                         "cost_eur", "discomfort_k", "band_violation_k", "energy_kwh"])
        for key, cell in report["cells"].items():
            controller, scenario, parameter_set = key.split("/")
            for week in cell["weeks"]:
                writer.writerow([controller, scenario, parameter_set, week["week"],
                                 repr(week["cost_eur"]), repr(week["discomfort_k"]),
                                 repr(week["band_violation_k"]), repr(week["energy_kwh"])])


def dumps_summary(payload: dict) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
