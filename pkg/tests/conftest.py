"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np

from heatdr.model import DEFAULT_HEAT_PUMP, PARAMETER_SETS, BuildingParams, discretize
from heatdr.mpc import MpcConfig, PredictionCache, build_problem, solve


def tiny_instance_grid_slack(cap, cop, p_max_ct):
    """Objective allowance for a 21-level heat grid against the continuum.

    One grid spacing of heat held for one step, bought at the instance's
    dearest price, doubled because early heat is at worst about half as
    effective at a later deadline (decay through the medium node).
    """
    kwh_thermal = (cap / 20.0) * 0.25 / 1000.0
    return 2.0 * kwh_thermal / cop * p_max_ct / 100.0


def run_tiny_instance(seed):
    """One random single-room, four-step planning instance plus its oracle.

    Returns (lp_objective, grid_objective, grid_slack): the condensed
    program's optimum, the exhaustive 21-level enumeration optimum with the
    same slack penalty, and the granted grid-coarseness allowance.
    """
    rng = np.random.default_rng(seed)
    mult = 1.0 + rng.uniform(-0.05, 0.05, (1, 5))
    building = BuildingParams.uniform(PARAMETER_SETS["high"], 1, multipliers=mult)
    dynamics = discretize(building, 900.0)
    cache = PredictionCache(dynamics, 4)
    cfg = MpcConfig(horizon_hours=1.0, slack_penalty=50.0)
    steps = 4
    t_a = np.full(steps, rng.uniform(-5, 5))
    price = rng.uniform(5.0, 45.0, steps)
    start = rng.uniform(16.3, 16.7)
    x0 = np.array([start, start])
    lower = np.array([[10.0], [10.0], [10.0], [22.5]])  # one terminal deadline
    upper = np.full((steps, 1), 28.0)
    problem = build_problem(x0, cache, t_a, np.zeros(steps), price,
                            lower, upper, DEFAULT_HEAT_PUMP, cfg)
    solution = solve(problem, cfg)
    assert solution.status == "optimal"

    cap = DEFAULT_HEAT_PUMP.max_heat(t_a[0])
    levels = np.linspace(0.0, cap, 21)
    grids = np.stack(np.meshgrid(*([levels] * steps), indexing="ij"),
                     axis=-1).reshape(-1, steps)
    x_air = np.full(grids.shape[0], x0[0])
    x_med = np.full(grids.shape[0], x0[1])
    a, b, bd = dynamics.a, dynamics.b_heat, dynamics.b_disturbance
    cop = DEFAULT_HEAT_PUMP.cop(t_a[0])
    cost = np.zeros(grids.shape[0])
    penalty = np.zeros(grids.shape[0])
    for k in range(steps):
        u = grids[:, k]
        x_air, x_med = (a[0, 0] * x_air + a[0, 1] * x_med + b[0, 0] * u
                        + bd[0, 0] * t_a[k],
                        a[1, 0] * x_air + a[1, 1] * x_med + b[1, 0] * u
                        + bd[1, 0] * t_a[k])
        cost += price[k] * u / cop * 0.25 / 1000.0 / 100.0
        penalty += 50.0 * (np.maximum(0.0, lower[k, 0] - x_air)
                           + np.maximum(0.0, x_air - 28.0))
    grid_objective = float((cost + penalty).min())
    return solution.objective, grid_objective, \
        tiny_instance_grid_slack(cap, cop, price.max())
