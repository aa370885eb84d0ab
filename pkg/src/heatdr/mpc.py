"""Receding-horizon optimal controller over the exact discrete building model.

Each slot the controller condenses the state trajectory out of the
finite-horizon program, leaving the per-room heat flows and per-output
comfort slacks as decision variables of a sparse LP (a QP when the optional
input-rate weight is nonzero).  Comfort bounds are softened by exact-penalty
slacks so the program is always feasible; with the default penalty the
slacks are zero whenever the hard problem is feasible.  Only the first input
vector is applied, projected onto the pump's feasible modulation set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import (ContractError, DiscreteDynamics, HeatPumpCurve,
                    heat_to_power, round_modulation)
from .controllers import ControlAction

#: EUR per (ct/kWh * W * step): ct->EUR and W*step->kWh at 15-minute steps.
_EUR_PER_CT_W_STEP = 0.25 / 1000.0 / 100.0


@dataclass(frozen=True)
class MpcConfig:
    """Tuning of the receding-horizon controller.

    ``slack_penalty`` (EUR per K per step) defaults to one thousand times
    the highest price seen over the horizon, expressed in EUR, which keeps
    slacks at exactly zero whenever the hard bounds are attainable.
    """

    horizon_hours: float = 16.0
    rate_weight: float = 0.0
    slack_penalty: float | None = None
    kkt_tolerance: float = 1e-6
    max_iterations: int = 20000

    def __post_init__(self):
        if self.horizon_hours <= 0:
            raise ContractError("horizon must be positive")
        if self.rate_weight < 0:
            raise ContractError("rate weight must be >= 0")
        if self.slack_penalty is not None and self.slack_penalty <= 0:
            raise ContractError("slack penalty must be > 0")

    def horizon_steps(self, dt: float) -> int:
        return max(1, int(round(self.horizon_hours * 3600.0 / dt)))

    def penalty(self, horizon_prices: np.ndarray) -> float:
        if self.slack_penalty is not None:
            return self.slack_penalty
        return 1000.0 * max(float(np.max(horizon_prices)), 1.0) / 100.0


@dataclass(frozen=True)
class HorizonProblem:
    """Condensed finite-horizon program ready for the solver.

    Decision vector is [heat flows (steps * rooms), slacks (kept outputs)].
    ``lower_rows``/``upper_rows`` record which flattened output indices kept
    a constraint after pruning provably inactive ones.
    """

    n_rooms: int
    steps: int
    cost: np.ndarray
    a_ub: sp.csr_matrix
    b_ub: np.ndarray
    var_upper: np.ndarray
    slack_index: np.ndarray
    lower_rows: np.ndarray
    upper_rows: np.ndarray
    free_response: np.ndarray
    gain: np.ndarray
    rate_weight: float
    previous_input: np.ndarray
    heat_cap: np.ndarray
    slack_penalty: float


@dataclass(frozen=True)
class MpcSolution:
    """Optimal trajectory with solver metadata."""

    heat_flows: np.ndarray      # (steps, rooms)
    slacks: np.ndarray          # (steps, rooms), zeros where pruned
    objective: float            # EUR over the horizon
    iterations: int
    status: str                 # optimal | max-iterations | infeasible-numerics

    @property
    def slack_total(self) -> float:
        return float(self.slacks.sum())


class PredictionCache:
    """Impulse-response matrices of one discretized building, built once.

    ``gain(h)`` returns the lower block-triangular map from the stacked heat
    flows to the stacked predicted air temperatures over an ``h``-step
    horizon; shorter horizons reuse the top-left block of the longest one.
    """

    def __init__(self, dynamics: DiscreteDynamics, max_steps: int):
        n = dynamics.n
        self.dynamics = dynamics
        self.max_steps = max_steps
        pulse = np.empty((max_steps, n, n))
        block = dynamics.b_heat.copy()
        for i in range(max_steps):
            pulse[i] = block[:n]
            block = dynamics.a @ block
        full = np.zeros((max_steps * n, max_steps * n))
        for i in range(1, max_steps + 1):
            for m in range(i):
                full[(i - 1) * n:i * n, m * n:(m + 1) * n] = pulse[i - 1 - m]
        self._full_gain = full

    def gain(self, steps: int) -> np.ndarray:
        if steps > self.max_steps:
            raise ContractError("horizon exceeds the prediction cache")
        n = self.dynamics.n
        return self._full_gain[:steps * n, :steps * n]

    def free_response(self, x0: np.ndarray, t_ambient: np.ndarray,
                      solar: np.ndarray) -> np.ndarray:
        """Stacked unheated air temperatures for the given disturbance run."""
        dyn = self.dynamics
        n = dyn.n
        steps = t_ambient.shape[0]
        out = np.empty(steps * n)
        x = x0
        for i in range(steps):
            x = dyn.a @ x + dyn.b_disturbance @ (t_ambient[i], solar[i])
            out[i * n:(i + 1) * n] = x[:n]
        return out


def build_problem(x0: np.ndarray, cache: PredictionCache,
                  t_ambient: np.ndarray, solar: np.ndarray, price: np.ndarray,
                  lower: np.ndarray, upper: np.ndarray,
                  pump: HeatPumpCurve, cfg: MpcConfig,
                  previous_input: np.ndarray | None = None) -> HorizonProblem:
    """Condense one horizon into a sparse inequality-constrained program.

    Forecast arrays must cover the full horizon; ``lower``/``upper`` have
    shape (steps, rooms).  Output rows that no feasible heating can violate
    (lower bounds already met by the free response, upper bounds out of
    reach even at full power) are dropped along with their slacks.
    """
    n = cache.dynamics.n
    steps = t_ambient.shape[0]
    for name, arr in (("solar", solar), ("price", price)):
        if arr.shape[0] != steps:
            raise ContractError(f"{name} forecast shorter than the horizon")
    if lower.shape != (steps, n) or upper.shape != (steps, n):
        raise ContractError("bounds arrays must have shape (steps, rooms)")

    n_vars = steps * n
    gain = cache.gain(steps)
    free = cache.free_response(x0, t_ambient, solar)
    cop = pump.cop(t_ambient)
    heat_cap = cop * pump.max_power(t_ambient)

    lower_flat = lower.ravel()
    upper_flat = upper.ravel()
    # heating only raises temperatures, so a lower row already satisfied by
    # the free response can never activate; an upper row is kept only if
    # full-power heating could reach it
    lower_rows = np.flatnonzero(free < lower_flat + 1e-9)
    max_effect = gain @ np.repeat(heat_cap, n)
    upper_rows = np.flatnonzero(free + max_effect > upper_flat - 1e-9)

    slack_index = np.union1d(lower_rows, upper_rows)
    n_slack = slack_index.size

    # single dense assembly, one sparse conversion (hot path)
    n_rows = lower_rows.size + upper_rows.size + steps
    dense = np.zeros((n_rows, n_vars + n_slack))
    rhs = np.empty(n_rows)
    row = 0
    if lower_rows.size:
        block = slice(row, row + lower_rows.size)
        dense[block, :n_vars] = -gain[lower_rows]
        slack_cols = n_vars + np.searchsorted(slack_index, lower_rows)
        dense[np.arange(row, row + lower_rows.size), slack_cols] = -1.0
        rhs[block] = free[lower_rows] - lower_flat[lower_rows]
        row += lower_rows.size
    if upper_rows.size:
        block = slice(row, row + upper_rows.size)
        dense[block, :n_vars] = gain[upper_rows]
        slack_cols = n_vars + np.searchsorted(slack_index, upper_rows)
        dense[np.arange(row, row + upper_rows.size), slack_cols] = -1.0
        rhs[block] = upper_flat[upper_rows] - free[upper_rows]
        row += upper_rows.size
    dense[row + np.repeat(np.arange(steps), n), np.arange(n_vars)] = 1.0
    rhs[row:] = heat_cap

    penalty = cfg.penalty(price)
    cost = np.concatenate([
        np.repeat(price / cop, n) * _EUR_PER_CT_W_STEP,
        np.full(n_slack, penalty),
    ])
    if previous_input is None:
        previous_input = np.zeros(n)
    return HorizonProblem(
        n_rooms=n, steps=steps, cost=cost,
        a_ub=sp.csr_matrix(dense), b_ub=rhs,
        var_upper=np.concatenate([np.repeat(heat_cap, n), np.full(n_slack, np.inf)]),
        slack_index=slack_index, lower_rows=lower_rows, upper_rows=upper_rows,
        free_response=free, gain=gain, rate_weight=cfg.rate_weight,
        previous_input=np.asarray(previous_input, dtype=float),
        heat_cap=heat_cap, slack_penalty=penalty)


def _unpack(problem: HorizonProblem, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, steps = problem.n_rooms, problem.steps
    flows = z[:steps * n].reshape(steps, n)
    slacks = np.zeros(steps * n)
    slacks[problem.slack_index] = z[steps * n:]
    return flows, slacks.reshape(steps, n)


def solve(problem: HorizonProblem, cfg: MpcConfig) -> MpcSolution:
    """Solve the condensed program to the configured KKT residual.

    The pure-cost problem (zero rate weight) is an LP handled by a dual
    simplex; the smoothed variant is a convex QP delegated to cvxpy.  The
    slacks keep the program feasible, so a failure here indicates numerics,
    not an empty feasible set.
    """
    if problem.rate_weight > 0.0:
        return _solve_qp(problem, cfg)
    n_vars = problem.cost.size
    if problem.slack_index.size == 0 and np.all(problem.cost >= 0.0):
        # nothing can bind and heating only costs: staying off is optimal
        return MpcSolution(*_unpack(problem, np.zeros(n_vars)),
                           objective=0.0, iterations=0, status="optimal")
    tol = min(cfg.kkt_tolerance, 1e-7)
    res = linprog(
        problem.cost, A_ub=problem.a_ub, b_ub=problem.b_ub,
        bounds=np.column_stack([np.zeros(n_vars), problem.var_upper]),
        method="highs-ds",
        options={"maxiter": cfg.max_iterations,
                 "primal_feasibility_tolerance": tol,
                 "dual_feasibility_tolerance": tol})
    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "max-iterations"
    else:
        status = "infeasible-numerics"
    z = res.x if res.x is not None else np.zeros(n_vars)
    flows, slacks = _unpack(problem, z)
    objective = float(res.fun) if res.fun is not None else float("nan")
    return MpcSolution(heat_flows=flows, slacks=slacks, objective=objective,
                       iterations=int(res.nit), status=status)


def _solve_qp(problem: HorizonProblem, cfg: MpcConfig) -> MpcSolution:
    import cvxpy as cp  # optional dependency, only for rate_weight > 0

    n, steps = problem.n_rooms, problem.steps
    n_u = steps * n
    u = cp.Variable(n_u, nonneg=True)
    s = cp.Variable(problem.slack_index.size, nonneg=True)
    z = cp.hstack([u, s]) if problem.slack_index.size else u
    du_first = cp.reshape(u[:n], (n,), order="C") - problem.previous_input
    du_rest = cp.reshape(u, (steps, n), order="C")
    smooth = cp.sum_squares(du_first)
    if steps > 1:
        smooth = smooth + cp.sum_squares(du_rest[1:] - du_rest[:-1])
    objective = problem.cost[:n_u] @ u + problem.rate_weight * smooth
    if problem.slack_index.size:
        objective = objective + problem.slack_penalty * cp.sum(s)
    constraints = [problem.a_ub @ z <= problem.b_ub,
                   u <= problem.var_upper[:n_u]]
    prob = cp.Problem(cp.Minimize(objective), constraints)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        prob.solve()
    if prob.status in ("optimal", "optimal_inaccurate"):
        status = "optimal" if prob.status == "optimal" else "max-iterations"
    else:
        status = "infeasible-numerics"
    z_val = np.concatenate([
        u.value if u.value is not None else np.zeros(n_u),
        (s.value if s.value is not None else np.zeros(problem.slack_index.size)),
    ])
    z_val = np.maximum(z_val, 0.0)
    flows, slacks = _unpack(problem, z_val)
    return MpcSolution(heat_flows=flows, slacks=slacks,
                       objective=float(prob.value) if prob.value is not None else float("nan"),
                       iterations=0, status=status)


class MpcController:
    """Closed-loop wrapper: plan over the horizon, apply the first input.

    Reads the recorded exogenous series directly (idealized forecasts); the
    horizon truncates at the end of the series.  The applied aggregate heat
    flow is projected onto the pump's feasible modulation set with the same
    rounding rule the heuristics use, rescaling the per-room split.
    """

    name = "mpc"

    def __init__(self, dynamics: DiscreteDynamics, pump: HeatPumpCurve,
                 t_ambient: np.ndarray, solar: np.ndarray, price: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray, cfg: MpcConfig | None = None):
        self.cfg = cfg or MpcConfig()
        self.dynamics = dynamics
        self.pump = pump
        self.t_ambient = np.asarray(t_ambient, dtype=float)
        self.solar = np.asarray(solar, dtype=float)
        self.price = np.asarray(price, dtype=float)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.horizon = self.cfg.horizon_steps(dynamics.dt)
        self.cache = PredictionCache(dynamics, self.horizon)
        self._previous_input = np.zeros(dynamics.n)

    def reset(self) -> None:
        self._previous_input = np.zeros(self.dynamics.n)

    def begin_day(self, day_prices) -> None:
        pass  # plans from the recorded series directly

    def plan(self, k_now: int, x0: np.ndarray) -> tuple[HorizonProblem, MpcSolution]:
        """Build and solve the horizon program anchored at slot ``k_now``."""
        end = min(k_now + self.horizon, self.t_ambient.shape[0])
        if end <= k_now:
            raise ContractError("k_now is past the end of the recorded series")
        sl = slice(k_now, end)
        problem = build_problem(
            x0, self.cache, self.t_ambient[sl], self.solar[sl], self.price[sl],
            self.lower[sl], self.upper[sl], self.pump, self.cfg,
            previous_input=self._previous_input)
        return problem, solve(problem, self.cfg)

    def step_at(self, k_now: int, x0: np.ndarray) -> ControlAction:
        """Plan at ``k_now`` and return the projected first action."""
        problem, solution = self.plan(k_now, x0)
        first = solution.heat_flows[0].copy()
        total = float(first.sum())
        cap = problem.heat_cap[0]
        chi_raw = total / cap if cap > 0 else 0.0
        chi_mod = round_modulation(chi_raw)
        if total > 0.0 and chi_mod != chi_raw:
            first *= chi_mod * cap / total
        elif chi_mod == 0.0:
            first = np.zeros_like(first)
        self._previous_input = first
        cop = self.pump.cop(self.t_ambient[k_now])
        return ControlAction(
            heat_flows=first, chi_mod=chi_mod,
            p_el=heat_to_power(float(first.sum()), float(cop)),
            info={"objective": solution.objective,
                  "status": solution.status,
                  "iterations": solution.iterations,
                  "slack_sum": solution.slack_total,
                  "chi_raw": chi_raw})
