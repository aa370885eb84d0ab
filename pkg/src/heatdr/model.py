"""Multi-zone RC thermal building model and air-sourced heat pump.

Each room is a two-node lumped network: the air node (temperature ``T_i``,
capacity ``C_i``) exchanges heat with a heat-accumulating medium node
(``T_m``, ``C_m``) through the resistance ``R_i`` and with the ambient air
through ``R_a``.  Solar gains enter the air node scaled by ``g_s``, as does
the heating power delivered to the room.  Rooms couple only through the
shared ambient node and the shared heat pump; there is no wall-to-wall
exchange between rooms.

Units: temperatures degC, heat flows W, capacities J/K, resistances K/W,
solar radiation W/m2, electrical power W.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

STEP_SECONDS = 900.0
STEPS_PER_DAY = 96
STEPS_PER_WEEK = 672


class ContractError(ValueError):
    """Raised when a caller violates an interface precondition."""


@dataclass(frozen=True)
class RoomParams:
    """Per-room RC parameters.

    Attributes:
        c_air: heat capacity of the room air node (J/K).
        c_medium: heat capacity of the accumulating medium node (J/K).
        r_medium: resistance between air and medium nodes (K/W).
        r_ambient: resistance between air node and ambient (K/W).
        solar_gain: effective solar aperture (m2); multiplies radiation.
    """

    c_air: float
    c_medium: float
    r_medium: float
    r_ambient: float
    solar_gain: float

    def __post_init__(self):
        for name in ("c_air", "c_medium", "r_medium", "r_ambient", "solar_gain"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ContractError(f"{name} must be finite and > 0, got {value!r}")


#: Reference parameter sets for high and low thermal capacitance buildings.
PARAMETER_SETS: dict[str, RoomParams] = {
    "high": RoomParams(c_air=3407040.0, c_medium=11482560.0,
                       r_medium=0.001197, r_ambient=0.07345, solar_gain=1.138),
    "low": RoomParams(c_air=1703520.0, c_medium=5741280.0,
                      r_medium=0.001197, r_ambient=0.07345, solar_gain=1.138),
}

#: Allowed range for the per-room parameter scaling factors.
MULTIPLIER_RANGE = (0.95, 1.05)


def draw_multipliers(n_rooms: int, seed: int) -> np.ndarray:
    """Draw frozen per-room, per-parameter scaling factors in [0.95, 1.05].

    The generator is seeded and deterministic; the drawn values are meant to
    be written into the run configuration so results stay reproducible even
    if the generator ever changes.
    """
    rng = np.random.default_rng(seed)
    return rng.uniform(*MULTIPLIER_RANGE, size=(n_rooms, 5))


@dataclass(frozen=True)
class BuildingParams:
    """Roomwise parameters of the building.

    ``multipliers`` has shape (n, 5) and scales each room's
    (c_air, c_medium, r_medium, r_ambient, solar_gain) in that order.
    """

    rooms: tuple[RoomParams, ...]
    multipliers: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.rooms) < 1:
            raise ContractError("need at least one room")
        mult = self.multipliers
        if mult is None:
            mult = np.ones((len(self.rooms), 5))
        mult = np.asarray(mult, dtype=float)
        if mult.shape != (len(self.rooms), 5):
            raise ContractError(f"multipliers shape {mult.shape} != ({len(self.rooms)}, 5)")
        lo, hi = MULTIPLIER_RANGE
        if np.any(mult < lo - 1e-12) or np.any(mult > hi + 1e-12):
            raise ContractError("multipliers outside [0.95, 1.05]")
        object.__setattr__(self, "multipliers", mult)

    @classmethod
    def uniform(cls, base: RoomParams, n_rooms: int,
                multipliers: np.ndarray | None = None) -> "BuildingParams":
        """Building with ``n_rooms`` copies of ``base``, optionally perturbed."""
        return cls(rooms=(base,) * n_rooms, multipliers=multipliers)

    @property
    def n(self) -> int:
        return len(self.rooms)

    def effective(self, j: int) -> RoomParams:
        """Room ``j``'s parameters with its scaling factors applied."""
        r, m = self.rooms[j], self.multipliers[j]
        return RoomParams(c_air=r.c_air * m[0], c_medium=r.c_medium * m[1],
                          r_medium=r.r_medium * m[2], r_ambient=r.r_ambient * m[3],
                          solar_gain=r.solar_gain * m[4])


@dataclass(frozen=True)
class BuildingState:
    """Air and medium temperatures for all rooms at one time step."""

    t_air: np.ndarray
    t_medium: np.ndarray
    timestep_index: int = 0

    def __post_init__(self):
        t_air = np.asarray(self.t_air, dtype=float)
        t_medium = np.asarray(self.t_medium, dtype=float)
        if t_air.shape != t_medium.shape or t_air.ndim != 1:
            raise ContractError("t_air and t_medium must be 1-d arrays of equal length")
        for name, arr in (("t_air", t_air), ("t_medium", t_medium)):
            if not np.all(np.isfinite(arr)) or np.any(arr < -50.0) or np.any(arr > 100.0):
                raise ContractError(f"{name} outside the sanity band [-50, 100] degC")
        object.__setattr__(self, "t_air", t_air)
        object.__setattr__(self, "t_medium", t_medium)

    @property
    def n(self) -> int:
        return self.t_air.shape[0]

    def vector(self) -> np.ndarray:
        """Stacked state [t_air..., t_medium...]."""
        return np.concatenate([self.t_air, self.t_medium])

    @classmethod
    def from_vector(cls, x: np.ndarray, timestep_index: int) -> "BuildingState":
        n = x.shape[0] // 2
        return cls(t_air=x[:n].copy(), t_medium=x[n:].copy(),
                   timestep_index=timestep_index)

    @classmethod
    def uniform(cls, n_rooms: int, temperature: float, timestep_index: int = 0) -> "BuildingState":
        return cls(t_air=np.full(n_rooms, float(temperature)),
                   t_medium=np.full(n_rooms, float(temperature)),
                   timestep_index=timestep_index)


@dataclass(frozen=True)
class ExogenousSample:
    """Ambient temperature (degC), solar radiation (W/m2), price (ct/kWh)."""

    t_ambient: float
    solar: float
    price: float = 0.0

    def __post_init__(self):
        if self.solar < 0.0:
            raise ContractError("solar radiation must be >= 0")
        if not np.isfinite(self.price):
            raise ContractError("price must be finite")


@dataclass(frozen=True)
class HeatPumpCurve:
    """COP and maximum electrical power versus ambient temperature.

    Outside the tabulated ambient range both quantities clamp to the nearest
    endpoint; linear interpolation applies in between.  ``supply_temperature``
    documents the constant condenser-side design point of the table.
    """

    breakpoints_t: np.ndarray
    cop_values: np.ndarray
    p_max_values: np.ndarray
    supply_temperature: float = 55.0

    def __post_init__(self):
        t = np.asarray(self.breakpoints_t, dtype=float)
        c = np.asarray(self.cop_values, dtype=float)
        p = np.asarray(self.p_max_values, dtype=float)
        if t.size == 0:
            raise ContractError("heat pump curve needs at least one breakpoint")
        if not (t.shape == c.shape == p.shape):
            raise ContractError("curve arrays must share one shape")
        if np.any(np.diff(t) <= 0):
            raise ContractError("breakpoints must be strictly ascending")
        if np.any(c <= 0) or np.any(p <= 0):
            raise ContractError("COP and P_max must be > 0")
        object.__setattr__(self, "breakpoints_t", t)
        object.__setattr__(self, "cop_values", c)
        object.__setattr__(self, "p_max_values", p)

    def cop(self, t_ambient):
        """Coefficient of performance at ``t_ambient`` (scalar or array)."""
        return np.interp(t_ambient, self.breakpoints_t, self.cop_values)

    def max_power(self, t_ambient):
        """Maximum electrical power (W) at ``t_ambient`` (scalar or array)."""
        return np.interp(t_ambient, self.breakpoints_t, self.p_max_values)

    def max_heat(self, t_ambient):
        """Maximum deliverable heat flow (W): cop * max_power."""
        return self.cop(t_ambient) * self.max_power(t_ambient)


#: Manufacturer curve of the reference air-sourced heat pump (55 degC supply).
DEFAULT_HEAT_PUMP = HeatPumpCurve(
    breakpoints_t=np.array([-10.0, -7.0, 2.0, 7.0, 10.0, 12.0, 15.0, 20.0]),
    cop_values=np.array([1.98, 2.20, 2.71, 3.10, 3.34, 3.55, 3.89, 4.26]),
    p_max_values=np.array([4200.0, 4390.0, 4830.0, 4620.0, 4400.0, 4410.0, 4000.0, 3320.0]),
)

#: Feasible heat pump modulation degrees: off, or 20..100 percent.
MODULATION_MIN = 0.2
#: Raw modulation below this rounds to off, above it snaps to MODULATION_MIN.
MODULATION_SNAP = 0.1


def heat_to_power(q_total: float, cop: float) -> float:
    """Electrical power (W) drawn to deliver ``q_total`` W of heat."""
    if cop <= 0.0:
        raise ContractError(f"COP must be > 0, got {cop!r}")
    if q_total < 0.0:
        raise ContractError("total heat flow must be >= 0")
    return abs(q_total) / cop

def modulation_to_power(chi_mod: float, p_max: float) -> float:
    """Electrical power (W) at modulation degree ``chi_mod``.

    ``chi_mod`` must already lie in the feasible set {0} + [0.2, 1]; callers
    round raw values first (see :func:`round_modulation`).
    """
    if chi_mod != 0.0 and not (MODULATION_MIN <= chi_mod <= 1.0):
        raise ContractError(f"modulation degree {chi_mod!r} outside {{0}} u [0.2, 1]")
    return chi_mod * p_max


def round_modulation(raw: float) -> float:
    """Project a raw modulation in [0, 1] onto the feasible set {0} u [0.2, 1].

    Values in (0, 0.2) snap to the nearest feasible point with the cut at 0.1.
    """
    if raw >= MODULATION_MIN:
        return min(raw, 1.0)
    if raw >= MODULATION_SNAP:
        return MODULATION_MIN
    return 0.0


def room_derivative(state: BuildingState, params: BuildingParams,
                    exo: ExogenousSample, heat_flows: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time derivatives (dT_air/dt, dT_medium/dt) in K/s per room.

    Air node:    c_air * dT_i/dt = (T_m - T_i)/r_medium + (T_a - T_i)/r_ambient
                                   + solar_gain * q_s + Q_h
    Medium node: c_medium * dT_m/dt = (T_i - T_m)/r_medium
    """
    q = np.asarray(heat_flows, dtype=float)
    if q.shape != (params.n,) or state.n != params.n:
        raise ContractError("heat_flows/state dimensions do not match the building")
    if np.any(q < 0.0):
        raise ContractError("heat flows must be >= 0")
    d_air = np.empty(params.n)
    d_medium = np.empty(params.n)
    for j in range(params.n):
        p = params.effective(j)
        flow_medium = (state.t_medium[j] - state.t_air[j]) / p.r_medium
        flow_ambient = (exo.t_ambient - state.t_air[j]) / p.r_ambient
        d_air[j] = (flow_medium + flow_ambient + p.solar_gain * exo.solar + q[j]) / p.c_air
        d_medium[j] = (state.t_air[j] - state.t_medium[j]) / p.r_medium / p.c_medium
    return d_air, d_medium


@dataclass(frozen=True)
class DiscreteDynamics:
    """Exact zero-order-hold discretization of the building.

    State vector is [t_air(rooms), t_medium(rooms)].  ``b_heat`` maps the
    per-room heat flows held over one step, ``b_disturbance`` the columns
    (t_ambient, solar).
    """

    a: np.ndarray
    b_heat: np.ndarray
    b_disturbance: np.ndarray
    dt: float
    n: int

    def step_vector(self, x: np.ndarray, heat_flows: np.ndarray,
                    t_ambient: float, solar: float) -> np.ndarray:
        """One step of the raw state vector; no validation (hot path)."""
        return self.a @ x + self.b_heat @ heat_flows + self.b_disturbance @ (t_ambient, solar)


def discretize(params: BuildingParams, dt: float = STEP_SECONDS) -> DiscreteDynamics:
    """Exact ZOH discretization via the matrix exponential of the augmented system.

    Inputs (heat flows, ambient temperature, solar radiation) are assumed
    piecewise constant over each step, so chaining two dt/2 steps reproduces
    one dt step to machine precision.
    """
    if dt <= 0.0:
        raise ContractError("dt must be > 0")
    n = params.n
    m = 2 * n + n + 2
    gen = np.zeros((m, m))
    for j in range(n):
        p = params.effective(j)
        g_medium = 1.0 / p.r_medium
        g_ambient = 1.0 / p.r_ambient
        gen[j, j] = -(g_medium + g_ambient) / p.c_air
        gen[j, n + j] = g_medium / p.c_air
        gen[n + j, j] = g_medium / p.c_medium
        gen[n + j, n + j] = -g_medium / p.c_medium
        gen[j, 2 * n + j] = 1.0 / p.c_air
        gen[j, 3 * n] = g_ambient / p.c_air
        gen[j, 3 * n + 1] = p.solar_gain / p.c_air
    phi = expm(gen * dt)
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError(
            "matrix exponential produced non-finite entries; check capacities "
            f"and resistances (dt={dt}, n={n})")
    a = phi[:2 * n, :2 * n]
    if np.max(np.abs(np.linalg.eigvals(a))) >= 1.0 + 1e-9:
        raise FloatingPointError("discretized building is not passive (rho(A) >= 1)")
    return DiscreteDynamics(a=a, b_heat=phi[:2 * n, 2 * n:3 * n],
                            b_disturbance=phi[:2 * n, 3 * n:3 * n + 2], dt=dt, n=n)


def step(dynamics: DiscreteDynamics, state: BuildingState, exo: ExogenousSample,
         heat_flows: np.ndarray) -> BuildingState:
    """Advance the building one step under constant inputs."""
    q = np.asarray(heat_flows, dtype=float)
    if q.shape != (dynamics.n,) or state.n != dynamics.n:
        raise ContractError("heat_flows/state dimensions do not match the dynamics")
    x = dynamics.step_vector(state.vector(), q, exo.t_ambient, exo.solar)
    return BuildingState.from_vector(x, state.timestep_index + 1)


def steady_state(params: RoomParams, exo: ExogenousSample, q_heat: float) -> float:
    """Analytic resting air temperature under constant inputs.

    At rest both nodes share one temperature and the ambient branch carries
    the whole load: T = T_a + r_ambient * (solar_gain * q_s + Q_h).
    """
    return exo.t_ambient + params.r_ambient * (params.solar_gain * exo.solar + q_heat)
