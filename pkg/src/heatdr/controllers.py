"""Model-free heating controllers: hysteresis, price control, price-storage control.

All three act once per time slot on the temperatures measured at the end of
the previous slot.  The price-reactive controllers rank the current price
within the day's 24 hourly prices (rebuilt every midnight) and translate the
rank, and for price-storage control also the rooms' thermal state of charge,
into a heat pump modulation command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (ContractError, HeatPumpCurve, heat_to_power,
                    modulation_to_power, round_modulation)


@dataclass(frozen=True)
class PriceEcdf:
    """Empirical distribution of one day's 24 hourly prices.

    ``evaluate(p)`` returns the share of day prices less than or equal to
    ``p``, so the day's maximum maps to 1 and anything below the minimum
    to 0.
    """

    day_prices: np.ndarray

    def __post_init__(self):
        prices = np.sort(np.asarray(self.day_prices, dtype=float))
        if prices.shape != (24,):
            raise ContractError(f"need exactly 24 hourly prices, got {prices.shape}")
        object.__setattr__(self, "day_prices", prices)

    def evaluate(self, price: float) -> float:
        return np.searchsorted(self.day_prices, price, side="right") / 24.0


def ecdf_build(next_day_hourly_prices) -> PriceEcdf:
    """Distribution of the coming day's prices; rebuilt at each midnight."""
    return PriceEcdf(day_prices=np.asarray(next_day_hourly_prices, dtype=float))


def price_factor(ecdf: PriceEcdf, price: float) -> float:
    """Heating tendency from the price rank: 1 at the day's cheapest hour, 0 at the dearest."""
    return 1.0 - ecdf.evaluate(price)


def state_of_charge(t_previous: float, bounds: tuple[float, float]) -> float:
    """Normalized position of a room temperature inside its band, clamped to [0, 1]."""
    lower, upper = bounds
    if lower >= upper:
        raise ContractError("lower bound must stay below upper bound")
    return float(np.clip((t_previous - lower) / (upper - lower), 0.0, 1.0))


def storage_factor(charges) -> float:
    """One minus the mean state of charge: 1 when all rooms are cold, 0 when full."""
    charges = np.asarray(charges, dtype=float)
    if charges.size < 1:
        raise ContractError("need at least one room")
    return 1.0 - float(charges.mean())


def psc_modulation(chi_price: float, chi_storage: float) -> float:
    """Modulation command: product of the two factors, projected onto {0} u [0.2, 1]."""
    return round_modulation(chi_price * chi_storage)


def deficits(t_previous: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Per-room shortfall below the lower bound (K, >= 0)."""
    return np.maximum(0.0, np.asarray(lower, float) - np.asarray(t_previous, float))


def distribute(q_total: float, room_deficits: np.ndarray) -> np.ndarray:
    """Split a total heat flow over rooms proportionally to their deficits.

    Rooms without any deficit share equally when no room is short; the split
    conserves ``q_total`` exactly.
    """
    if q_total < 0.0:
        raise ContractError("total heat flow must be >= 0")
    d = np.asarray(room_deficits, dtype=float)
    total = d.sum()
    if total > 0.0:
        return q_total * d / total
    return np.full(d.shape, q_total / d.size)


@dataclass(frozen=True)
class ControllerContext:
    """Everything a heuristic controller may observe in one slot.

    ``t_previous`` holds the room air temperatures measured at the end of
    the previous slot; bounds and price belong to the current slot.
    """

    t_previous: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    price: float
    t_ambient: float
    pump: HeatPumpCurve
    dt: float = 900.0

    def __post_init__(self):
        t = np.asarray(self.t_previous, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        if not (t.shape == lo.shape == up.shape) or t.ndim != 1:
            raise ContractError("context arrays must be 1-d and share one shape")
        object.__setattr__(self, "t_previous", t)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def n(self) -> int:
        return self.t_previous.shape[0]


@dataclass(frozen=True)
class ControlAction:
    """Per-room heat flows with the derived pump command.

    ``chi_mod`` is the commanded modulation degree; ``p_el`` is the
    electrical power consistent with the heat actually delivered (the two
    differ only when a controller withholds heat from saturated rooms).
    ``info`` carries controller diagnostics for the trace.
    """

    heat_flows: np.ndarray
    chi_mod: float
    p_el: float
    info: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, n_rooms: int, **info) -> "ControlAction":
        return cls(heat_flows=np.zeros(n_rooms), chi_mod=0.0, p_el=0.0, info=info)


class HysteresisController:
    """Two-point control: heat a room from its lower bound up to its upper bound.

    A room's flag turns on when its temperature falls to the lower bound and
    off when it reaches the upper bound; in between the flag is retained.
    Whenever any flag is on the pump runs at full power and the available
    heat is split equally among the flagged rooms.
    """

    name = "hysteresis"

    def __init__(self, n_rooms: int):
        self.flags = np.zeros(n_rooms, dtype=bool)

    def reset(self) -> None:
        self.flags[:] = False

    def begin_day(self, day_prices) -> None:
        pass  # price-blind

    def step(self, ctx: ControllerContext) -> ControlAction:
        self.flags = np.where(ctx.t_previous <= ctx.lower, True,
                              np.where(ctx.t_previous >= ctx.upper, False, self.flags))
        if not self.flags.any():
            return ControlAction.zero(ctx.n)
        p_el = modulation_to_power(1.0, ctx.pump.max_power(ctx.t_ambient))
        q_total = p_el * ctx.pump.cop(ctx.t_ambient)
        flows = np.zeros(ctx.n)
        flows[self.flags] = q_total / self.flags.sum()
        return ControlAction(heat_flows=flows, chi_mod=1.0, p_el=p_el)


class _PriceBasedController:
    """Shared daily-distribution plumbing of the price-reactive controllers."""

    def __init__(self, n_rooms: int):
        self.n_rooms = n_rooms
        self.ecdf: PriceEcdf | None = None

    def reset(self) -> None:
        self.ecdf = None

    def begin_day(self, day_prices) -> None:
        self.ecdf = ecdf_build(day_prices)

    def _chi_price(self, ctx: ControllerContext) -> float:
        if self.ecdf is None:
            raise ContractError("begin_day() must run before the first step of a day")
        return price_factor(self.ecdf, ctx.price)


class PriceController(_PriceBasedController):
    """Price-rank control: modulation follows the price factor alone.

    Rooms already at or above their upper bound are excluded and their share
    of the heat is withheld, which keeps the building from heating past the
    band; with every room saturated the action is zero.
    """

    name = "pc"

    def step(self, ctx: ControllerContext) -> ControlAction:
        chi_p = self._chi_price(ctx)
        chi_mod = round_modulation(chi_p)
        eligible = ctx.t_previous < ctx.upper
        if chi_mod == 0.0 or not eligible.any():
            return ControlAction.zero(ctx.n, chi_p=chi_p)
        cop = ctx.pump.cop(ctx.t_ambient)
        q_total = modulation_to_power(chi_mod, ctx.pump.max_power(ctx.t_ambient)) * cop
        flows = distribute(q_total, deficits(ctx.t_previous, ctx.lower))
        flows[~eligible] = 0.0
        return ControlAction(heat_flows=flows, chi_mod=chi_mod,
                             p_el=heat_to_power(flows.sum(), cop),
                             info={"chi_p": chi_p})


class PriceStorageController(_PriceBasedController):
    """Price-storage control: modulation from price rank times thermal headroom.

    Each slot: evaluate the price factor, average the rooms' states of
    charge into the storage factor, multiply both into the modulation
    command, and distribute the resulting heat to the rooms with the largest
    shortfall (equally when no room is short).
    """

    name = "psc"

    def step(self, ctx: ControllerContext) -> ControlAction:
        chi_p = self._chi_price(ctx)
        charges = [state_of_charge(ctx.t_previous[j], (ctx.lower[j], ctx.upper[j]))
                   for j in range(ctx.n)]
        chi_s = storage_factor(charges)
        chi_mod = psc_modulation(chi_p, chi_s)
        if chi_mod == 0.0:
            return ControlAction.zero(ctx.n, chi_p=chi_p, chi_s=chi_s)
        cop = ctx.pump.cop(ctx.t_ambient)
        p_el = modulation_to_power(chi_mod, ctx.pump.max_power(ctx.t_ambient))
        flows = distribute(p_el * cop, deficits(ctx.t_previous, ctx.lower))
        return ControlAction(heat_flows=flows, chi_mod=chi_mod, p_el=p_el,
                             info={"chi_p": chi_p, "chi_s": chi_s})


HEURISTIC_CONTROLLERS = {
    "hysteresis": HysteresisController,
    "pc": PriceController,
    "psc": PriceStorageController,
}
