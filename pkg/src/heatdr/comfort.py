"""Occupant-satisfaction temperature bands and comfort schedules.

Satisfaction levels map to fixed air-temperature bands (EN-16798 winter
categories).  A schedule assigns each room one level per daily period;
outside all listed periods the room is in standby.  Schedules repeat every
day over the whole horizon.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import ContractError


class SatisfactionLevel(enum.Enum):
    """Comfort categories, narrowest to widest band."""

    I = "I"
    II = "II"
    III = "III"
    OFF = "off"


#: Temperature band (lower, upper) in degC per satisfaction level.
LEVEL_BOUNDS: dict[SatisfactionLevel, tuple[float, float]] = {
    SatisfactionLevel.I: (22.6, 24.0),
    SatisfactionLevel.II: (21.5, 25.0),
    SatisfactionLevel.III: (20.7, 25.8),
    SatisfactionLevel.OFF: (16.0, 30.0),
}


def level_bounds(level: SatisfactionLevel) -> tuple[float, float]:
    return LEVEL_BOUNDS[level]


@dataclass(frozen=True)
class DailyPeriod:
    """Half-open daily window [start_minute, end_minute) at one level."""

    start_minute: int
    end_minute: int
    level: SatisfactionLevel

    def __post_init__(self):
        if not (0 <= self.start_minute < self.end_minute <= 24 * 60):
            raise ContractError(f"invalid period [{self.start_minute}, {self.end_minute})")


@dataclass(frozen=True)
class ModeSchedule:
    """Per-room daily period lists; standby applies outside listed periods."""

    room_periods: tuple[tuple[DailyPeriod, ...], ...]

    def __post_init__(self):
        for j, periods in enumerate(self.room_periods):
            ordered = sorted(periods, key=lambda p: p.start_minute)
            for a, b in zip(ordered, ordered[1:]):
                if b.start_minute < a.end_minute:
                    raise ContractError(f"room {j}: overlapping periods")

    @property
    def n(self) -> int:
        return len(self.room_periods)

    def level_at(self, room: int, minute_of_day: int) -> SatisfactionLevel:
        for p in self.room_periods[room]:
            if p.start_minute <= minute_of_day < p.end_minute:
                return p.level
        return SatisfactionLevel.OFF


@dataclass(frozen=True)
class BoundsSchedule:
    """Per-step, per-room comfort band arrays over the whole horizon.

    ``lower`` and ``upper`` have shape (steps, rooms); entry k applies to the
    slot [t_k, t_{k+1}).
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        if lo.shape != up.shape or lo.ndim != 2:
            raise ContractError("lower/upper must be 2-d arrays of one shape")
        if np.any(lo >= up):
            raise ContractError("lower bound must stay below upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def steps(self) -> int:
        return self.lower.shape[0]

    @property
    def n(self) -> int:
        return self.lower.shape[1]


def schedule_to_bounds(schedule: ModeSchedule, horizon_steps: int,
                       dt: float = 900.0) -> BoundsSchedule:
    """Expand a daily mode schedule onto the simulation grid."""
    if dt <= 0 or (24 * 3600) % int(dt) != 0:
        raise ContractError("dt must divide one day")
    steps_per_day = int(24 * 3600 / dt)
    n = schedule.n
    day_lower = np.empty((steps_per_day, n))
    day_upper = np.empty((steps_per_day, n))
    for k in range(steps_per_day):
        minute = int(k * dt // 60)
        for j in range(n):
            lo, up = LEVEL_BOUNDS[schedule.level_at(j, minute)]
            day_lower[k, j] = lo
            day_upper[k, j] = up
    reps = -(-horizon_steps // steps_per_day)
    return BoundsSchedule(lower=np.tile(day_lower, (reps, 1))[:horizon_steps],
                          upper=np.tile(day_upper, (reps, 1))[:horizon_steps])


def base_schedule(n_rooms: int = 5) -> ModeSchedule:
    """Identical comfort window 08:00-17:00 in every room, standby otherwise."""
    comfort = DailyPeriod(8 * 60, 17 * 60, SatisfactionLevel.I)
    return ModeSchedule(room_periods=((comfort,),) * n_rooms)


_ADAPTIVE_LEVELS = {
    # (start hour, end hour) -> levels for rooms 1..5
    (8, 12): "I I III III III",
    (12, 13): "III III III I III",
    (13, 17): "I III III III III",
}


def adaptive_schedule() -> ModeSchedule:
    """Room-individual schedule for two offices, storage, kitchen, bathroom.

    Office 1 (room 1) is in comfort all working day except the lunch hour,
    office 2 (room 2) mornings only, the kitchen (room 4) over lunch; the
    storage (room 3) and bathroom (room 5) run in eco mode 08:00-17:00.
    """
    rooms: list[list[DailyPeriod]] = [[] for _ in range(5)]
    for (start, end), levels in _ADAPTIVE_LEVELS.items():
        for j, name in enumerate(levels.split()):
            rooms[j].append(DailyPeriod(start * 60, end * 60, SatisfactionLevel[name]))
    return ModeSchedule(room_periods=tuple(tuple(p) for p in rooms))


def build_base_scenario(n_rooms: int, horizon_steps: int, dt: float = 900.0) -> BoundsSchedule:
    """Bounds for the uniform scenario (any room count; same band everywhere)."""
    return schedule_to_bounds(base_schedule(n_rooms), horizon_steps, dt)


def build_adaptive_scenario(horizon_steps: int, dt: float = 900.0) -> BoundsSchedule:
    """Bounds for the room-individual scenario; requires exactly five rooms."""
    return schedule_to_bounds(adaptive_schedule(), horizon_steps, dt)


SCENARIOS = ("base", "adaptive")


def build_scenario(name: str, n_rooms: int, horizon_steps: int,
                   dt: float = 900.0) -> BoundsSchedule:
    """Bounds schedule for a scenario selected by name."""
    if name == "base":
        return build_base_scenario(n_rooms, horizon_steps, dt)
    if name == "adaptive":
        if n_rooms != 5:
            raise ContractError("the adaptive scenario is defined for exactly 5 rooms")
        return build_adaptive_scenario(horizon_steps, dt)
    raise ContractError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


def schedule_from_config(rooms_config: list[list[dict]]) -> ModeSchedule:
    """Build a custom schedule from configuration data.

    ``rooms_config`` holds one list per room; each entry is a mapping with
    keys ``start`` and ``end`` ("HH:MM" strings or minutes) and ``level``.
    """
    def to_minute(value) -> int:
        if isinstance(value, str):
            hours, minutes = value.split(":")
            return int(hours) * 60 + int(minutes)
        return int(value)

    rooms = []
    for periods in rooms_config:
        rooms.append(tuple(
            DailyPeriod(to_minute(p["start"]), to_minute(p["end"]),
                        SatisfactionLevel(str(p["level"])))
            for p in periods))
    return ModeSchedule(room_periods=tuple(rooms))


def violation(t_air: float, bounds: tuple[float, float]) -> float:
    """Two-sided band violation in K: zero inside, distance to band outside."""
    lower, upper = bounds
    if lower >= upper:
        raise ContractError("lower bound must stay below upper bound")
    return max(0.0, lower - t_air) + max(0.0, t_air - upper)


def underheating(t_air: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Per-room shortfall below the lower bound (K, >= 0).

    This is the discomfort measure the benchmark KPIs aggregate; overheating
    is tracked separately via :func:`violation`.
    """
    return np.maximum(0.0, np.asarray(lower, float) - np.asarray(t_air, float))
