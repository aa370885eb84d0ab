"""Multi-zone thermal building benchmark for demand-response heating control.

The package couples an exactly discretized multi-room RC building model and
an air-sourced heat pump with four interchangeable controllers (hysteresis
two-point, price control, price-storage control, receding-horizon planner)
and a closed-loop runner that scores weekly electricity cost against
occupant comfort under a day-ahead tariff.
"""

from .model import (
    DEFAULT_HEAT_PUMP,
    MODULATION_MIN,
    PARAMETER_SETS,
    BuildingParams,
    BuildingState,
    ContractError,
    DiscreteDynamics,
    ExogenousSample,
    HeatPumpCurve,
    RoomParams,
    discretize,
    draw_multipliers,
    heat_to_power,
    modulation_to_power,
    room_derivative,
    round_modulation,
    steady_state,
    step,
)
from .comfort import (
    BoundsSchedule,
    ModeSchedule,
    SatisfactionLevel,
    build_adaptive_scenario,
    build_base_scenario,
    build_scenario,
    violation,
)
from .controllers import (
    ControlAction,
    ControllerContext,
    HysteresisController,
    PriceController,
    PriceEcdf,
    PriceStorageController,
    deficits,
    distribute,
    ecdf_build,
    price_factor,
    psc_modulation,
    state_of_charge,
    storage_factor,
)
from .mpc import MpcConfig, MpcController, MpcSolution, PredictionCache, build_problem, solve
from .data import (
    AlignedSeries,
    DataError,
    PriceSeries,
    WeatherSeries,
    align,
    generate_synthetic,
    load_prices,
    load_weather,
    save_prices,
    save_weather,
)
from .simulation import (
    RunConfig,
    SimulationTrace,
    compare_campaign,
    kpi_costs,
    kpi_discomfort,
    run_closed_loop,
    run_summary,
    weekly_results,
)

__version__ = "0.1.0"
