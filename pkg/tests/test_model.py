"""Building model and heat pump unit tests."""

import numpy as np
import pytest

from heatdr.model import (DEFAULT_HEAT_PUMP, PARAMETER_SETS, BuildingParams,
                          BuildingState, ContractError, ExogenousSample,
                          discretize, draw_multipliers, heat_to_power,
                          modulation_to_power, room_derivative,
                          round_modulation, steady_state, step)

HIGH = PARAMETER_SETS["high"]
LOW = PARAMETER_SETS["low"]


def single_room(params=HIGH):
    return BuildingParams.uniform(params, 1)


class TestRoomDerivative:
    def test_equilibrium_is_flat(self):
        params = BuildingParams.uniform(HIGH, 3)
        state = BuildingState.uniform(3, 20.0)
        exo = ExogenousSample(t_ambient=20.0, solar=0.0)
        d_air, d_medium = room_derivative(state, params, exo, np.zeros(3))
        assert np.allclose(d_air, 0.0) and np.allclose(d_medium, 0.0)

    def test_pure_heating_term(self):
        # Q_h = 1e-3 * c_air with no other gradients -> dT_air/dt = 1e-3 K/s
        params = single_room()
        state = BuildingState.uniform(1, 20.0)
        exo = ExogenousSample(t_ambient=20.0, solar=0.0)
        d_air, d_medium = room_derivative(state, params, exo,
                                          np.array([1e-3 * HIGH.c_air]))
        assert d_air[0] == pytest.approx(1e-3, rel=1e-12)
        assert d_medium[0] == 0.0

    def test_hand_evaluated_mixed_case(self):
        # high-capacitance room, T_air 20, T_medium 22, T_a 0, q_s 100, Q_h 1000;
        # expected values computed by hand from the two node balances
        params = single_room()
        state = BuildingState(t_air=np.array([20.0]), t_medium=np.array([22.0]))
        exo = ExogenousSample(t_ambient=0.0, solar=100.0)
        d_air, d_medium = room_derivative(state, params, exo, np.array([1000.0]))
        assert d_air[0] == pytest.approx(7.37399531118837e-04, rel=1e-12)
        assert d_medium[0] == pytest.approx(-1.45511434393283e-04, rel=1e-12)

    def test_dimension_mismatch_rejected(self):
        params = BuildingParams.uniform(HIGH, 2)
        state = BuildingState.uniform(2, 20.0)
        exo = ExogenousSample(t_ambient=0.0, solar=0.0)
        with pytest.raises(ContractError):
            room_derivative(state, params, exo, np.zeros(3))


class TestDiscretize:
    def test_equilibrium_preserved(self):
        dyn = discretize(BuildingParams.uniform(HIGH, 2), 900.0)
        state = BuildingState.uniform(2, 15.0)
        exo = ExogenousSample(t_ambient=15.0, solar=0.0)
        nxt = step(dyn, state, exo, np.zeros(2))
        assert np.allclose(nxt.vector(), state.vector(), atol=1e-12)

    @pytest.mark.parametrize("params", [HIGH, LOW], ids=["high", "low"])
    def test_free_response_matches_fine_euler(self, params):
        # independent oracle: forward Euler at 0.9 s over 24 h
        building = single_room(params)
        dyn = discretize(building, 900.0)
        exo = ExogenousSample(t_ambient=0.0, solar=0.0)
        x = np.array([20.0, 20.0])
        for _ in range(96):
            x = dyn.step_vector(x, np.zeros(1), 0.0, 0.0)
        y = np.array([20.0, 20.0])
        fine = 0.9
        p = building.effective(0)
        for _ in range(int(24 * 3600 / fine)):
            d_air = ((y[1] - y[0]) / p.r_medium + (0.0 - y[0]) / p.r_ambient) / p.c_air
            d_medium = (y[0] - y[1]) / p.r_medium / p.c_medium
            y = y + fine * np.array([d_air, d_medium])
        assert np.max(np.abs(x - y)) < 1e-3

    def test_semigroup_property(self):
        building = BuildingParams.uniform(HIGH, 2,
                                          multipliers=draw_multipliers(2, 3))
        full = discretize(building, 900.0)
        half = discretize(building, 450.0)
        x0 = np.array([20.0, 21.0, 19.5, 20.5])
        u = np.array([800.0, 0.0])
        one = full.step_vector(x0, u, -2.0, 50.0)
        two = half.step_vector(half.step_vector(x0, u, -2.0, 50.0), u, -2.0, 50.0)
        assert np.max(np.abs(one - two)) < 1e-9

    def test_invalid_dt_rejected(self):
        with pytest.raises(ContractError):
            discretize(single_room(), 0.0)


class TestStep:
    def test_constant_heating_converges_to_steady_state(self):
        # fixed-point iteration oracle: the discrete map's fixed point equals
        # the analytic resting temperature
        building = single_room()
        dyn = discretize(building, 900.0)
        exo = ExogenousSample(t_ambient=5.0, solar=0.0)
        q = np.array([200.0])
        target = steady_state(building.effective(0), exo, 200.0)
        b = dyn.b_heat @ q + dyn.b_disturbance @ (5.0, 0.0)
        fixed = np.linalg.solve(np.eye(2) - dyn.a, b)
        assert fixed == pytest.approx([target, target], rel=1e-9)

    def test_superposition(self):
        building = BuildingParams.uniform(HIGH, 2)
        dyn = discretize(building, 900.0)
        x = np.array([20.0, 21.0, 20.5, 20.8])
        u1 = np.array([500.0, 100.0])
        u2 = np.array([300.0, 900.0])
        lhs = (dyn.step_vector(x, u1 + u2, 0.0, 0.0)
               - dyn.step_vector(x, u1, 0.0, 0.0))
        rhs = (dyn.step_vector(np.zeros(4), u2, 0.0, 0.0)
               - dyn.step_vector(np.zeros(4), np.zeros(2), 0.0, 0.0))
        assert np.allclose(lhs, rhs, atol=1e-9)

    def test_monotone_in_heat(self):
        rng = np.random.default_rng(11)
        building = BuildingParams.uniform(HIGH, 3,
                                          multipliers=draw_multipliers(3, 5))
        dyn = discretize(building, 900.0)
        for _ in range(200):
            x = rng.uniform(15, 25, 6)
            u = rng.uniform(0, 3000, 3)
            extra = u.copy()
            j = rng.integers(3)
            extra[j] += rng.uniform(0, 2000)
            base = dyn.step_vector(x, u, 0.0, 0.0)
            more = dyn.step_vector(x, extra, 0.0, 0.0)
            assert more[j] >= base[j]

    def test_passivity_contraction(self):
        rng = np.random.default_rng(12)
        building = BuildingParams.uniform(LOW, 2)
        dyn = discretize(building, 900.0)
        for _ in range(50):
            t_a = rng.uniform(-10, 10)
            x = rng.uniform(-5, 35, 4)
            gap = np.max(np.abs(x - t_a))
            for _ in range(5):
                x = dyn.step_vector(x, np.zeros(2), t_a, 0.0)
                new_gap = np.max(np.abs(x - t_a))
                assert new_gap <= gap + 1e-12
                gap = new_gap

    def test_timestep_index_increments(self):
        dyn = discretize(single_room(), 900.0)
        state = BuildingState.uniform(1, 20.0, timestep_index=4)
        nxt = step(dyn, state, ExogenousSample(0.0, 0.0), np.zeros(1))
        assert nxt.timestep_index == 5


class TestSteadyState:
    def test_no_load_rests_at_ambient(self):
        assert steady_state(HIGH, ExogenousSample(t_ambient=7.0, solar=0.0), 0.0) == 7.0

    def test_hundred_watt_offset(self):
        # r_ambient = 0.07345 K/W -> 100 W raises the room 7.345 K
        value = steady_state(HIGH, ExogenousSample(t_ambient=0.0, solar=0.0), 100.0)
        assert value == pytest.approx(7.345, abs=1e-12)

    def test_linear_in_load(self):
        exo = ExogenousSample(t_ambient=3.0, solar=40.0)
        one = steady_state(HIGH, exo, 250.0) - 3.0
        two = steady_state(HIGH, ExogenousSample(3.0, 80.0), 500.0) - 3.0
        assert two == pytest.approx(2 * one, rel=1e-12)


class TestHeatPump:
    def test_cop_at_breakpoints(self):
        for t, expected in [(-10.0, 1.98), (2.0, 2.71), (7.0, 3.10), (20.0, 4.26)]:
            assert DEFAULT_HEAT_PUMP.cop(t) == pytest.approx(expected)

    def test_cop_interpolates_midpoint(self):
        assert DEFAULT_HEAT_PUMP.cop(-8.5) == pytest.approx(2.09)

    def test_cop_clamps_outside_range(self):
        assert DEFAULT_HEAT_PUMP.cop(25.0) == pytest.approx(4.26)
        assert DEFAULT_HEAT_PUMP.cop(-20.0) == pytest.approx(1.98)

    def test_max_power_values(self):
        assert DEFAULT_HEAT_PUMP.max_power(2.0) == pytest.approx(4830.0)
        assert DEFAULT_HEAT_PUMP.max_power(-8.5) == pytest.approx(4295.0)
        assert DEFAULT_HEAT_PUMP.max_power(-20.0) == pytest.approx(4200.0)

    def test_heat_to_power(self):
        assert heat_to_power(0.0, 3.0) == 0.0
        assert heat_to_power(3100.0, 3.10) == pytest.approx(1000.0)
        assert heat_to_power(4200.0 * 1.98, DEFAULT_HEAT_PUMP.cop(-10.0)) \
            == pytest.approx(4200.0)

    def test_heat_to_power_rejects_bad_cop(self):
        with pytest.raises(ContractError):
            heat_to_power(100.0, 0.0)

    def test_modulation_to_power(self):
        assert modulation_to_power(0.0, 4620.0) == 0.0
        assert modulation_to_power(1.0, DEFAULT_HEAT_PUMP.max_power(7.0)) \
            == pytest.approx(4620.0)
        assert modulation_to_power(0.5, 4400.0) == pytest.approx(2200.0)

    def test_modulation_rejects_dead_band(self):
        with pytest.raises(ContractError):
            modulation_to_power(0.1, 4000.0)
        with pytest.raises(ContractError):
            modulation_to_power(1.2, 4000.0)

    def test_round_modulation(self):
        assert round_modulation(0.05) == 0.0
        assert round_modulation(0.15) == 0.2
        assert round_modulation(0.3) == 0.3
        assert round_modulation(1.4) == 1.0

    def test_envelope_consistency(self):
        # full modulation converted back through the COP reproduces max_heat
        for t_a in (-10.0, -3.0, 4.5, 12.0):
            p_el = modulation_to_power(1.0, DEFAULT_HEAT_PUMP.max_power(t_a))
            assert p_el * DEFAULT_HEAT_PUMP.cop(t_a) \
                == pytest.approx(DEFAULT_HEAT_PUMP.max_heat(t_a))


class TestValidation:
    def test_multipliers_range_enforced(self):
        with pytest.raises(ContractError):
            BuildingParams.uniform(HIGH, 2, multipliers=np.full((2, 5), 1.2))

    def test_draw_multipliers_deterministic(self):
        assert np.array_equal(draw_multipliers(5, 7), draw_multipliers(5, 7))
        m = draw_multipliers(5, 7)
        assert m.shape == (5, 5)
        assert np.all(m >= 0.95) and np.all(m <= 1.05)

    def test_state_sanity_band(self):
        with pytest.raises(ContractError):
            BuildingState(t_air=np.array([150.0]), t_medium=np.array([20.0]))

    def test_negative_solar_rejected(self):
        with pytest.raises(ContractError):
            ExogenousSample(t_ambient=0.0, solar=-1.0)

    def test_negative_price_accepted(self):
        assert ExogenousSample(t_ambient=0.0, solar=0.0, price=-1.5).price == -1.5

    def test_room_params_positive(self):
        with pytest.raises(ContractError):
            RoomParams = type(HIGH)
            RoomParams(c_air=-1.0, c_medium=1.0, r_medium=1.0,
                       r_ambient=1.0, solar_gain=1.0)
