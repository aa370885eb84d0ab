"""Series ingestion, alignment, and synthetic generation tests."""

from datetime import datetime

import numpy as np
import pytest

from heatdr.data import (DataError, PriceSeries, WeatherSeries, align,
                         generate_synthetic, load_prices, load_weather,
                         save_prices, save_weather, split_aligned)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadWeather:
    def test_accepts_quarter_hour_rows(self, tmp_path):
        p = write(tmp_path / "w.csv",
                  "timestamp,t_ambient_c,solar_wm2\n"
                  "2022-11-28T00:00:00,2.0,0.0\n"
                  "2022-11-28T00:15:00,2.1,0.0\n")
        series = load_weather(p)
        assert len(series) == 2
        assert series.t_ambient[1] == 2.1

    def test_duplicate_timestamp_names_line(self, tmp_path):
        p = write(tmp_path / "w.csv",
                  "timestamp,t_ambient_c,solar_wm2\n"
                  "2022-11-28T00:00:00,2.0,0.0\n"
                  "2022-11-28T00:00:00,2.1,0.0\n")
        with pytest.raises(DataError, match="line 3.*duplicate"):
            load_weather(p)

    def test_gap_reports_missing_timestamp(self, tmp_path):
        p = write(tmp_path / "w.csv",
                  "timestamp,t_ambient_c,solar_wm2\n"
                  "2022-11-28T00:00:00,2.0,0.0\n"
                  "2022-11-28T00:30:00,2.1,0.0\n")
        with pytest.raises(DataError, match="missing 2022-11-28T00:15:00"):
            load_weather(p)

    def test_malformed_number_names_line(self, tmp_path):
        p = write(tmp_path / "w.csv",
                  "timestamp,t_ambient_c,solar_wm2\n"
                  "2022-11-28T00:00:00,two,0.0\n")
        with pytest.raises(DataError, match="line 2"):
            load_weather(p)

    def test_wrong_header_rejected(self, tmp_path):
        p = write(tmp_path / "w.csv", "time,temp,sun\n2022-11-28T00:00:00,2,0\n")
        with pytest.raises(DataError, match="header"):
            load_weather(p)

    def test_negative_solar_rejected(self, tmp_path):
        p = write(tmp_path / "w.csv",
                  "timestamp,t_ambient_c,solar_wm2\n"
                  "2022-11-28T00:00:00,2.0,-5.0\n")
        with pytest.raises(DataError, match="negative solar"):
            load_weather(p)


class TestLoadPrices:
    def test_accepts_aligned_hours(self, tmp_path):
        p = write(tmp_path / "p.csv",
                  "timestamp,price_ct_kwh\n"
                  "2022-11-28T00:00:00,15.0\n"
                  "2022-11-28T01:00:00,14.5\n")
        series = load_prices(p)
        assert series.price == pytest.approx([15.0, 14.5])

    def test_missing_hour_is_gap(self, tmp_path):
        p = write(tmp_path / "p.csv",
                  "timestamp,price_ct_kwh\n"
                  "2022-11-28T00:00:00,15.0\n"
                  "2022-11-28T02:00:00,14.5\n")
        with pytest.raises(DataError, match="gap"):
            load_prices(p)

    def test_negative_price_accepted(self, tmp_path):
        p = write(tmp_path / "p.csv",
                  "timestamp,price_ct_kwh\n"
                  "2022-11-28T00:00:00,-1.5\n")
        assert load_prices(p).price[0] == -1.5

    def test_off_hour_start_rejected(self, tmp_path):
        p = write(tmp_path / "p.csv",
                  "timestamp,price_ct_kwh\n"
                  "2022-11-28T00:30:00,15.0\n")
        with pytest.raises(DataError, match="whole hour"):
            load_prices(p)


class TestAlign:
    def series_pair(self, weeks=1, weather_lead_hours=0):
        aligned = generate_synthetic(weeks, seed=1)
        weather, prices = split_aligned(aligned)
        if weather_lead_hours:
            k = weather_lead_hours * 4
            weather = WeatherSeries(start=weather.timestamp(k),
                                    t_ambient=weather.t_ambient[k:],
                                    solar=weather.solar[k:])
        return weather, prices

    def test_price_held_within_hour(self):
        weather, prices = self.series_pair(2)
        aligned = align(weather, prices)
        held = aligned.price.reshape(-1, 4)
        assert np.all(held == held[:, :1])

    def test_idempotent_on_aligned_data(self):
        original = generate_synthetic(1, seed=5)
        roundtrip = align(*split_aligned(original))
        assert roundtrip.start == original.start
        assert np.array_equal(roundtrip.price, original.price)
        assert np.array_equal(roundtrip.t_ambient, original.t_ambient)

    def test_truncates_to_whole_weeks(self):
        aligned = generate_synthetic(2, seed=2)
        weather, prices = split_aligned(aligned)
        # drop the last day of prices: only one whole week remains
        prices = PriceSeries(start=prices.start, price=prices.price[:-24])
        shorter = align(weather, prices)
        assert shorter.weeks == 1

    def test_empty_overlap_is_error(self):
        weather, prices = self.series_pair(1)
        late = PriceSeries(start=datetime(2030, 1, 1), price=prices.price)
        with pytest.raises(DataError, match="overlap"):
            align(weather, late)

    def test_misaligned_start_moves_to_midnight(self):
        weather, prices = self.series_pair(2, weather_lead_hours=5)
        aligned = align(weather, prices)
        assert aligned.start == datetime(2022, 11, 29)
        assert aligned.weeks == 1


class TestRoundTrip:
    def test_weather_round_trip_value_identical(self, tmp_path):
        weather, _ = split_aligned(generate_synthetic(1, seed=9))
        save_weather(weather, tmp_path / "w.csv")
        back = load_weather(tmp_path / "w.csv")
        assert back.start == weather.start
        assert np.array_equal(back.t_ambient, weather.t_ambient)
        assert np.array_equal(back.solar, weather.solar)

    def test_prices_round_trip_value_identical(self, tmp_path):
        _, prices = split_aligned(generate_synthetic(1, seed=9))
        save_prices(prices, tmp_path / "p.csv")
        back = load_prices(tmp_path / "p.csv")
        assert back.start == prices.start
        assert np.array_equal(back.price, prices.price)


class TestSynthetic:
    def test_deterministic(self):
        a = generate_synthetic(2, seed=42)
        b = generate_synthetic(2, seed=42)
        assert np.array_equal(a.t_ambient, b.t_ambient)
        assert np.array_equal(a.solar, b.solar)
        assert np.array_equal(a.price, b.price)

    def test_night_has_no_sun(self):
        series = generate_synthetic(1, seed=0)
        midnight_slots = np.arange(0, len(series), 96)
        assert np.all(series.solar[midnight_slots] == 0.0)
        assert np.all(series.solar >= 0.0)

    def test_daily_mean_temperature_near_two_degrees(self):
        series = generate_synthetic(1, seed=0)
        for day in range(7):
            daily = series.t_ambient[day * 96:(day + 1) * 96]
            # mean 2 degC up to the slow drift term
            assert abs(daily.mean() - 2.0) <= 3.6

    def test_price_profile_shape(self):
        series = generate_synthetic(4, seed=11)
        hourly = series.price.reshape(-1, 4)[:, 0].reshape(-1, 24)
        mean_day = hourly.mean(axis=0)
        assert 31 <= mean_day[8] <= 39      # morning peak near 35
        assert 31 <= mean_day[18] <= 39     # evening peak near 35
        assert 13 <= mean_day.min() <= 17   # night trough near 15
        assert np.argmin(mean_day) in range(0, 7)
        assert np.all(series.price > 0.0)

    def test_noise_within_twenty_percent(self):
        from heatdr.data import SYNTHETIC_PRICE_PROFILE
        series = generate_synthetic(9, seed=3)
        hourly = series.price.reshape(-1, 4)[:, 0].reshape(-1, 24)
        ratio = hourly / SYNTHETIC_PRICE_PROFILE[None, :]
        assert ratio.min() >= 0.8 - 1e-12
        assert ratio.max() <= 1.2 + 1e-12

    def test_rejects_zero_weeks(self):
        with pytest.raises(DataError):
            generate_synthetic(0, seed=1)
