"""Tick-to-volatility pipeline tests with hand-derived fixtures."""

import math

import numpy as np
import pytest

from tvewd.rv import (
    DataQualityError,
    DayBars,
    TradingCalendar,
    annualize,
    load_ticks,
    realized_variance,
    rv_pipeline,
    sample_five_minute,
    store_rv,
)
from tvewd.series import atomic_write


def ticks(*pairs):
    ts = np.array([t for t, _ in pairs], dtype="datetime64[s]")
    px = np.array([p for _, p in pairs], dtype=float)
    return ts, px


MORNING = TradingCalendar(bins_per_day=2, open_offset_minutes=9 * 60)


def test_last_price_in_window():
    ts, px = ticks(
        ("2021-03-02T09:01:00", 10.0),
        ("2021-03-02T09:04:00", 11.0),
        ("2021-03-02T09:07:00", 12.0),
    )
    days = sample_five_minute(ts, px, MORNING)  # bins end 09:05, 09:10
    assert len(days) == 1
    assert days[0].prices.tolist() == [11.0, 12.0]
    assert days[0].dropped_leading == 0


def test_carry_forward_single_tick():
    cal = TradingCalendar(bins_per_day=3, open_offset_minutes=9 * 60)
    ts, px = ticks(("2021-03-02T09:00:00", 10.0))
    days = sample_five_minute(ts, px, cal)
    assert days[0].prices.tolist() == [10.0, 10.0, 10.0]


def test_bar_count_matches_configured_bins():
    rng = np.random.default_rng(3)
    base = np.datetime64("2021-03-02T09:00:30", "s")
    stamps = base + np.sort(rng.integers(0, 7 * 5 * 60 - 60, 40))
    prices = 100.0 + rng.standard_normal(40).cumsum() * 0.1
    cal = TradingCalendar(bins_per_day=7, open_offset_minutes=9 * 60)
    days = sample_five_minute(stamps.astype("datetime64[s]"), prices, cal)
    assert len(days[0].prices) == 7


def test_leading_empty_bins_dropped_not_backfilled():
    cal = TradingCalendar(bins_per_day=4, open_offset_minutes=9 * 60)
    ts, px = ticks(("2021-03-02T09:12:00", 10.0))  # first two bins have no tick
    days = sample_five_minute(ts, px, cal)
    assert days[0].dropped_leading == 2
    assert days[0].prices.tolist() == [10.0, 10.0]


def test_excluded_dates_dropped():
    cal = TradingCalendar(
        excluded_dates=("2021-07-05",), bins_per_day=2, open_offset_minutes=9 * 60
    )
    ts, px = ticks(
        ("2021-07-05T09:01:00", 10.0),
        ("2021-07-06T09:01:00", 11.0),
    )
    days = sample_five_minute(ts, px, cal)
    assert [str(d.date) for d in days] == ["2021-07-06"]


@pytest.mark.parametrize(
    "day", ["2020-12-24", "2020-12-25", "2020-12-26", "2020-12-31", "2021-01-01", "2021-01-02"]
)
def test_fixed_year_end_exclusions(day):
    assert TradingCalendar().is_excluded(np.datetime64(day, "D"))
    assert not TradingCalendar().is_excluded(np.datetime64("2021-03-02", "D"))


def test_session_cutoff_assigns_evening_ticks_to_next_day():
    cal = TradingCalendar(session_cutoff="18:00")
    ts = np.array(
        ["2021-03-02T17:59:00", "2021-03-02T18:00:00", "2021-03-03T02:00:00"],
        dtype="datetime64[s]",
    )
    sessions = cal.session_date(ts)
    assert [str(s) for s in sessions] == ["2021-03-02", "2021-03-03", "2021-03-03"]
    # midnight cutoff keeps plain calendar dates
    plain = TradingCalendar().session_date(ts)
    assert [str(s) for s in plain] == ["2021-03-02", "2021-03-02", "2021-03-03"]


def test_sample_rejects_unsorted_timestamps():
    ts, px = ticks(("2021-03-02T09:04:00", 10.0), ("2021-03-02T09:01:00", 11.0))
    with pytest.raises(DataQualityError, match="non-decreasing"):
        sample_five_minute(ts, px, MORNING)


def test_sample_empty_input_gives_empty_output():
    ts = np.array([], dtype="datetime64[s]")
    assert sample_five_minute(ts, np.array([]), MORNING) == []


def day_bars(prices, date="2021-03-02"):
    return DayBars(date=np.datetime64(date, "D"), prices=np.asarray(prices, dtype=float))


def test_realized_variance_zero_for_constant_prices():
    dates, rv, warnings = realized_variance([day_bars([100.0, 100.0, 100.0])])
    assert rv.tolist() == [0.0]
    assert warnings == []


def test_realized_variance_hand_arithmetic():
    # consecutive log-returns of exactly 0.01 and -0.02
    p0 = 100.0
    prices = [p0, p0 * math.exp(0.01), p0 * math.exp(0.01) * math.exp(-0.02)]
    _, rv, _ = realized_variance([day_bars(prices)])
    assert rv[0] == pytest.approx(0.01**2 + 0.02**2, rel=1e-12)


def test_realized_variance_two_price_day():
    _, rv, _ = realized_variance([day_bars([100.0, 101.0])])
    assert rv[0] == pytest.approx(math.log(1.01) ** 2, rel=1e-12)


def test_realized_variance_price_scale_invariance():
    rng = np.random.default_rng(4)
    prices = 50.0 * np.exp(rng.standard_normal(80) * 0.001).cumprod()
    _, rv1, _ = realized_variance([day_bars(prices)])
    _, rv2, _ = realized_variance([day_bars(prices * 7.25)])
    assert rv1[0] == pytest.approx(rv2[0], rel=1e-12)


def test_realized_variance_short_day_dropped_with_warning():
    dates, rv, warnings = realized_variance(
        [day_bars([100.0]), day_bars([100.0, 101.0], date="2021-03-03")]
    )
    assert len(rv) == 1
    assert str(dates[0]) == "2021-03-03"
    assert len(warnings) == 1 and "2021-03-02" in warnings[0]


def test_annualize_values():
    dates = np.array(["2021-03-02", "2021-03-03", "2021-03-04"], dtype="datetime64[D]")
    series = annualize(dates, np.array([0.0, 0.0005, 1.0 / 252.0]), label="CL")
    assert series.values[0] == 0.0
    assert series.values[1] == pytest.approx(100.0 * math.sqrt(252.0 * 0.0005), rel=1e-15)
    assert series.values[1] == pytest.approx(35.496478698597695, rel=1e-12)
    assert series.values[2] == pytest.approx(100.0, rel=1e-12)
    assert series.label == "CL"


def test_annualize_monotone_and_zero_iff_zero():
    rng = np.random.default_rng(5)
    rv = np.sort(rng.uniform(0.0, 0.01, 30))
    dates = np.datetime64("2021-03-01", "D") + np.arange(30)
    out = annualize(dates, rv).values
    assert np.all(np.diff(out) >= 0)
    assert np.all((out == 0) == (rv == 0))


def test_annualize_rejects_negative_rv():
    dates = np.array(["2021-03-02"], dtype="datetime64[D]")
    with pytest.raises(DataQualityError, match="negative"):
        annualize(dates, np.array([-1e-9]))


def test_load_ticks_and_pipeline(tmp_path):
    path = str(tmp_path / "ticks.csv")
    atomic_write(
        path,
        "timestamp,price\n"
        "2021-03-02T09:01:00,10\n"
        "2021-03-02T09:04:00,11\n"
        "2021-03-02T09:07:00,12\n"
        "2021-03-03T09:02:00,12\n"
        "2021-03-03T09:08:00,12.5\n",
    )
    ts, px = load_ticks(path)
    vol, raw, warnings = rv_pipeline(ts, px, MORNING, label="CL")
    assert [str(d) for d in vol.dates] == ["2021-03-02", "2021-03-03"]
    expected_rv0 = math.log(12.0 / 11.0) ** 2
    assert raw.values[0] == pytest.approx(expected_rv0, rel=1e-12)
    assert vol.values[0] == pytest.approx(100 * math.sqrt(252 * expected_rv0), rel=1e-12)
    assert warnings == []
    out = str(tmp_path / "rv.csv")
    store_rv(raw.dates, raw.values, out)
    with open(out) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "date,rv"
    assert float(lines[1].split(",")[1]) == raw.values[0]


def test_load_ticks_rejects_bad_rows(tmp_path):
    path = str(tmp_path / "ticks.csv")
    atomic_write(path, "timestamp,price\n2021-03-02T09:01:00,-5\n")
    with pytest.raises(DataQualityError, match="row 1"):
        load_ticks(path)
    atomic_write(path, "timestamp,price\nwhenever,5\n")
    with pytest.raises(DataQualityError, match="row 1"):
        load_ticks(path)
    atomic_write(
        path, "timestamp,price\n2021-03-02T09:04:00,10\n2021-03-02T09:01:00,11\n"
    )
    with pytest.raises(DataQualityError, match="row 2"):
        load_ticks(path)
