import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperfit.series import (
    DAYS_PER_MONTH,
    Epoch,
    InflationSeries,
    LoadError,
    PriceIndexSeries,
    SeriesError,
    build_price_index,
    date_to_time,
    epoch_from_time,
    epoch_times,
    growth_rates,
    load_series,
    rates_from_index,
    slice_window,
)


def yearly(year0, rates):
    epochs = tuple(Epoch(year=year0 + k) for k in range(len(rates)))
    return InflationSeries(epochs=epochs, rates=np.asarray(rates, dtype=float))


# ---------------------------------------------------------------------------
# Epoch
# ---------------------------------------------------------------------------

class TestEpoch:
    def test_parse_forms(self):
        assert Epoch.parse("1969") == Epoch(year=1969)
        assert Epoch.parse("1921-05") == Epoch(year=1921, month=5)
        assert Epoch.parse("1994:03:10") == Epoch(year=1994, month=3, day=10)

    def test_mid_month_is_day_15(self):
        assert Epoch(year=1921, month=5, day_convention="mid").resolved_day() == 15

    def test_end_month_is_last_calendar_day(self):
        assert Epoch(year=1943, month=2, day_convention="end").resolved_day() == 28
        assert Epoch(year=1944, month=2, day_convention="end").resolved_day() == 29
        assert Epoch(year=1944, month=10, day_convention="end").resolved_day() == 31

    @given(
        y1=st.integers(1800, 2200), m1=st.integers(1, 12),
        y2=st.integers(1800, 2200), m2=st.integers(1, 12),
        convention=st.sampled_from(["mid", "end"]),
    )
    def test_monthly_coordinate_monotone_in_calendar_order(self, y1, m1, y2, m2, convention):
        a = Epoch(year=y1, month=m1, day_convention=convention)
        b = Epoch(year=y2, month=m2, day_convention=convention)
        if a.sort_key() < b.sort_key():
            assert a.ordinal() < b.ordinal()
        elif a.sort_key() > b.sort_key():
            assert a.ordinal() > b.ordinal()

    @given(y=st.integers(1800, 2200), m=st.integers(1, 12),
           convention=st.sampled_from(["mid", "end"]))
    def test_monthly_round_trip(self, y, m, convention):
        t0 = Epoch(year=1800, month=1, day_convention=convention)
        e = Epoch(year=y, month=m, day_convention=convention)
        t = float(e.ordinal() - t0.ordinal())
        back = epoch_from_time(t, "monthly", t0)
        assert (back.year, back.month) == (y, m)

    def test_yearly_round_trip(self):
        for y in (1969, 1990, 2007):
            assert epoch_from_time(float(y), "yearly", Epoch(year=1969)).year == y

    def test_bad_dates_rejected(self):
        with pytest.raises(LoadError):
            Epoch.parse("1969-13")
        with pytest.raises(SeriesError):
            Epoch(year=1943, month=2, day=30)


def test_year_end_convention_maps_dec31_to_the_year():
    from datetime import date
    t = date_to_time(date(2008, 12, 31), "yearly", Epoch(year=1979), "end")
    assert t == 2008.0


def test_year_start_convention_maps_jan1_to_the_year():
    from datetime import date
    t = date_to_time(date(2009, 1, 1), "yearly", Epoch(year=1979), "start")
    assert t == 2009.0


# ---------------------------------------------------------------------------
# build_price_index
# ---------------------------------------------------------------------------

class TestBuildPriceIndex:
    def test_all_zero_rates_give_unit_index(self):
        index = build_price_index(yearly(1970, [0.0] * 10))
        assert np.array_equal(index.index, np.ones(10))

    def test_single_doubling(self):
        index = build_price_index(yearly(1970, [0.0, 1.0]))
        assert index.index == pytest.approx([1.0, 2.0], abs=0.0)

    def test_log_sum_oracle_on_random_rates(self):
        rng = np.random.default_rng(1234)
        rates = rng.uniform(-0.5, 3.0, 50)
        rates[0] = 0.0
        index = build_price_index(yearly(1900, rates))
        # Independent oracle: exactly-summed logs of the factors.
        expected = math.fsum(math.log1p(r) for r in rates)
        assert index.log_index[-1] == pytest.approx(expected, rel=1e-12)

    def test_rate_at_or_below_minus_one_names_epoch(self):
        with pytest.raises(SeriesError, match="1972"):
            yearly(1970, [0.0, 0.5, -1.0])

    def test_non_uniform_spacing_rejected(self):
        epochs = (Epoch(year=1970), Epoch(year=1971), Epoch(year=1973))
        with pytest.raises(SeriesError, match="spacing"):
            InflationSeries(epochs=epochs, rates=np.zeros(3))

    def test_first_entry_is_exactly_one(self):
        index = build_price_index(yearly(1970, [0.0, 0.3, 0.7]))
        assert index.index[0] == 1.0


# ---------------------------------------------------------------------------
# growth_rates
# ---------------------------------------------------------------------------

class TestGrowthRates:
    def test_constant_index_gives_zero(self):
        index = PriceIndexSeries.from_index(
            tuple(Epoch(year=2000 + k) for k in range(5)), np.full(5, 3.7)
        )
        assert all(r == 0.0 for _, r in growth_rates(index))

    def test_known_decade_ratio(self):
        # One step spanning a price ratio of 10**2.556 has log growth
        # 2.556 ln 10 (about 5.885).
        index = PriceIndexSeries.from_index(
            (Epoch(year=1923, month=10), Epoch(year=1923, month=11)),
            np.array([1.0, 10.0 ** 2.556]),
        )
        (_, r), = growth_rates(index)
        assert r == pytest.approx(2.556 * math.log(10.0), rel=1e-12)
        assert r == pytest.approx(5.885, abs=5e-4)

    def test_exponential_series_gives_constant_rate(self):
        epochs = tuple(Epoch(year=1950 + k) for k in range(12))
        index = PriceIndexSeries.from_log_index(epochs, 0.3 * np.arange(12))
        for _, r in growth_rates(index):
            assert r == pytest.approx(0.3, rel=1e-12)

    def test_needs_two_entries(self):
        index = PriceIndexSeries.from_index((Epoch(year=1970),), np.array([1.0]))
        with pytest.raises(SeriesError):
            growth_rates(index)

    def test_rates_stamped_at_left_epoch_and_shorter_by_one(self):
        index = build_price_index(yearly(1970, [0.0, 0.1, 0.2]))
        out = growth_rates(index)
        assert len(out) == 2
        assert out[0][0] == Epoch(year=1970)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------

def test_rates_index_round_trip_identity():
    rng = np.random.default_rng(77)
    rates = rng.uniform(-0.3, 2.0, 30)
    rates[0] = 0.0
    index = build_price_index(yearly(1960, rates))
    rebuilt = build_price_index(rates_from_index(index))
    assert rebuilt.index == pytest.approx(index.index, rel=1e-10)


@given(st.lists(st.floats(-0.9, 9.0), min_size=2, max_size=40))
def test_growth_of_built_index_equals_log1p_of_rates(raw):
    rates = np.array([0.0] + raw)
    series = yearly(1900, rates)
    out = growth_rates(build_price_index(series))
    for k, (_, r) in enumerate(out):
        assert r == pytest.approx(math.log1p(rates[k + 1]), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------

class TestLoadSeries:
    def test_minimal_yearly_file(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.0\n1970,0.062\n")
        series = load_series(f, kind="rate")
        assert isinstance(series, InflationSeries)
        assert series.rates == pytest.approx([0.0, 0.062])

    def test_percent_units(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.0\n1970,0.062\n")
        series = load_series(f, kind="rate", units="percent")
        assert series.rates == pytest.approx([0.0, 0.00062])

    def test_yearly_epoch_map(self, tmp_path):
        f = tmp_path / "a.csv"
        rows = [f"{1969 + k},0.1" for k in range(22)]
        rows[0] = "1969,0.0"
        f.write_text("\n".join(rows) + "\n")
        series = load_series(f, kind="rate")
        assert len(series) == 22
        # Hand-computed epoch map: consecutive calendar years as floats.
        assert series.times() == pytest.approx([1969.0 + k for k in range(22)], abs=0.0)

    def test_header_and_comments_tolerated(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("# synthetic\ndate,value\n1969,0.0\n1970,0.5\n")
        assert len(load_series(f, kind="rate")) == 2

    def test_first_rate_forced_to_zero_with_warning(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.3\n1970,0.5\n")
        with pytest.warns(UserWarning, match="forced to 0"):
            series = load_series(f, kind="rate")
        assert series.rates[0] == 0.0

    def test_malformed_row_names_line(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.0\n1970,zesty\n")
        with pytest.raises(LoadError, match="line 2"):
            load_series(f, kind="rate")

    def test_duplicate_epoch_names_line(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.0\n1969,0.1\n")
        with pytest.raises(LoadError, match="line 2"):
            load_series(f, kind="rate")

    def test_unordered_epochs_rejected(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1970,0.0\n1969,0.1\n")
        with pytest.raises(LoadError, match="out of order"):
            load_series(f, kind="rate")

    def test_mixed_resolution_rejected(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,0.0\n1970-05,0.1\n")
        with pytest.raises(LoadError, match="mixed"):
            load_series(f, kind="rate")

    def test_monthly_day_conventions(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1943-02,0.0\n1943-03,0.1\n")
        mid = load_series(f, kind="rate", day_convention="mid")
        end = load_series(f, kind="rate", day_convention="end")
        assert mid.epochs[0].resolved_day() == 15
        assert end.epochs[0].resolved_day() == 28
        # 1943-02-28 -> 1943-03-31 is 31 days.
        assert end.times()[1] == 31.0

    def test_index_kind_loads_price_series(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,1.0\n1970,2.5\n")
        series = load_series(f, kind="index")
        assert isinstance(series, PriceIndexSeries)
        assert series.index == pytest.approx([1.0, 2.5])

    def test_nonpositive_index_rejected(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1969,1.0\n1970,-2.5\n")
        with pytest.raises(SeriesError):
            load_series(f, kind="index")


def test_slice_window_inclusive():
    series = yearly(1970, [0.0, 0.1, 0.2, 0.3, 0.4])
    sub = slice_window(series, Epoch(year=1971), Epoch(year=1973))
    assert [e.year for e in sub.epochs] == [1971, 1972, 1973]
    with pytest.raises(SeriesError):
        slice_window(series, Epoch(year=1990), None)


def test_monthly_times_are_days_from_first_epoch():
    epochs = tuple(Epoch(year=1921, month=m, day_convention="mid") for m in (5, 6, 7))
    assert epoch_times(epochs) == pytest.approx([0.0, 31.0, 61.0], abs=0.0)


def test_days_per_month_constant():
    assert DAYS_PER_MONTH == pytest.approx(30.4375, abs=0.0)
