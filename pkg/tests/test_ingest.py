"""Loader, validation, and universe-filter behavior."""
from __future__ import annotations

import numpy as np
import pytest
import scipy.stats

from conftest import dates_from, make_panel
from eigenmarket import (
    ConfigError,
    DataValidationError,
    PricePanel,
    ReturnPanel,
    descriptive_stats,
    filter_universe,
    load_price_panel,
    log_returns,
)
from eigenmarket.ingest import write_price_csv, write_sector_csv


def _write_files(tmp_path, tickers, dates, prices, sectors):
    price_path = tmp_path / "prices.csv"
    sector_path = tmp_path / "sectors.csv"
    write_price_csv(price_path, tickers, dates, prices)
    write_sector_csv(sector_path, list(zip(tickers, sectors)))
    return price_path, sector_path


def test_price_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    tickers = ("AAA", "BBB", "CCC")
    dates = dates_from(7)
    prices = 100.0 * np.exp(rng.standard_normal((3, 7)) * 0.02)
    price_path, sector_path = _write_files(
        tmp_path, tickers, dates, prices, ["X", "X", "Y"]
    )
    panel, sector = load_price_panel(price_path, sector_path)
    assert panel.tickers == tickers
    assert panel.dates == dates
    # repr() round-trips doubles exactly
    assert np.array_equal(panel.prices, prices)
    assert sector == {"AAA": "X", "BBB": "X", "CCC": "Y"}


def test_log_returns_hand_values():
    panel = PricePanel(
        tickers=("A",), dates=dates_from(3), prices=np.array([[100.0, 110.0, 121.0]])
    )
    rp = log_returns(panel, {"A": "X"})
    assert np.allclose(rp.returns, np.log(1.1), atol=1e-15)
    assert rp.dates == panel.dates[1:]
    assert rp.n_days == 2


def test_log_returns_single_day_rejected():
    panel = PricePanel(tickers=("A",), dates=dates_from(1), prices=np.array([[100.0]]))
    with pytest.raises(DataValidationError, match="single-day"):
        log_returns(panel, {"A": "X"})


def test_missing_cell_is_located(tmp_path):
    price_path = tmp_path / "p.csv"
    price_path.write_text("date,A,B\n2001-01-02,1.0,2.0\n2001-01-03,1.1,\n")
    sector_path = tmp_path / "s.csv"
    sector_path.write_text("ticker,sector\nA,X\nB,X\n")
    with pytest.raises(DataValidationError, match="line 3, column 'B'"):
        load_price_panel(price_path, sector_path)


@pytest.mark.parametrize(
    "body,pattern",
    [
        ("date,A\n2001-01-02,abc\n", "bad number"),
        ("date,A\n2001-01-02,-3.0\n", "finite and > 0"),
        ("date,A\n2001-01-03,1.0\n2001-01-02,1.1\n", "non-increasing dates"),
        ("date,A\n2001-13-40,1.0\n", "bad date"),
        ("date,A,A\n2001-01-02,1.0,1.1\n", "duplicate ticker columns"),
        ("day,A\n2001-01-02,1.0\n", "first header column must be 'date'"),
        ("date,A\n2001-01-02,1.0,9.9\n", "expected 2"),
        ("date,A\n", "no data rows"),
    ],
)
def test_malformed_price_files(tmp_path, body, pattern):
    price_path = tmp_path / "p.csv"
    price_path.write_text(body)
    sector_path = tmp_path / "s.csv"
    sector_path.write_text("ticker,sector\nA,X\n")
    with pytest.raises(DataValidationError, match=pattern):
        load_price_panel(price_path, sector_path)


def test_unreadable_file_is_config_error(tmp_path):
    sector_path = tmp_path / "s.csv"
    sector_path.write_text("ticker,sector\nA,X\n")
    with pytest.raises(ConfigError, match="cannot read price file"):
        load_price_panel(tmp_path / "nope.csv", sector_path)


def test_sector_file_validation(tmp_path):
    price_path = tmp_path / "p.csv"
    price_path.write_text("date,A\n2001-01-02,1.0\n2001-01-03,1.1\n")
    sector_path = tmp_path / "s.csv"
    sector_path.write_text("ticker,sector\nA,X\nA,Y\n")
    with pytest.raises(DataValidationError, match="duplicate ticker 'A'"):
        load_price_panel(price_path, sector_path)
    sector_path.write_text("ticker,sector\nA\n")
    with pytest.raises(DataValidationError, match="no sector field"):
        load_price_panel(price_path, sector_path)


def test_return_panel_requires_sector_cover():
    with pytest.raises(DataValidationError, match="without sector label"):
        ReturnPanel(
            tickers=("A", "B"),
            dates=dates_from(3),
            returns=np.zeros((2, 3)) + 0.01,
            sector={"A": "X"},
        )


def test_price_panel_validation():
    with pytest.raises(DataValidationError, match="strictly positive"):
        PricePanel(tickers=("A",), dates=dates_from(2), prices=np.array([[1.0, 0.0]]))
    with pytest.raises(DataValidationError, match="non-finite"):
        PricePanel(tickers=("A",), dates=dates_from(2), prices=np.array([[1.0, np.nan]]))
    with pytest.raises(DataValidationError, match="2 dates but 3"):
        PricePanel(tickers=("A",), dates=dates_from(2), prices=np.ones((1, 3)))


def test_panel_arrays_are_read_only():
    panel = make_panel(np.ones((2, 4)) * 0.01)
    with pytest.raises(ValueError):
        panel.returns[0, 0] = 9.9


def test_subset_and_sector_order():
    sectors = ["X", "Y", "X", "Z", "Y"]
    panel = make_panel(np.random.default_rng(1).standard_normal((5, 6)), sectors)
    assert panel.sectors() == ("X", "Y", "Z")  # first appearance wins
    sub = panel.subset([4, 1])
    assert sub.tickers == (panel.tickers[4], panel.tickers[1])
    assert np.array_equal(sub.returns, panel.returns[[4, 1]])
    with pytest.raises(ConfigError, match="distinct"):
        panel.subset([1, 1])
    with pytest.raises(ConfigError, match="out of range"):
        panel.subset([5])


def test_descriptive_stats_match_scipy():
    rng = np.random.default_rng(2)
    panel = make_panel(rng.standard_normal((6, 200)) * 0.02)
    stats = descriptive_stats(panel)
    for i in range(6):
        row = panel.returns[i]
        assert stats.mean[i] == pytest.approx(row.mean(), abs=1e-15)
        assert stats.std[i] == pytest.approx(row.std(ddof=1), abs=1e-15)
        assert stats.skewness[i] == pytest.approx(scipy.stats.skew(row), abs=1e-12)
        assert stats.kurtosis[i] == pytest.approx(
            scipy.stats.kurtosis(row, fisher=False), abs=1e-12
        )
    assert stats.zero_variance == ()


def test_descriptive_stats_zero_variance_flagged():
    values = np.vstack([np.full(10, 0.005), np.linspace(-0.01, 0.01, 10)])
    stats = descriptive_stats(make_panel(values))
    assert stats.zero_variance == ("S000",)
    assert np.isnan(stats.skewness[0]) and np.isnan(stats.kurtosis[0])
    assert np.isfinite(stats.kurtosis[1])


def test_descriptive_stats_need_four_days():
    with pytest.raises(DataValidationError, match="at least 4"):
        descriptive_stats(make_panel(np.random.default_rng(3).standard_normal((2, 3))))


def _filter_fixture_panel():
    """Five well-behaved stocks plus one of each pathology."""
    rng = np.random.default_rng(4)
    length = 80
    good = rng.standard_normal((5, length)) * 0.01
    flat = np.full(length, 0.002)
    skewed = np.full(length, -0.001)
    skewed[3] = 0.5  # single spike, |skewness| >> 2
    fat = np.full(length, 0.0)
    fat[0], fat[1] = 0.3, -0.3  # symmetric spikes, kurtosis near length/2
    fat[2:] = 0.001 * rng.standard_normal(length - 2)
    values = np.vstack([good, flat, skewed, fat])
    tickers = [f"G{i}" for i in range(5)] + ["FLAT", "SKEW", "FAT"]
    sectors = ["CORE"] * 5 + ["CORE", "CORE", "CORE"]
    return make_panel(values, sectors, tickers)


def test_filter_universe_rules_fire():
    panel = _filter_fixture_panel()
    stats = descriptive_stats(panel)
    filtered, report = filter_universe(panel, stats, min_sector=1)
    rules = {e.ticker: e.rule for e in report.excluded}
    assert rules == {"FLAT": "zero_variance", "SKEW": "skewness", "FAT": "kurtosis"}
    assert filtered.tickers == tuple(f"G{i}" for i in range(5))
    assert report.n_before == 8 and report.n_after == 5
    assert report.kept == filtered.tickers


def test_filter_small_sector_after_moment_rules():
    rng = np.random.default_rng(5)
    values = rng.standard_normal((6, 60)) * 0.01
    values[0] = 0.001  # constant stock inside the small sector
    sectors = ["TINY", "TINY", "BIG", "BIG", "BIG", "BIG"]
    panel = make_panel(values, sectors)
    filtered, report = filter_universe(panel, descriptive_stats(panel), min_sector=2)
    # dropping the constant stock leaves TINY with one member, so the
    # survivor goes too, and with the sector rule not the moment rule
    rules = {e.ticker: e.rule for e in report.excluded}
    assert rules["S000"] == "zero_variance"
    assert rules["S001"] == "small_sector"
    assert filtered.sectors() == ("BIG",)


def test_filter_universe_can_empty():
    values = np.tile(np.full(40, 0.002), (3, 1))
    panel = make_panel(values)
    with pytest.raises(DataValidationError, match="universe empty"):
        filter_universe(panel, descriptive_stats(panel))


def test_filter_universe_guards():
    panel = _filter_fixture_panel()
    stats = descriptive_stats(panel)
    with pytest.raises(ConfigError, match="min_sector"):
        filter_universe(panel, stats, min_sector=0)
    other = make_panel(np.random.default_rng(6).standard_normal((2, 80)))
    with pytest.raises(ConfigError, match="different panel"):
        filter_universe(other, stats)


def test_filter_report_serializes():
    panel = _filter_fixture_panel()
    report = filter_universe(panel, descriptive_stats(panel), min_sector=1)[1]
    payload = report.to_dict()
    assert payload["n_stocks_before"] == 8
    assert {e["rule"] for e in payload["excluded"]} == {
        "zero_variance",
        "skewness",
        "kurtosis",
    }
    assert "FLAT" not in payload["kept"]


def test_write_price_csv_shape_guard(tmp_path):
    with pytest.raises(ConfigError):
        write_price_csv(tmp_path / "x.csv", ("A",), dates_from(3), np.ones((1, 2)))
