"""Price panel ingestion, log-returns, and universe filtering.

Input format is a wide daily price table (RFC 4180 CSV, UTF-8): a ``date``
column in ISO-8601 followed by one column per ticker, plus a two-column
``ticker,sector`` membership file.  Validation is strict; anything that
would silently corrupt a downstream correlation matrix is rejected with a
message naming the offending cell.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date as _date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataValidationError

# Exclusion thresholds for the stylized-fact filter.  Kurtosis is the raw
# fourth standardized moment (normal = 3), not excess.
SKEWNESS_LIMIT = 2.0
KURTOSIS_LIMIT = 30.0
DEFAULT_MIN_SECTOR = 5


def _parse_iso_date(text: str, line: int) -> str:
    try:
        _date.fromisoformat(text)
    except ValueError as exc:
        raise DataValidationError(f"bad date '{text}' at line {line}: {exc}") from None
    return text


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PricePanel:
    """Daily close prices, one row per ticker.

    Attributes:
        tickers: unique column labels, in file order.
        dates: ISO-8601 strings, strictly increasing, one per trading day.
        prices: array of shape (n_stocks, n_days), strictly positive.
    """

    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", _as_readonly(self.prices))
        if self.prices.ndim != 2:
            raise DataValidationError("prices must be a 2-d array")
        n, days = self.prices.shape
        if n != len(self.tickers):
            raise DataValidationError(
                f"{len(self.tickers)} tickers but {n} price rows"
            )
        if days != len(self.dates):
            raise DataValidationError(f"{len(self.dates)} dates but {days} price columns")
        if len(set(self.tickers)) != len(self.tickers):
            raise DataValidationError("duplicate tickers in panel")
        if not np.all(np.isfinite(self.prices)):
            raise DataValidationError("non-finite price")
        if np.any(self.prices <= 0.0):
            raise DataValidationError("prices must be strictly positive")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataValidationError(
                    f"non-increasing dates: {self.dates[i - 1]!r} then {self.dates[i]!r}"
                )

    @property
    def n_stocks(self) -> int:
        return self.prices.shape[0]

    @property
    def n_days(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """Daily log-returns with sector membership.

    The returns array has shape (n_stocks, n_days) where n_days is one less
    than the price panel it came from.  Every ticker must carry a sector
    label; the mapping may contain extra tickers, which are ignored.
    """

    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    returns: np.ndarray
    sector: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _as_readonly(self.returns))
        object.__setattr__(
            self, "sector", {t: self.sector[t] for t in self.tickers if t in self.sector}
        )
        if self.returns.ndim != 2:
            raise DataValidationError("returns must be a 2-d array")
        n, days = self.returns.shape
        if n != len(self.tickers):
            raise DataValidationError(f"{len(self.tickers)} tickers but {n} return rows")
        if days != len(self.dates):
            raise DataValidationError(f"{len(self.dates)} dates but {days} return columns")
        if days < 2:
            raise DataValidationError(f"need at least 2 return observations, got {days}")
        if len(set(self.tickers)) != len(self.tickers):
            raise DataValidationError("duplicate tickers in panel")
        if not np.all(np.isfinite(self.returns)):
            raise DataValidationError("non-finite return")
        missing = [t for t in self.tickers if t not in self.sector]
        if missing:
            raise DataValidationError(f"tickers without sector label: {missing[:5]}")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataValidationError(
                    f"non-increasing dates: {self.dates[i - 1]!r} then {self.dates[i]!r}"
                )

    @property
    def n_stocks(self) -> int:
        return self.returns.shape[0]

    @property
    def n_days(self) -> int:
        return self.returns.shape[1]

    def sector_of(self, ticker: str) -> str:
        return self.sector[ticker]

    def sectors(self) -> tuple[str, ...]:
        """Sector labels in first-appearance order."""
        seen: dict[str, None] = {}
        for t in self.tickers:
            seen.setdefault(self.sector[t], None)
        return tuple(seen)

    def subset(self, indices: Sequence[int]) -> "ReturnPanel":
        """New panel restricted to the given row indices, order preserved."""
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise ConfigError("subset indices must be distinct")
        for i in idx:
            if not 0 <= i < self.n_stocks:
                raise ConfigError(f"subset index {i} out of range")
        tickers = tuple(self.tickers[i] for i in idx)
        return ReturnPanel(
            tickers=tickers,
            dates=self.dates,
            returns=self.returns[idx],
            sector={t: self.sector[t] for t in tickers},
        )


@dataclass(frozen=True)
class DescriptiveStats:
    """Per-stock moments used by the universe filter.

    skewness is m3 / m2**1.5 and kurtosis is m4 / m2**2 with central moments
    taken over the full sample; both are NaN for zero-variance stocks, which
    are listed separately in ``zero_variance``.
    """

    tickers: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    zero_variance: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "zero_variance", tuple(self.zero_variance))
        for name in ("mean", "std", "skewness", "kurtosis"):
            arr = _as_readonly(getattr(self, name))
            object.__setattr__(self, name, arr)
            if arr.shape != (len(self.tickers),):
                raise DataValidationError(f"{name} has wrong shape {arr.shape}")
        finite = np.isfinite(self.kurtosis)
        # fourth standardized moment is bounded below by 1
        if np.any(self.kurtosis[finite] < 1.0 - 1e-9):
            raise DataValidationError("kurtosis below the Pearson bound of 1")


@dataclass(frozen=True)
class ExcludedStock:
    ticker: str
    rule: str
    reason: str


@dataclass(frozen=True)
class FilterReport:
    """Audit trail of a filter_universe() run."""

    n_before: int
    n_after: int
    min_sector: int
    excluded: tuple[ExcludedStock, ...] = ()
    kept: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n_stocks_before": self.n_before,
            "n_stocks_after": self.n_after,
            "min_sector": self.min_sector,
            "excluded": [
                {"ticker": e.ticker, "rule": e.rule, "reason": e.reason}
                for e in self.excluded
            ],
            "kept": list(self.kept),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_price_panel(
    price_path: str | Path, sector_path: str | Path
) -> tuple[PricePanel, dict[str, str]]:
    """Load a wide price CSV and its sector membership file.

    Args:
        price_path: CSV with header ``date,<ticker>,...`` and one row per day.
        sector_path: CSV with header ``ticker,sector``.

    Returns:
        The validated price panel and a ticker-to-sector mapping covering
        every panel ticker.

    Raises:
        ConfigError: a file is missing or unreadable.
        DataValidationError: malformed cells, duplicate or unknown tickers,
            non-increasing dates, or tickers without a sector label.
    """
    price_path = Path(price_path)
    sector_path = Path(sector_path)
    try:
        fh = price_path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read price file '{price_path}': {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"'{price_path}': empty file") from None
        if not header or header[0].strip() != "date":
            raise DataValidationError(
                f"'{price_path}': first header column must be 'date', got {header[:1]!r}"
            )
        tickers = tuple(h.strip() for h in header[1:])
        if not tickers:
            raise DataValidationError(f"'{price_path}': no ticker columns")
        if len(set(tickers)) != len(tickers):
            raise DataValidationError(f"'{price_path}': duplicate ticker columns")
        dates: list[str] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(tickers) + 1:
                raise DataValidationError(
                    f"'{price_path}': line {line_no} has {len(row)} fields, "
                    f"expected {len(tickers) + 1}"
                )
            day = _parse_iso_date(row[0].strip(), line_no)
            if dates and day <= dates[-1]:
                raise DataValidationError(
                    f"non-increasing dates: {dates[-1]!r} then {day!r} at line {line_no}"
                )
            values = []
            for ticker, cell in zip(tickers, row[1:]):
                text = cell.strip()
                if not text:
                    raise DataValidationError(
                        f"missing value at line {line_no}, column '{ticker}'"
                    )
                try:
                    value = float(text)
                except ValueError:
                    raise DataValidationError(
                        f"bad number {text!r} at line {line_no}, column '{ticker}'"
                    ) from None
                if not math.isfinite(value) or value <= 0.0:
                    raise DataValidationError(
                        f"price must be finite and > 0, got {text!r} at line {line_no}, "
                        f"column '{ticker}'"
                    )
                values.append(value)
            dates.append(day)
            rows.append(values)
    if not rows:
        raise DataValidationError(f"'{price_path}': no data rows")
    panel = PricePanel(tickers=tickers, dates=tuple(dates), prices=np.array(rows).T)

    sector = _load_sector_map(sector_path)
    missing = [t for t in panel.tickers if t not in sector]
    if missing:
        raise DataValidationError(
            f"tickers without sector label in '{sector_path}': {missing[:5]}"
        )
    return panel, sector


def _load_sector_map(path: Path) -> dict[str, str]:
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read sector file '{path}': {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"'{path}': empty file") from None
        if [h.strip() for h in header[:2]] != ["ticker", "sector"]:
            raise DataValidationError(
                f"'{path}': header must start with 'ticker,sector', got {header[:2]!r}"
            )
        sector: dict[str, str] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise DataValidationError(f"'{path}': line {line_no} has no sector field")
            ticker, label = row[0].strip(), row[1].strip()
            if not ticker or not label:
                raise DataValidationError(f"'{path}': blank ticker or sector at line {line_no}")
            if ticker in sector:
                raise DataValidationError(f"'{path}': duplicate ticker '{ticker}' at line {line_no}")
            sector[ticker] = label
    return sector


def log_returns(panel: PricePanel, sector: Mapping[str, str]) -> ReturnPanel:
    """Log price differences, ln P(t) - ln P(t-1), per stock.

    The output keeps the dates of the second through last price columns.
    A panel with a single day of prices has no returns and is rejected.
    """
    if panel.n_days < 2:
        raise DataValidationError("cannot compute returns from a single-day panel")
    returns = np.diff(np.log(panel.prices), axis=1)
    return ReturnPanel(
        tickers=panel.tickers,
        dates=panel.dates[1:],
        returns=returns,
        sector=dict(sector),
    )


def descriptive_stats(panel: ReturnPanel) -> DescriptiveStats:
    """Per-stock mean, standard deviation, skewness, and kurtosis.

    Moments are central sample moments over all n_days observations;
    the std field uses the n-1 divisor.  Requires at least 4 observations
    so the fourth moment is meaningful.
    """
    if panel.n_days < 4:
        raise DataValidationError(
            f"descriptive stats need at least 4 observations, got {panel.n_days}"
        )
    r = panel.returns
    means = r.mean(axis=1)
    centered = r - means[:, None]
    m2 = np.mean(centered**2, axis=1)
    m3 = np.mean(centered**3, axis=1)
    m4 = np.mean(centered**4, axis=1)
    flat = np.array([np.ptp(row) == 0.0 for row in r])
    skew = np.full(panel.n_stocks, np.nan)
    kurt = np.full(panel.n_stocks, np.nan)
    ok = ~flat
    skew[ok] = m3[ok] / m2[ok] ** 1.5
    kurt[ok] = m4[ok] / m2[ok] ** 2
    return DescriptiveStats(
        tickers=panel.tickers,
        mean=means,
        std=r.std(axis=1, ddof=1),
        skewness=skew,
        kurtosis=kurt,
        zero_variance=tuple(t for t, f in zip(panel.tickers, flat) if f),
    )


def filter_universe(
    panel: ReturnPanel,
    stats: DescriptiveStats,
    min_sector: int = DEFAULT_MIN_SECTOR,
) -> tuple[ReturnPanel, FilterReport]:
    """Drop pathological stocks, then thinly populated sectors.

    A stock is excluded when its series is constant, when |skewness| > 2,
    or when kurtosis > 30.  Sectors whose surviving member count falls
    below ``min_sector`` are then removed entirely.  Original ordering is
    preserved for the survivors.

    Returns:
        The filtered panel and a report listing every exclusion with the
        rule that fired.

    Raises:
        ConfigError: stats do not belong to this panel, or min_sector < 1.
        DataValidationError: no stock survives the filters.
    """
    if stats.tickers != panel.tickers:
        raise ConfigError("stats were computed for a different panel")
    if min_sector < 1:
        raise ConfigError(f"min_sector must be >= 1, got {min_sector}")

    excluded: list[ExcludedStock] = []
    keep: list[int] = []
    zero_var = set(stats.zero_variance)
    for i, ticker in enumerate(panel.tickers):
        if ticker in zero_var:
            excluded.append(
                ExcludedStock(ticker, "zero_variance", "constant return series")
            )
        elif abs(stats.skewness[i]) > SKEWNESS_LIMIT:
            excluded.append(
                ExcludedStock(
                    ticker,
                    "skewness",
                    f"|skewness| {abs(stats.skewness[i]):.4f} > {SKEWNESS_LIMIT}",
                )
            )
        elif stats.kurtosis[i] > KURTOSIS_LIMIT:
            excluded.append(
                ExcludedStock(
                    ticker,
                    "kurtosis",
                    f"kurtosis {stats.kurtosis[i]:.4f} > {KURTOSIS_LIMIT}",
                )
            )
        else:
            keep.append(i)

    counts: dict[str, int] = {}
    for i in keep:
        label = panel.sector[panel.tickers[i]]
        counts[label] = counts.get(label, 0) + 1
    small = {s for s, c in counts.items() if c < min_sector}
    final: list[int] = []
    for i in keep:
        ticker = panel.tickers[i]
        label = panel.sector[ticker]
        if label in small:
            excluded.append(
                ExcludedStock(
                    ticker,
                    "small_sector",
                    f"sector '{label}' has {counts[label]} surviving stocks "
                    f"(minimum {min_sector})",
                )
            )
        else:
            final.append(i)

    if not final:
        raise DataValidationError("universe empty after filters")

    filtered = panel.subset(final)
    report = FilterReport(
        n_before=panel.n_stocks,
        n_after=len(final),
        min_sector=min_sector,
        excluded=tuple(excluded),
        kept=filtered.tickers,
    )
    return filtered, report


def write_price_csv(
    path: str | Path,
    tickers: Sequence[str],
    dates: Sequence[str],
    prices: np.ndarray,
) -> None:
    """Write a wide price CSV in the format load_price_panel() reads.

    Floats are written with repr precision so a round trip recovers the
    exact values.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.shape != (len(tickers), len(dates)):
        raise ConfigError(
            f"price array shape {prices.shape} does not match "
            f"{len(tickers)} tickers x {len(dates)} dates"
        )
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *tickers])
        for j, day in enumerate(dates):
            writer.writerow([day, *(repr(float(p)) for p in prices[:, j])])


def write_sector_csv(path: str | Path, pairs: Iterable[tuple[str, str]]) -> None:
    """Write a ticker,sector membership CSV."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ticker", "sector"])
        for ticker, label in pairs:
            writer.writerow([ticker, label])
