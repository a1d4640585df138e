"""Synthetic return panels with a known factor structure.

The market model draws every stock as a shared market factor plus one of
S sector factors plus idiosyncratic noise, all standard normal and
mutually independent:

    r[j, t] = beta_m * f[t] + beta_s * g[sector(j), t] + scale * eps[j, t]

With the default scale sqrt(1 - beta_m^2 - beta_s^2) each stock has unit
population variance.  The latent factor paths are kept on the result so
recovered eigenmodes can be checked against ground truth.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import ReturnPanel, write_price_csv, write_sector_csv

DEFAULT_SEED = 1234
_BASE_PRICE = 100.0
_START_DATE = date(2000, 1, 3)


@dataclass(frozen=True)
class MarketModelSpec:
    """Parameters of the one-market, S-sector generator.

    sector_sizes defaults to an equal split of n_stocks over n_sectors.
    idio_scale defaults to the value giving unit population variance;
    setting it explicitly changes that variance to
    beta_market^2 + beta_sector^2 + idio_scale^2.
    """

    n_stocks: int = 200
    n_days: int = 2000
    n_sectors: int = 5
    beta_market: float = 0.55
    beta_sector: float = 0.4
    sector_sizes: tuple[int, ...] | None = None
    idio_scale: float | None = None
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n_stocks < 1:
            raise ConfigError(f"n_stocks must be >= 1, got {self.n_stocks}")
        if self.n_days < 2:
            raise ConfigError(f"n_days must be >= 2, got {self.n_days}")
        if self.n_sectors < 1:
            raise ConfigError(f"n_sectors must be >= 1, got {self.n_sectors}")
        if not 0.0 <= self.beta_market < 1.0:
            raise ConfigError(f"beta_market must lie in [0, 1), got {self.beta_market}")
        if not 0.0 <= self.beta_sector < 1.0:
            raise ConfigError(f"beta_sector must lie in [0, 1), got {self.beta_sector}")
        residual = 1.0 - self.beta_market**2 - self.beta_sector**2
        if residual <= 0.0:
            raise ConfigError(
                "beta_market^2 + beta_sector^2 must stay below 1 so stocks "
                "keep idiosyncratic variance"
            )
        if self.sector_sizes is not None:
            sizes = tuple(int(s) for s in self.sector_sizes)
            object.__setattr__(self, "sector_sizes", sizes)
            if len(sizes) != self.n_sectors:
                raise ConfigError(
                    f"{len(sizes)} sector sizes for {self.n_sectors} sectors"
                )
            if any(s < 1 for s in sizes):
                raise ConfigError("sector sizes must be >= 1")
            if sum(sizes) != self.n_stocks:
                raise ConfigError(
                    f"sector sizes sum to {sum(sizes)}, expected {self.n_stocks}"
                )
        elif self.n_stocks % self.n_sectors != 0:
            raise ConfigError(
                f"{self.n_stocks} stocks do not split evenly over "
                f"{self.n_sectors} sectors; pass sector_sizes"
            )
        if self.idio_scale is not None and self.idio_scale <= 0.0:
            raise ConfigError(f"idio_scale must be > 0, got {self.idio_scale}")

    def resolved_sector_sizes(self) -> tuple[int, ...]:
        if self.sector_sizes is not None:
            return self.sector_sizes
        each = self.n_stocks // self.n_sectors
        return (each,) * self.n_sectors

    def resolved_idio_scale(self) -> float:
        if self.idio_scale is not None:
            return self.idio_scale
        return math.sqrt(1.0 - self.beta_market**2 - self.beta_sector**2)

    def to_dict(self) -> dict:
        return {
            "n_stocks": self.n_stocks,
            "n_days": self.n_days,
            "n_sectors": self.n_sectors,
            "beta_market": self.beta_market,
            "beta_sector": self.beta_sector,
            "sector_sizes": list(self.resolved_sector_sizes()),
            "idio_scale": self.resolved_idio_scale(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class GeneratedMarket:
    """A generated panel plus the latent factor paths that produced it."""

    panel: ReturnPanel
    market_factor: np.ndarray
    sector_factors: np.ndarray
    spec: MarketModelSpec

    def __post_init__(self):
        mf = np.array(self.market_factor, dtype=float)
        sf = np.array(self.sector_factors, dtype=float)
        mf.setflags(write=False)
        sf.setflags(write=False)
        object.__setattr__(self, "market_factor", mf)
        object.__setattr__(self, "sector_factors", sf)


def _date_strings(count: int, start: date) -> tuple[str, ...]:
    return tuple((start + timedelta(days=i)).isoformat() for i in range(count))


def _ticker(j: int) -> str:
    return f"T{j:04d}"


def _sector_label(s: int) -> str:
    return f"IND{s:02d}"


def generate_market(spec: MarketModelSpec) -> GeneratedMarket:
    """Draw a panel from the market model.

    Draw order (market factor, sector factors, idiosyncratic noise) is
    fixed, so a given seed always produces the same panel.
    """
    rng = np.random.default_rng(spec.seed)
    n, length = spec.n_stocks, spec.n_days
    sizes = spec.resolved_sector_sizes()
    scale = spec.resolved_idio_scale()

    f = rng.standard_normal(length)
    g = rng.standard_normal((spec.n_sectors, length))
    eps = rng.standard_normal((n, length))

    sector_index = np.repeat(np.arange(spec.n_sectors), sizes)
    returns = spec.beta_market * f + spec.beta_sector * g[sector_index] + scale * eps

    tickers = tuple(_ticker(j) for j in range(1, n + 1))
    sector = {
        t: _sector_label(int(s) + 1) for t, s in zip(tickers, sector_index)
    }
    panel = ReturnPanel(
        tickers=tickers,
        dates=_date_strings(length, _START_DATE + timedelta(days=1)),
        returns=returns,
        sector=sector,
    )
    return GeneratedMarket(
        panel=panel, market_factor=f, sector_factors=g, spec=spec
    )


def generate_noise(n_stocks: int, n_days: int, seed: int = 0) -> ReturnPanel:
    """IID standard-normal panel with a single dummy sector.

    Requires n_days > n_stocks so the panel is usable with the noise-band
    bounds downstream.
    """
    if n_stocks < 1:
        raise ConfigError(f"n_stocks must be >= 1, got {n_stocks}")
    if n_days <= n_stocks:
        raise ConfigError(
            f"need n_days > n_stocks, got {n_days} days for {n_stocks} stocks"
        )
    rng = np.random.default_rng(seed)
    tickers = tuple(_ticker(j) for j in range(1, n_stocks + 1))
    return ReturnPanel(
        tickers=tickers,
        dates=_date_strings(n_days, _START_DATE + timedelta(days=1)),
        returns=rng.standard_normal((n_stocks, n_days)),
        sector={t: "ALL" for t in tickers},
    )


def write_market_files(
    market: GeneratedMarket,
    out_dir: str | Path,
    emit: tuple[str, ...] = ("csv", "json"),
) -> dict[str, Path]:
    """Write a generated market as ingestible files.

    csv: prices.csv (cumulative exponentiation of the returns from a
    common base price, so loading and differencing the logs recovers the
    panel) and sectors.csv.  json: market.json with the resolved spec and
    the latent factor paths.

    Returns a name-to-path mapping of everything written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel = market.panel
    written: dict[str, Path] = {}
    if "csv" in emit:
        prices = _BASE_PRICE * np.exp(
            np.concatenate(
                [np.zeros((panel.n_stocks, 1)), np.cumsum(panel.returns, axis=1)],
                axis=1,
            )
        )
        dates = (_START_DATE.isoformat(), *panel.dates)
        price_path = out_dir / "prices.csv"
        write_price_csv(price_path, panel.tickers, dates, prices)
        sector_path = out_dir / "sectors.csv"
        write_sector_csv(sector_path, [(t, panel.sector[t]) for t in panel.tickers])
        written["prices"] = price_path
        written["sectors"] = sector_path
    if "json" in emit:
        sidecar = {
            "spec": market.spec.to_dict(),
            "tickers": list(panel.tickers),
            "market_factor": market.market_factor.tolist(),
            "sector_factors": market.sector_factors.tolist(),
        }
        json_path = out_dir / "market.json"
        json_path.write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written["sidecar"] = json_path
    return written
