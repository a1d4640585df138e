"""Command-line front end.

Subcommands: ``synth`` (generate a synthetic market), ``spectrum``
(full-panel spectrum and mode profiles), ``experiment scaling|between|
within`` (subset-resampling studies), and ``ingest-check`` (validate and
filter a raw panel).  Every run echoes its resolved configuration, the
master seed, and a configuration hash into the outputs, and reruns with
the same inputs produce byte-identical files.

Exit codes: 0 success, 2 configuration or usage error, 3 data rejected by
validation, 4 numerical failure.
"""
from __future__ import annotations

import csv
import functools
import hashlib
import json
import sys
from pathlib import Path

import click

from .errors import (
    ConfigError,
    DataValidationError,
    EigenmarketError,
    NumericalError,
)
from .experiments import (
    DEFAULT_BENCHMARK,
    DEFAULT_ITERATIONS,
    DEFAULT_MIN_SIZE,
    DEFAULT_STEP,
    SubsetExperiment,
    SubsetSchedule,
    economic_meaning,
)
from .ingest import (
    DEFAULT_MIN_SECTOR,
    descriptive_stats,
    filter_universe,
    load_price_panel,
    log_returns,
    write_price_csv,
    write_sector_csv,
)
from .synth import MarketModelSpec, generate_market, write_market_files

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_OUT_ENVVAR = "EIGENMARKET_OUT"


def _fmt(x) -> str:
    value = float(x)
    if value != value:
        return "nan"
    return repr(value)


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _write_csv(path: Path, meta: dict, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _meta(command: str, config: dict) -> tuple[dict, str]:
    """CSV comment header and hash for a resolved configuration.

    The output directory is deliberately not part of the configuration:
    the same analysis written to two places must produce identical bytes.
    """
    digest = _config_hash({"command": command, **config})
    meta = {"command": command}
    meta.update({k: config[k] for k in sorted(config)})
    meta["config_hash"] = digest
    return meta, digest


def _emit_set(emit: str) -> set[str]:
    parts = {p.strip() for p in emit.split(",") if p.strip()}
    unknown = parts - {"csv", "json"}
    if unknown:
        raise ConfigError(f"unknown emit format(s): {sorted(unknown)}")
    if not parts:
        raise ConfigError("emit must name at least one of csv, json")
    return parts


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cli_errors(fn):
    """Map package errors onto exit codes with a one-line stderr message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _die("config", exc, EXIT_CONFIG)
        except DataValidationError as exc:
            _die("data", exc, EXIT_DATA)
        except NumericalError as exc:
            _die("numerical", exc, EXIT_NUMERICAL)
        except EigenmarketError as exc:  # pragma: no cover - safety net
            _die("error", exc, EXIT_DATA)

    return wrapper


def _die(category: str, exc: Exception, code: int) -> None:
    click.echo(f"eigenmarket: error: {category}: {exc}", err=True)
    sys.exit(code)


def _load_returns(prices: str, sectors: str):
    panel, sector = load_price_panel(prices, sectors)
    return panel, log_returns(panel, sector)


_out_option = click.option(
    "--out",
    envvar=_OUT_ENVVAR,
    default="eigenmarket-out",
    show_default=True,
    help=f"Output directory (env {_OUT_ENVVAR} overrides the default).",
)
_emit_option = click.option(
    "--emit",
    default="csv,json",
    show_default=True,
    help="Comma-separated output formats: csv, json.",
)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file of option defaults, keyed by command name.",
)
@click.pass_context
def main(ctx, config_path):
    """Correlation-spectrum analytics for return panels."""
    if config_path:
        try:
            ctx.default_map = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            _die("config", ConfigError(f"bad config file '{config_path}': {exc}"), EXIT_CONFIG)


@main.command()
@click.option("--stocks", default=200, show_default=True, help="Number of stocks.")
@click.option("--days", default=2000, show_default=True, help="Number of return days.")
@click.option("--sectors", default=5, show_default=True, help="Number of sectors.")
@click.option(
    "--sector-sizes",
    default=None,
    help="Comma-separated per-sector stock counts (default: equal split).",
)
@click.option("--beta-market", default=0.55, show_default=True)
@click.option("--beta-sector", default=0.4, show_default=True)
@click.option(
    "--idio-scale",
    default=None,
    type=float,
    help="Idiosyncratic scale (default: unit total variance).",
)
@click.option("--seed", default=MarketModelSpec().seed, show_default=True)
@_out_option
@_emit_option
@_cli_errors
def synth(stocks, days, sectors, sector_sizes, beta_market, beta_sector, idio_scale, seed, out, emit):
    """Generate a synthetic market panel with known factor structure."""
    emit_set = _emit_set(emit)
    sizes = None
    if sector_sizes:
        try:
            sizes = tuple(int(s) for s in sector_sizes.split(","))
        except ValueError:
            raise ConfigError(f"bad --sector-sizes {sector_sizes!r}") from None
    spec = MarketModelSpec(
        n_stocks=stocks,
        n_days=days,
        n_sectors=sectors,
        beta_market=beta_market,
        beta_sector=beta_sector,
        sector_sizes=sizes,
        idio_scale=idio_scale,
        seed=seed,
    )
    market = generate_market(spec)
    written = write_market_files(market, _out_dir(out), emit=tuple(sorted(emit_set)))
    for name, path in sorted(written.items()):
        click.echo(f"wrote {name}: {path}")


@main.command()
@click.option("--prices", required=True, help="Wide price CSV (date,<ticker>,...).")
@click.option("--sectors", required=True, help="Membership CSV (ticker,sector).")
@click.option(
    "--benchmark",
    default=DEFAULT_BENCHMARK,
    show_default=True,
    help="Reference-correlation benchmark for flagging modes.",
)
@_out_option
@_emit_option
@_cli_errors
def spectrum(prices, sectors, benchmark, out, emit):
    """Full-panel spectrum, noise bounds, and mode profiles."""
    emit_set = _emit_set(emit)
    _, panel = _load_returns(prices, sectors)
    report = economic_meaning(panel, benchmark=benchmark)
    config = {
        "benchmark": benchmark,
        "n_days": panel.n_days,
        "n_stocks": panel.n_stocks,
    }
    meta, digest = _meta("spectrum", config)
    out_path = _out_dir(out)

    if "csv" in emit_set:
        _write_csv(
            out_path / "eigenvalues.csv",
            meta,
            ["rank", "eigenvalue"],
            ([m.rank, _fmt(m.eigenvalue)] for m in report.modes),
        )
        _write_csv(
            out_path / "profiles.csv",
            meta,
            [
                "rank",
                "eigenvalue",
                "deviating",
                "ew_reference",
                "ew_corr",
                "ew_abs_corr",
                "factor_reference",
                "factor_corr",
                "factor_abs_corr",
                "above_benchmark_ew",
                "above_benchmark_factor",
            ],
            (
                [
                    m.rank,
                    _fmt(m.eigenvalue),
                    int(m.deviating),
                    m.ew.reference,
                    _fmt(m.ew.corr),
                    _fmt(m.ew.abs_corr),
                    m.factor.reference,
                    _fmt(m.factor.corr),
                    _fmt(m.factor.abs_corr),
                    int(m.above_benchmark_ew),
                    int(m.above_benchmark_factor),
                ]
                for m in report.modes
            ),
        )
        click.echo(f"wrote {out_path / 'eigenvalues.csv'}")
        click.echo(f"wrote {out_path / 'profiles.csv'}")
    if "json" in emit_set:
        payload = {
            "command": "spectrum",
            "config": config,
            "config_hash": digest,
            "bounds": {
                "q": report.bounds.q,
                "lambda_minus": report.bounds.lambda_minus,
                "lambda_plus": report.bounds.lambda_plus,
            },
            "deviating_count": report.deviating_count,
            "n_factors": report.n_factors,
            "benchmark": report.benchmark,
            "modes": [
                {
                    "rank": m.rank,
                    "eigenvalue": m.eigenvalue,
                    "deviating": m.deviating,
                    "ew_reference": m.ew.reference,
                    "ew_corr": m.ew.corr,
                    "ew_abs_corr": m.ew.abs_corr,
                    "factor_reference": m.factor.reference,
                    "factor_corr": m.factor.corr,
                    "factor_abs_corr": m.factor.abs_corr,
                    "above_benchmark_ew": m.above_benchmark_ew,
                    "above_benchmark_factor": m.above_benchmark_factor,
                }
                for m in report.modes
            ],
        }
        _write_json(out_path / "spectrum.json", payload)
        click.echo(f"wrote {out_path / 'spectrum.json'}")


def _experiment_options(fn):
    fn = click.option("--prices", required=True, help="Wide price CSV.")(fn)
    fn = click.option("--sectors", required=True, help="Membership CSV (ticker,sector).")(fn)
    fn = click.option("--min-size", default=DEFAULT_MIN_SIZE, show_default=True)(fn)
    fn = click.option("--step", default=DEFAULT_STEP, show_default=True)(fn)
    fn = click.option(
        "--max-size",
        default=None,
        type=int,
        help="Largest subset size (default: the whole universe).",
    )(fn)
    fn = click.option("--iterations", default=DEFAULT_ITERATIONS, show_default=True)(fn)
    fn = click.option("--seed", default=0, show_default=True, help="Master seed.")(fn)
    fn = _out_option(fn)
    fn = _emit_option(fn)
    return fn


def _build_experiment(prices, sectors, min_size, step, max_size, iterations, seed, rank=None):
    _, panel = _load_returns(prices, sectors)
    schedule = SubsetSchedule.from_range(
        min_size=min_size,
        step=step,
        max_size=panel.n_stocks if max_size is None else max_size,
        iterations=iterations,
        seed=seed,
    )
    max_rank = 16 if rank is None else max(16, rank)
    return panel, SubsetExperiment(panel, schedule, max_rank=max_rank)


def _schedule_config(schedule: SubsetSchedule, panel, rank=None) -> dict:
    config = {
        "sizes": ",".join(str(s) for s in schedule.sizes),
        "iterations": schedule.iterations,
        "seed": schedule.seed,
        "n_stocks": panel.n_stocks,
        "n_days": panel.n_days,
    }
    if rank is not None:
        config["rank"] = rank
    return config


@main.group()
def experiment():
    """Subset-resampling experiments on a return panel."""


@experiment.command()
@_experiment_options
@_cli_errors
def scaling(prices, sectors, min_size, step, max_size, iterations, seed, out, emit):
    """Deviating-eigenvalue statistics by subset size."""
    emit_set = _emit_set(emit)
    panel, engine = _build_experiment(
        prices, sectors, min_size, step, max_size, iterations, seed
    )
    result = engine.eigenvalue_scaling()
    config = _schedule_config(engine.schedule, panel)
    meta, digest = _meta("experiment scaling", config)
    out_path = _out_dir(out)

    if "csv" in emit_set:
        _write_csv(
            out_path / "scaling_eigenvalues.csv",
            meta,
            ["size", "rank", "mean", "std", "n"],
            (
                [c.size, c.rank, _fmt(c.summary.mean), _fmt(c.summary.std), c.summary.n]
                for c in result.cells
            ),
        )
        click.echo(f"wrote {out_path / 'scaling_eigenvalues.csv'}")
    if "json" in emit_set:
        payload = {
            "command": "experiment scaling",
            "config": config,
            "config_hash": digest,
            "schedule": engine.schedule.to_dict(),
            "bounds": {
                str(size): {
                    "q": b.q,
                    "lambda_minus": b.lambda_minus,
                    "lambda_plus": b.lambda_plus,
                }
                for size, b in result.bounds.items()
            },
            "deviating_counts": {
                str(size): {"mean": s.mean, "std": s.std, "n": s.n}
                for size, s in result.deviating_counts.items()
            },
            "cells": [
                {
                    "size": c.size,
                    "rank": c.rank,
                    "mean": c.summary.mean,
                    "std": c.summary.std,
                    "n": c.summary.n,
                }
                for c in result.cells
            ],
        }
        _write_json(out_path / "scaling.json", payload)
        click.echo(f"wrote {out_path / 'scaling.json'}")


def _box_rows(rank: int, box_mean, box_std):
    for kind, box in (("mean", box_mean), ("std", box_std)):
        yield [
            rank,
            _fmt(box.minimum),
            _fmt(box.q1),
            _fmt(box.median),
            _fmt(box.q3),
            _fmt(box.maximum),
            kind,
        ]


_BOX_HEADER = ["rank", "min", "q1", "median", "q3", "max", "kind"]


def _summary_dict(s) -> dict:
    return {"mean": s.mean, "std": s.std, "n": s.n}


@experiment.command()
@_experiment_options
@click.option("--rank", default=1, show_default=True, help="Eigenvalue rank to track.")
@_cli_errors
def between(prices, sectors, min_size, step, max_size, iterations, seed, out, emit, rank):
    """Mode correlations across different subset sizes."""
    emit_set = _emit_set(emit)
    panel, engine = _build_experiment(
        prices, sectors, min_size, step, max_size, iterations, seed, rank=rank
    )
    result = engine.rho_between(rank)
    config = _schedule_config(engine.schedule, panel, rank=rank)
    meta, digest = _meta("experiment between", config)
    out_path = _out_dir(out)

    if "csv" in emit_set:
        _write_csv(
            out_path / "between_pairs.csv",
            meta,
            ["size_a", "size_b", "mean", "std", "n", "mean_abs", "std_abs"],
            (
                [
                    p.size_a,
                    p.size_b,
                    _fmt(p.stats.signed.mean),
                    _fmt(p.stats.signed.std),
                    p.stats.signed.n,
                    _fmt(p.stats.absolute.mean),
                    _fmt(p.stats.absolute.std),
                ]
                for p in result.pairs
            ),
        )
        _write_csv(
            out_path / "between_box.csv",
            meta,
            _BOX_HEADER,
            _box_rows(rank, result.box_mean, result.box_std),
        )
        click.echo(f"wrote {out_path / 'between_pairs.csv'}")
        click.echo(f"wrote {out_path / 'between_box.csv'}")
    if "json" in emit_set:
        payload = {
            "command": "experiment between",
            "config": config,
            "config_hash": digest,
            "schedule": engine.schedule.to_dict(),
            "rank": result.rank,
            "n_pairs": result.n_pairs,
            "correlations_per_pair": result.correlations_per_pair,
            "pairs": [
                {
                    "size_a": p.size_a,
                    "size_b": p.size_b,
                    "signed": _summary_dict(p.stats.signed),
                    "absolute": _summary_dict(p.stats.absolute),
                }
                for p in result.pairs
            ],
            "box_mean": result.box_mean.to_dict(),
            "box_std": result.box_std.to_dict(),
        }
        _write_json(out_path / "between.json", payload)
        click.echo(f"wrote {out_path / 'between.json'}")


@experiment.command()
@_experiment_options
@click.option("--rank", default=1, show_default=True, help="Eigenvalue rank to track.")
@_cli_errors
def within(prices, sectors, min_size, step, max_size, iterations, seed, out, emit, rank):
    """Mode correlations across equal-size subsets."""
    emit_set = _emit_set(emit)
    panel, engine = _build_experiment(
        prices, sectors, min_size, step, max_size, iterations, seed, rank=rank
    )
    result = engine.rho_within(rank)
    config = _schedule_config(engine.schedule, panel, rank=rank)
    meta, digest = _meta("experiment within", config)
    out_path = _out_dir(out)

    if "csv" in emit_set:
        _write_csv(
            out_path / "within_sizes.csv",
            meta,
            ["size", "mean", "std", "n", "mean_abs", "std_abs"],
            (
                [
                    s.size,
                    _fmt(s.stats.signed.mean),
                    _fmt(s.stats.signed.std),
                    s.stats.signed.n,
                    _fmt(s.stats.absolute.mean),
                    _fmt(s.stats.absolute.std),
                ]
                for s in result.sizes
            ),
        )
        _write_csv(
            out_path / "within_box.csv",
            meta,
            _BOX_HEADER,
            _box_rows(rank, result.box_mean, result.box_std),
        )
        click.echo(f"wrote {out_path / 'within_sizes.csv'}")
        click.echo(f"wrote {out_path / 'within_box.csv'}")
    if "json" in emit_set:
        payload = {
            "command": "experiment within",
            "config": config,
            "config_hash": digest,
            "schedule": engine.schedule.to_dict(),
            "rank": result.rank,
            "correlations_per_size": result.correlations_per_size,
            "sizes": [
                {
                    "size": s.size,
                    "signed": _summary_dict(s.stats.signed),
                    "absolute": _summary_dict(s.stats.absolute),
                }
                for s in result.sizes
            ],
            "box_mean": result.box_mean.to_dict(),
            "box_std": result.box_std.to_dict(),
        }
        _write_json(out_path / "within.json", payload)
        click.echo(f"wrote {out_path / 'within.json'}")


@main.command("ingest-check")
@click.option("--prices", required=True, help="Wide price CSV.")
@click.option("--sectors", required=True, help="Membership CSV (ticker,sector).")
@click.option(
    "--min-sector",
    default=DEFAULT_MIN_SECTOR,
    show_default=True,
    help="Smallest sector kept after the moment filters.",
)
@_out_option
@_cli_errors
def ingest_check(prices, sectors, min_sector, out):
    """Validate a raw panel and apply the universe filters.

    Stocks with constant series, |skewness| > 2, or kurtosis > 30 are
    dropped (kurtosis is the raw fourth standardized moment, normal = 3),
    then sectors left with fewer than --min-sector members.  Writes the
    filter report plus price and sector files for the surviving universe.
    """
    price_panel, sector_map = load_price_panel(prices, sectors)
    panel = log_returns(price_panel, sector_map)
    stats = descriptive_stats(panel)
    filtered, report = filter_universe(panel, stats, min_sector=min_sector)
    out_path = _out_dir(out)

    report_path = out_path / "filter_report.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")

    kept_rows = [price_panel.tickers.index(t) for t in filtered.tickers]
    write_price_csv(
        out_path / "filtered_prices.csv",
        filtered.tickers,
        price_panel.dates,
        price_panel.prices[kept_rows],
    )
    write_sector_csv(
        out_path / "filtered_sectors.csv",
        [(t, filtered.sector[t]) for t in filtered.tickers],
    )
    click.echo(
        f"kept {report.n_after} of {report.n_before} stocks; "
        f"report: {report_path}"
    )


if __name__ == "__main__":  # pragma: no cover
    main()
