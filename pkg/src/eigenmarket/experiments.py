"""Subset-resampling experiments over a return panel.

The question these answer: which parts of the correlation spectrum are
properties of the market rather than of the particular stock list?  The
machinery draws many random subsets per target size, decomposes each
subset's correlation matrix, and measures (a) how deviating eigenvalues
scale with subset size, (b) how strongly same-rank eigenmodes correlate
across different sizes, and (c) across equal-size subsets.

Sampling is deterministic: the subset for (master seed, size, iteration)
comes from its own PCG64 substream, spawned via SeedSequence(seed,
spawn_key=(size, iteration)), so results do not depend on evaluation
order.  Repeated index sets are rejected and redrawn from the same
substream, in iteration order.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .errors import ConfigError, DataValidationError
from .factors import equal_weighted, factor_scores
from .ingest import ReturnPanel
from .modes import ProfilePoint, eigenmode_matrix, pearson_matrix
from .rmt import MPBounds, deviating, mp_bounds
from .spectra import (
    CorrelationMatrix,
    _correlation_from_standardized,
    correlation_matrix,
    eigh,
    standardize_returns,
)

DEFAULT_MIN_SIZE = 50
DEFAULT_STEP = 10
DEFAULT_ITERATIONS = 100
DEFAULT_BENCHMARK = 0.15

# Eigenvectors cached per subset are truncated to this many leading ranks.
DEFAULT_MAX_RANK = 16


@dataclass(frozen=True)
class SubsetSchedule:
    """Sizes to sample, iterations per size, and the master seed."""

    sizes: tuple[int, ...]
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ConfigError("schedule needs at least one size")
        if any(s < 1 for s in sizes):
            raise ConfigError("subset sizes must be >= 1")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("subset sizes must be strictly increasing")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")

    @classmethod
    def from_range(
        cls,
        min_size: int = DEFAULT_MIN_SIZE,
        step: int = DEFAULT_STEP,
        max_size: int | None = None,
        iterations: int = DEFAULT_ITERATIONS,
        seed: int = 0,
    ) -> "SubsetSchedule":
        """Arithmetic size ladder min, min+step, ... up to max_size."""
        if max_size is None:
            raise ConfigError("from_range needs max_size")
        if step < 1:
            raise ConfigError(f"step must be >= 1, got {step}")
        if max_size < min_size:
            raise ConfigError(
                f"max_size {max_size} smaller than min_size {min_size}"
            )
        return cls(
            sizes=tuple(range(min_size, max_size + 1, step)),
            iterations=iterations,
            seed=seed,
        )

    @property
    def n_sizes(self) -> int:
        return len(self.sizes)

    @property
    def n_size_pairs(self) -> int:
        return self.n_sizes * (self.n_sizes - 1) // 2

    def size_pairs(self) -> Iterator[tuple[int, int]]:
        for i, a in enumerate(self.sizes):
            for b in self.sizes[i + 1 :]:
                yield a, b

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "iterations": self.iterations,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SubsetSample:
    """One drawn subset: sorted, distinct universe row indices."""

    size: int
    iteration: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) != self.size:
            raise ConfigError(f"{len(idx)} indices for size {self.size}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigError("subset indices must be sorted and distinct")

    @property
    def label(self) -> str:
        return f"M{self.size}#{self.iteration}"


def sample_subsets(
    n_universe: int, schedule: SubsetSchedule
) -> dict[int, list[SubsetSample]]:
    """Draw the full grid of subsets for a universe of n_universe stocks.

    Every (size, iteration) cell gets its own RNG substream, and draws
    colliding with an earlier iteration's subset at the same size are
    retried on that substream until distinct.  A size equal to the whole
    universe admits only one combination; it is replicated across the
    iterations rather than rejected, since there is nothing to resample.

    Raises:
        ConfigError: a size exceeds the universe, or fewer distinct
            subsets exist than iterations demand.
    """
    out: dict[int, list[SubsetSample]] = {}
    for size in schedule.sizes:
        if size > n_universe:
            raise ConfigError(
                f"subset size {size} exceeds universe of {n_universe} stocks"
            )
        samples: list[SubsetSample] = []
        if size == n_universe:
            full = tuple(range(n_universe))
            samples = [
                SubsetSample(size=size, iteration=k, indices=full)
                for k in range(schedule.iterations)
            ]
            out[size] = samples
            continue
        if comb(n_universe, size) < schedule.iterations:
            raise ConfigError(
                f"cannot draw {schedule.iterations} distinct subsets of size "
                f"{size} from {n_universe} stocks"
            )
        seen: set[tuple[int, ...]] = set()
        for k in range(schedule.iterations):
            rng = np.random.default_rng(
                np.random.SeedSequence(schedule.seed, spawn_key=(size, k))
            )
            while True:
                draw = rng.choice(n_universe, size=size, replace=False)
                idx = tuple(sorted(int(i) for i in draw))
                if idx not in seen:
                    break
            seen.add(idx)
            samples.append(SubsetSample(size=size, iteration=k, indices=idx))
        out[size] = samples
    return out


@dataclass(frozen=True)
class StatSummary:
    """Mean and sample standard deviation (n-1 divisor) of n values.

    std is NaN when n < 2; callers treat that as a flagged, undefined
    spread rather than an error.
    """

    mean: float
    std: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"summary needs n >= 1, got {self.n}")

    @classmethod
    def from_values(cls, values) -> "StatSummary":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ConfigError("cannot summarize zero values")
        std = float(arr.std(ddof=1)) if arr.size > 1 else float("nan")
        return cls(mean=float(arr.mean()), std=std, n=int(arr.size))


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary; quartiles use linear interpolation (type 7)."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def __post_init__(self):
        values = (self.minimum, self.q1, self.median, self.q3, self.maximum)
        if all(np.isfinite(v) for v in values):
            if any(b < a for a, b in zip(values, values[1:])):
                raise DataValidationError(f"box summary out of order: {values}")

    @classmethod
    def from_values(cls, values) -> "BoxStats":
        arr = np.asarray(values, dtype=float).ravel()
        arr = arr[np.isfinite(arr)]
        if arr.size == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan, nan)
        lo, q1, med, q3, hi = np.percentile(arr, [0, 25, 50, 75, 100], method="linear")
        return cls(float(lo), float(q1), float(med), float(q3), float(hi))

    def to_dict(self) -> dict:
        return {
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
        }


@dataclass(frozen=True)
class CorrelationSummary:
    """Signed and absolute-value statistics over the same correlations."""

    signed: StatSummary
    absolute: StatSummary


@dataclass(frozen=True)
class RankSummary:
    size: int
    rank: int
    summary: StatSummary


@dataclass(frozen=True)
class ScalingResult:
    """Per-size, per-rank statistics of deviating eigenvalues."""

    schedule: SubsetSchedule
    cells: tuple[RankSummary, ...]
    deviating_counts: dict[int, StatSummary]
    bounds: dict[int, MPBounds]

    def mean_eigenvalue(self, size: int, rank: int) -> float:
        for cell in self.cells:
            if cell.size == size and cell.rank == rank:
                return cell.summary.mean
        raise ConfigError(f"no summary for size {size}, rank {rank}")


@dataclass(frozen=True)
class PairStat:
    size_a: int
    size_b: int
    stats: CorrelationSummary


@dataclass(frozen=True)
class RhoBetweenResult:
    """Same-rank mode correlations across different subset sizes."""

    rank: int
    schedule: SubsetSchedule
    pairs: tuple[PairStat, ...]
    correlations_per_pair: int
    box_mean: BoxStats
    box_std: BoxStats

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SizeStat:
    size: int
    stats: CorrelationSummary


@dataclass(frozen=True)
class RhoWithinResult:
    """Same-rank mode correlations across subsets of one size."""

    rank: int
    schedule: SubsetSchedule
    sizes: tuple[SizeStat, ...]
    correlations_per_size: int
    box_mean: BoxStats
    box_std: BoxStats


class SubsetExperiment:
    """Shared engine: subsets, their spectra, and mode series per rank.

    Decomposing every subset once and answering all three experiment
    questions from the cache keeps repeated studies on one panel cheap.
    Eigenvalues are cached in full; eigenvectors only for the leading
    ``max_rank`` ranks, which bounds memory on big schedules.
    """

    def __init__(
        self,
        panel: ReturnPanel,
        schedule: SubsetSchedule,
        max_rank: int = DEFAULT_MAX_RANK,
    ):
        if max_rank < 1:
            raise ConfigError(f"max_rank must be >= 1, got {max_rank}")
        if schedule.sizes[-1] > panel.n_stocks:
            raise ConfigError(
                f"largest subset size {schedule.sizes[-1]} exceeds the "
                f"universe of {panel.n_stocks} stocks"
            )
        self.panel = panel
        self.schedule = schedule
        self.max_rank = max_rank
        self.samples = sample_subsets(panel.n_stocks, schedule)
        self._z = standardize_returns(panel)
        self._eigenvalues: dict[int, np.ndarray] | None = None
        self._vectors: dict[int, np.ndarray] | None = None

    def _ensure_spectra(self) -> None:
        if self._eigenvalues is not None:
            return
        eigenvalues: dict[int, np.ndarray] = {}
        vectors: dict[int, np.ndarray] = {}
        for size in self.schedule.sizes:
            keep = min(self.max_rank, size)
            vals = np.empty((self.schedule.iterations, size))
            vecs = np.empty((self.schedule.iterations, size, keep))
            for k, sample in enumerate(self.samples[size]):
                zsub = self._z[list(sample.indices)]
                corr = CorrelationMatrix(_correlation_from_standardized(zsub))
                eig = eigh(corr)
                vals[k] = eig.eigenvalues
                vecs[k] = eig.eigenvectors[:, :keep]
            eigenvalues[size] = vals
            vectors[size] = vecs
        self._eigenvalues = eigenvalues
        self._vectors = vectors

    def eigenvalues(self, size: int) -> np.ndarray:
        """(iterations, size) array of descending eigenvalues."""
        if size not in self.samples:
            raise ConfigError(f"size {size} is not on the schedule")
        self._ensure_spectra()
        return self._eigenvalues[size]

    def mode_matrix(self, size: int, rank: int) -> np.ndarray:
        """(iterations, n_days) stack of rank-``rank`` mode series at one size."""
        if size not in self.samples:
            raise ConfigError(f"size {size} is not on the schedule")
        if rank < 1:
            raise ConfigError(f"rank must be >= 1, got {rank}")
        if rank > min(self.max_rank, size):
            raise ConfigError(
                f"rank {rank} not cached for size {size} "
                f"(cache keeps ranks 1..{min(self.max_rank, size)})"
            )
        self._ensure_spectra()
        vecs = self._vectors[size]
        out = np.empty((self.schedule.iterations, self.panel.n_days))
        for k, sample in enumerate(self.samples[size]):
            zsub = self._z[list(sample.indices)]
            out[k] = zsub.T @ vecs[k, :, rank - 1]
        return out

    def eigenvalue_scaling(self) -> ScalingResult:
        """Statistics of deviating eigenvalues by subset size and rank.

        Noise-band bounds are recomputed per size (q = n_days / size).
        A rank enters a size's table only for iterations where it
        deviates, so n varies by cell.
        """
        self._ensure_spectra()
        length = self.panel.n_days
        cells: list[RankSummary] = []
        counts: dict[int, StatSummary] = {}
        bounds_by_size: dict[int, MPBounds] = {}
        for size in self.schedule.sizes:
            bounds = mp_bounds(length, size)
            bounds_by_size[size] = bounds
            vals = self._eigenvalues[size]
            per_rank: dict[int, list[float]] = {}
            k_values = []
            for k in range(self.schedule.iterations):
                above = np.flatnonzero(vals[k] > bounds.lambda_plus)
                k_values.append(above.size)
                for i in above:
                    per_rank.setdefault(int(i) + 1, []).append(float(vals[k, i]))
            counts[size] = StatSummary.from_values(k_values)
            for rank in sorted(per_rank):
                cells.append(
                    RankSummary(
                        size=size,
                        rank=rank,
                        summary=StatSummary.from_values(per_rank[rank]),
                    )
                )
        return ScalingResult(
            schedule=self.schedule,
            cells=tuple(cells),
            deviating_counts=counts,
            bounds=bounds_by_size,
        )

    def rho_between(self, rank: int = 1) -> RhoBetweenResult:
        """Mode correlations for every unordered pair of different sizes.

        Each pair contributes iterations^2 correlations (every subset of
        the smaller size against every subset of the larger).
        """
        if self.schedule.n_sizes < 2:
            raise ConfigError("between-size correlations need at least 2 sizes")
        modes = {
            size: self.mode_matrix(size, rank) for size in self.schedule.sizes
        }
        pairs: list[PairStat] = []
        for a, b in self.schedule.size_pairs():
            corr = pearson_matrix(modes[a], modes[b]).ravel()
            pairs.append(
                PairStat(
                    size_a=a,
                    size_b=b,
                    stats=CorrelationSummary(
                        signed=StatSummary.from_values(corr),
                        absolute=StatSummary.from_values(np.abs(corr)),
                    ),
                )
            )
        means = [p.stats.signed.mean for p in pairs]
        stds = [p.stats.signed.std for p in pairs]
        return RhoBetweenResult(
            rank=rank,
            schedule=self.schedule,
            pairs=tuple(pairs),
            correlations_per_pair=self.schedule.iterations**2,
            box_mean=BoxStats.from_values(means),
            box_std=BoxStats.from_values(stds),
        )

    def rho_within(self, rank: int = 1) -> RhoWithinResult:
        """Mode correlations across distinct subsets of the same size.

        Each size contributes iterations * (iterations - 1) / 2
        correlations, the strict upper triangle of the iteration grid.
        """
        if self.schedule.iterations < 2:
            raise ConfigError("within-size correlations need iterations >= 2")
        sizes: list[SizeStat] = []
        for size in self.schedule.sizes:
            modes = self.mode_matrix(size, rank)
            corr = pearson_matrix(modes, modes)
            upper = corr[np.triu_indices(corr.shape[0], k=1)]
            sizes.append(
                SizeStat(
                    size=size,
                    stats=CorrelationSummary(
                        signed=StatSummary.from_values(upper),
                        absolute=StatSummary.from_values(np.abs(upper)),
                    ),
                )
            )
        means = [s.stats.signed.mean for s in sizes]
        stds = [s.stats.signed.std for s in sizes]
        it = self.schedule.iterations
        return RhoWithinResult(
            rank=rank,
            schedule=self.schedule,
            sizes=tuple(sizes),
            correlations_per_size=it * (it - 1) // 2,
            box_mean=BoxStats.from_values(means),
            box_std=BoxStats.from_values(stds),
        )


def eigenvalue_scaling(panel: ReturnPanel, schedule: SubsetSchedule) -> ScalingResult:
    """One-shot eigenvalue_scaling; see SubsetExperiment for reuse."""
    return SubsetExperiment(panel, schedule).eigenvalue_scaling()


def rho_between(
    panel: ReturnPanel, schedule: SubsetSchedule, rank: int = 1
) -> RhoBetweenResult:
    """One-shot rho_between; see SubsetExperiment for reuse."""
    return SubsetExperiment(panel, schedule, max_rank=max(DEFAULT_MAX_RANK, rank)).rho_between(rank)


def rho_within(
    panel: ReturnPanel, schedule: SubsetSchedule, rank: int = 1
) -> RhoWithinResult:
    """One-shot rho_within; see SubsetExperiment for reuse."""
    return SubsetExperiment(panel, schedule, max_rank=max(DEFAULT_MAX_RANK, rank)).rho_within(rank)


@dataclass(frozen=True)
class ModeEconomics:
    """One mode against both reference sets, with benchmark verdicts."""

    rank: int
    eigenvalue: float
    deviating: bool
    ew: ProfilePoint
    factor: ProfilePoint
    above_benchmark_ew: bool
    above_benchmark_factor: bool


@dataclass(frozen=True)
class EconomicMeaningReport:
    """Full-panel mode profiles against equal-weighted and factor references."""

    bounds: MPBounds
    deviating_count: int
    n_factors: int
    benchmark: float
    modes: tuple[ModeEconomics, ...]

    def deviating_modes(self) -> tuple[ModeEconomics, ...]:
        return tuple(m for m in self.modes if m.deviating)

    def bulk_modes(self) -> tuple[ModeEconomics, ...]:
        return tuple(m for m in self.modes if not m.deviating)


def economic_meaning(
    panel: ReturnPanel, benchmark: float = DEFAULT_BENCHMARK
) -> EconomicMeaningReport:
    """Profile every eigenmode of a panel against economic reference series.

    References are the equal-weighted market and sector averages, and the
    leading standardized factor scores (as many as there are deviating
    eigenvalues, but at least one).  A mode clears the benchmark against
    a reference set when its best absolute correlation exceeds it.
    """
    if not 0.0 < benchmark < 1.0:
        raise ConfigError(f"benchmark must lie in (0, 1), got {benchmark}")
    eig = eigh(correlation_matrix(panel))
    bounds = mp_bounds(panel.n_days, panel.n_stocks)
    dev = deviating(eig, bounds)
    n_factors = max(dev.count, 1)

    ew_refs = equal_weighted(panel)
    f_refs = factor_scores(panel, n_factors=n_factors, eig=eig)

    all_modes = eigenmode_matrix(panel, eig)
    ew_matrix = np.stack([r.values for r in ew_refs])
    f_matrix = np.stack([r.values for r in f_refs])
    ew_corr = pearson_matrix(all_modes, ew_matrix)
    f_corr = pearson_matrix(all_modes, f_matrix)

    modes: list[ModeEconomics] = []
    dev_ranks = set(dev.ranks)
    for i in range(panel.n_stocks):
        je = int(np.argmax(np.abs(ew_corr[i])))
        jf = int(np.argmax(np.abs(f_corr[i])))
        ew_point = ProfilePoint(
            rank=i + 1,
            reference=ew_refs[je].label,
            corr=float(ew_corr[i, je]),
            abs_corr=float(abs(ew_corr[i, je])),
        )
        f_point = ProfilePoint(
            rank=i + 1,
            reference=f_refs[jf].label,
            corr=float(f_corr[i, jf]),
            abs_corr=float(abs(f_corr[i, jf])),
        )
        modes.append(
            ModeEconomics(
                rank=i + 1,
                eigenvalue=float(eig.eigenvalues[i]),
                deviating=(i + 1) in dev_ranks,
                ew=ew_point,
                factor=f_point,
                above_benchmark_ew=ew_point.abs_corr > benchmark,
                above_benchmark_factor=f_point.abs_corr > benchmark,
            )
        )
    return EconomicMeaningReport(
        bounds=bounds,
        deviating_count=dev.count,
        n_factors=n_factors,
        benchmark=benchmark,
        modes=tuple(modes),
    )
