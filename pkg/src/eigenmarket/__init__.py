"""Correlation-spectrum analytics for equity return panels.

Load or synthesize a daily return panel, decompose its correlation
matrix, compare the spectrum against the pure-noise band, and probe how
stable each eigenmode is under random re-selection of the stock universe.
"""

from .errors import (
    ConfigError,
    DataValidationError,
    EigenmarketError,
    NumericalError,
)
from .experiments import (
    BoxStats,
    EconomicMeaningReport,
    RhoBetweenResult,
    RhoWithinResult,
    ScalingResult,
    StatSummary,
    SubsetExperiment,
    SubsetSample,
    SubsetSchedule,
    economic_meaning,
    eigenvalue_scaling,
    rho_between,
    rho_within,
    sample_subsets,
)
from .factors import ReferenceSeries, equal_weighted, factor_scores
from .ingest import (
    DescriptiveStats,
    FilterReport,
    PricePanel,
    ReturnPanel,
    descriptive_stats,
    filter_universe,
    load_price_panel,
    log_returns,
)
from .modes import (
    EigenmodeSeries,
    ProfilePoint,
    eigenmode,
    eigenmode_matrix,
    max_corr_profile,
    pearson,
    pearson_matrix,
)
from .rmt import DeviatingSet, MPBounds, deviating, mp_bounds, mp_density
from .spectra import (
    CorrelationMatrix,
    EigenSystem,
    correlation_matrix,
    eigh,
    fix_signs,
    standardize_returns,
)
from .synth import (
    GeneratedMarket,
    MarketModelSpec,
    generate_market,
    generate_noise,
    write_market_files,
)

__version__ = "0.1.0"

__all__ = [
    "BoxStats",
    "ConfigError",
    "CorrelationMatrix",
    "DataValidationError",
    "DescriptiveStats",
    "DeviatingSet",
    "EconomicMeaningReport",
    "EigenSystem",
    "EigenmarketError",
    "EigenmodeSeries",
    "FilterReport",
    "GeneratedMarket",
    "MPBounds",
    "MarketModelSpec",
    "NumericalError",
    "PricePanel",
    "ProfilePoint",
    "ReferenceSeries",
    "ReturnPanel",
    "RhoBetweenResult",
    "RhoWithinResult",
    "ScalingResult",
    "StatSummary",
    "SubsetExperiment",
    "SubsetSample",
    "SubsetSchedule",
    "correlation_matrix",
    "descriptive_stats",
    "deviating",
    "economic_meaning",
    "eigenmode",
    "eigenmode_matrix",
    "eigenvalue_scaling",
    "eigh",
    "equal_weighted",
    "factor_scores",
    "filter_universe",
    "fix_signs",
    "generate_market",
    "generate_noise",
    "load_price_panel",
    "log_returns",
    "max_corr_profile",
    "mp_bounds",
    "mp_density",
    "pearson",
    "pearson_matrix",
    "rho_between",
    "rho_within",
    "sample_subsets",
    "standardize_returns",
    "write_market_files",
]
