"""regperc: level-set percolation of random regular graph eigenvectors."""

from .config import ExperimentConfig
from .errors import (
    BracketFailure,
    ConfigError,
    DegenerateKernel,
    DegreeTooLarge,
    DegreeTooSmall,
    DomainError,
    EmptyData,
    EmptySpectrum,
    KTooLarge,
    LengthMismatch,
    MissingColumn,
    NoConvergence,
    NonMonotoneGrowth,
    NoTransition,
    NotPSD,
    NotSymmetric,
    NumericalError,
    OddProduct,
    OutsideSpectrum,
    RegPercError,
    RejectionLimit,
    ResidualTooLarge,
    TooFewPoints,
    TooLarge,
    TruncationTooTight,
    UnknownCommand,
    ValidationError,
)
from .experiments import Fig5Result, fig5
from .gaussian_wave import (
    TreeBall,
    WaveModel,
    WaveSampleBatch,
    chebyshev_u,
    covariance_matrix,
    gaussian_tail,
    path_sum_tail_bound,
    path_sum_variance,
    phi,
    phi_sequence,
    phi_total,
    psd_factor,
    sample_ball,
    subcritical_bound,
    supercritical_bound,
)
from .level_sets import (
    RatioCurve,
    ThresholdEstimate,
    brute_force_ratio,
    critical_curve_experiment,
    ratio_at,
    sharpening_experiment,
    steepest_point,
    steepest_point_of_samples,
    sweep_ratio_curve,
)
from .logging import RunLog, RunLogger, TaskLog, TaskStatus
from .parallel import derive_seed
from .percolation_model import (
    CriticalResult,
    PathKernel,
    TransferKernel,
    critical_alpha,
    growth_rate,
    mc_critical_alpha,
    mc_growth_rate,
    model_curve,
    orthant_mc,
    orthant_mc_profile,
    path_kernel,
    path_probabilities,
    transfer_kernel,
)
from .plot import PlotSpec, plot_svg
from .regular_graph import (
    DISCONNECTED,
    Graph,
    GraphStats,
    component_count,
    count_cycles,
    diameter,
    generate_regular,
    graph_stats,
    read_graph,
    write_graph,
)
from .spectral import (
    EigenPair,
    SpectrumSupport,
    eigendecompose,
    eigenvalues,
    mckay_density,
    mckay_histogram_distance,
    mixing_exponent,
    nearest_eigenpair,
    spectrum_support,
)

__all__ = [
    "generate_regular",
    "Graph",
    "GraphStats",
    "DISCONNECTED",
    "count_cycles",
    "diameter",
    "component_count",
    "graph_stats",
    "read_graph",
    "write_graph",
    "EigenPair",
    "SpectrumSupport",
    "eigendecompose",
    "eigenvalues",
    "spectrum_support",
    "mckay_density",
    "mckay_histogram_distance",
    "mixing_exponent",
    "nearest_eigenpair",
    "RatioCurve",
    "ThresholdEstimate",
    "sweep_ratio_curve",
    "ratio_at",
    "brute_force_ratio",
    "steepest_point",
    "steepest_point_of_samples",
    "critical_curve_experiment",
    "sharpening_experiment",
    "WaveModel",
    "TreeBall",
    "WaveSampleBatch",
    "chebyshev_u",
    "phi",
    "phi_sequence",
    "covariance_matrix",
    "psd_factor",
    "sample_ball",
    "phi_total",
    "subcritical_bound",
    "supercritical_bound",
    "gaussian_tail",
    "path_sum_variance",
    "path_sum_tail_bound",
    "PathKernel",
    "TransferKernel",
    "CriticalResult",
    "path_kernel",
    "transfer_kernel",
    "growth_rate",
    "path_probabilities",
    "critical_alpha",
    "model_curve",
    "orthant_mc",
    "orthant_mc_profile",
    "mc_growth_rate",
    "mc_critical_alpha",
    "ExperimentConfig",
    "PlotSpec",
    "plot_svg",
    "fig5",
    "Fig5Result",
    "derive_seed",
    "RunLog",
    "RunLogger",
    "TaskLog",
    "TaskStatus",
    "RegPercError",
    "ValidationError",
    "NumericalError",
    "OddProduct",
    "DegreeTooLarge",
    "DegreeTooSmall",
    "KTooLarge",
    "TooLarge",
    "LengthMismatch",
    "TooFewPoints",
    "DomainError",
    "OutsideSpectrum",
    "EmptySpectrum",
    "UnknownCommand",
    "MissingColumn",
    "EmptyData",
    "ConfigError",
    "RejectionLimit",
    "NotSymmetric",
    "ResidualTooLarge",
    "NoTransition",
    "NotPSD",
    "DegenerateKernel",
    "NoConvergence",
    "TruncationTooTight",
    "BracketFailure",
    "NonMonotoneGrowth",
]
