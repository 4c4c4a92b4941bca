"""Coverage and rate analysis of fractional frequency reuse in hexagonal cellular layouts."""
from .analytics import (
    Quadrature,
    SystemParams,
    average_coverage,
    coverage_curves,
    coverage_ffr,
    coverage_ffr_centre,
    coverage_ffr_edge,
    coverage_fr1,
    coverage_fr3,
    k_factor,
    rate_ffr,
    rate_fr1,
    rate_fr3,
    shat_threshold,
)
from .errors import ConfigurationError, FFRError, NumericalError, ParameterError, SolverError
from .fading import (
    FULLY_CORRELATED,
    INDEPENDENT,
    PED_A,
    VEH_A,
    ChannelProfile,
    CorrelationMode,
    SubbandPlan,
    draw_powers,
    subband_correlation,
)
from .geometry import NetworkLayout, UserPosition, build_layout, interferer_distances
from .montecarlo import Estimate, SimConfig, edge_fraction_vs_distance, simulate, simulate_coverage, simulate_rate, simulate_tdl_ffr_coverage
from .optimizer import (
    ThresholdSolution,
    optimal_coverage_threshold,
    optimal_rate_threshold,
    solve_tdoubleprime,
    solve_tprime,
)

__version__ = "0.1.0"
