"""Two-cell downlink max-min SINR beamforming toolkit.

Finite-system solvers (dual-uplink fixed points, downlink power recovery,
max-min bisection) for three cooperation levels, their large-system closed
forms, zero-forcing and half-reuse baselines, and a Monte Carlo sweep
harness with a CLI.
"""

from .asymptotic import (CURVE_HEADER, AsymptoticPoint, LoadingRegime,
                         LoadingResult, asymptotic_beamformers,
                         effective_bandwidth_load, export_curve,
                         effective_interference, gamma_star, gamma_star_residual,
                         is_feasible, lambda_bar, operating_point, optimal_beta,
                         p_bar, t_fixed_point, t_mcp_symmetric, td_gamma_star, td_rate)
from .baselines import Baseline, baseline_max_min, zf_directions
from .channel import ChannelSet, SystemConfig, sample_channels, stacked_channel
from .downlink import (MaxMinResult, PrecodingSolution, assemble_solution,
                       cbf_downlink_powers, duality_gap, evaluate_sinrs,
                       max_min_sinr, mcp_downlink_powers, mmse_directions,
                       scp_downlink_powers, solve_at_gamma)
from .dual_uplink import (DualSolution, Scheme, SolverSettings, cbf_dual_powers,
                          cbf_mu_search, mcp_dual_powers, mcp_mu_search,
                          scp_dual_powers, scp_mmse_direction, solve_dual,
                          uplink_sinr)
from .exceptions import (CellbeamError, DimensionError, InfeasibleError,
                         NotConvergedError, RankError)
from .experiments import (CSV_HEADER, ExperimentMode, ExperimentSpec, ResultRow,
                          run_experiment, summarize, write_csv)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticPoint", "Baseline", "CSV_HEADER", "CURVE_HEADER", "CellbeamError", "ChannelSet",
    "DimensionError", "DualSolution", "ExperimentMode", "ExperimentSpec",
    "InfeasibleError", "LoadingRegime", "LoadingResult", "MaxMinResult",
    "NotConvergedError", "PrecodingSolution", "RankError", "ResultRow", "Scheme",
    "SolverSettings", "SystemConfig", "assemble_solution", "asymptotic_beamformers",
    "baseline_max_min", "cbf_downlink_powers", "cbf_dual_powers", "cbf_mu_search",
    "duality_gap", "effective_bandwidth_load", "effective_interference",
    "evaluate_sinrs", "export_curve", "gamma_star", "gamma_star_residual", "is_feasible",
    "lambda_bar", "max_min_sinr", "mcp_downlink_powers", "mcp_dual_powers",
    "mcp_mu_search", "mmse_directions", "operating_point", "optimal_beta", "p_bar",
    "run_experiment", "sample_channels", "scp_downlink_powers", "scp_dual_powers",
    "scp_mmse_direction", "solve_at_gamma", "solve_dual", "stacked_channel",
    "summarize", "t_fixed_point", "t_mcp_symmetric", "td_gamma_star", "td_rate",
    "uplink_sinr", "write_csv",
]
