"""Preference disaggregation (UTA family) over criteria time series."""

from .disagg import (
    DisaggConfig,
    RankingChain,
    ValueModel,
    build_program,
    compare_rankings,
    fit,
    kendall_tau,
    rank_alternatives,
)
from .lp import LinearProgram, LpSolution, check_feasible, solve
from .postopt import (
    SolutionEnsemble,
    classical_minmax,
    mo_simulate,
    mo_solve,
    sample_mu,
    sample_mu_ordered,
    weighted_average,
)
from .timeseries import (
    CriterionSpec,
    MeasureTensor,
    ScaleGrid,
    ScalePolicy,
    TimeSeriesTensor,
    build_scale,
    extract_measures,
    load_tensor,
    locate,
    mean_measure,
    slope_measure,
)

__version__ = "0.1.0"

__all__ = [
    "CriterionSpec",
    "DisaggConfig",
    "LinearProgram",
    "LpSolution",
    "MeasureTensor",
    "RankingChain",
    "ScaleGrid",
    "ScalePolicy",
    "SolutionEnsemble",
    "TimeSeriesTensor",
    "ValueModel",
    "build_program",
    "build_scale",
    "check_feasible",
    "classical_minmax",
    "compare_rankings",
    "extract_measures",
    "fit",
    "kendall_tau",
    "load_tensor",
    "locate",
    "mean_measure",
    "mo_simulate",
    "mo_solve",
    "rank_alternatives",
    "sample_mu",
    "sample_mu_ordered",
    "slope_measure",
    "solve",
    "weighted_average",
    "__version__",
]
