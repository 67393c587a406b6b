"""Transport-map randomized quasi-Monte Carlo.

Train triangular normalizing-flow transport maps that push the unit cube
onto an unnormalized target density, then estimate expectations with
scrambled Sobol' points and self-normalized importance sampling.
"""

from .estimate import (
    EstimateError,
    EstimateReport,
    GaussianProposal,
    MapProposal,
    MethodSpec,
    ess,
    is_estimate,
    laplace_proposal,
    mfg_proposal,
    moments_f_list,
    mse_benchmark,
    prior_proposal,
    snis_estimate,
    write_raw_csv,
    write_summary_csv,
)
from .estimator import TransportMapSampler
from .flow import (
    FlowError,
    TransportMap,
    forward,
    identity_map,
    inverse,
    load_model,
    save_model,
)
from .lowdisc import PointSet, mc_points, owen_scramble, rqmc_points, sobol_raw
from .subspace import SubspaceError, SubspaceResult, estimate_subspace, split_map_config
from .targets import (
    Target,
    TargetError,
    banana_target,
    gaussian_target,
    logistic_target,
    make_logistic_synthetic,
)
from .train import FitConfig, FitResult, TrainError, derive_seed, fit

__version__ = "1.0.0"

__all__ = [
    "EstimateError", "EstimateReport", "GaussianProposal", "MapProposal",
    "MethodSpec", "ess", "is_estimate", "laplace_proposal", "mfg_proposal",
    "moments_f_list", "mse_benchmark", "prior_proposal", "snis_estimate",
    "write_raw_csv", "write_summary_csv", "TransportMapSampler",
    "FlowError", "TransportMap", "forward", "identity_map", "inverse",
    "load_model", "save_model", "PointSet", "mc_points", "owen_scramble",
    "rqmc_points", "sobol_raw", "SubspaceError", "SubspaceResult",
    "estimate_subspace", "split_map_config", "Target", "TargetError",
    "banana_target", "gaussian_target", "logistic_target",
    "make_logistic_synthetic", "FitConfig", "FitResult", "TrainError",
    "derive_seed", "fit", "__version__",
]
