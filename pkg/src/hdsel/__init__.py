"""Sparse linear regression with l1 penalization, data-driven penalty
selection, post-selection refits, exhaustive small-scale benchmarks, and
restricted-eigenvalue diagnostics."""

__version__ = "0.1.0"

from .core import (
    CoefVector,
    Dataset,
    TruthInfo,
    dataset_from_arrays,
    load_csv_dataset,
    normalize_columns,
    objective_q,
    prediction_norm,
    score,
)
from .eigen import (
    SparseEigenReport,
    re_lower_bound,
    re_sampled,
    sparse_eigs_exact,
    theorem1_bound,
    theorem2_bound,
)
from .exhaustive import OracleSolution, oracle_ols, solve_l0, solve_oracle
from .mc import McConfig, McReport, gen_design, run_mc, run_sigma_mc
from .penalty import (
    PenaltySpec,
    lambda_x_dependent,
    lambda_x_independent,
    normal_quantile,
    resolve_penalty,
    tail_bound_check,
)
from .postsel import (
    OlsInference,
    PostLassoFit,
    SigmaEstimate,
    estimate_sigma,
    ols_inference,
    post_lasso,
    threshold_select,
)
from .solver import LassoFit, SolverOptions, kkt_check, lasso_path, solve_lasso, soft_threshold

__all__ = [
    "CoefVector", "Dataset", "TruthInfo", "dataset_from_arrays",
    "load_csv_dataset", "normalize_columns", "objective_q", "prediction_norm",
    "score", "SparseEigenReport", "re_lower_bound", "re_sampled",
    "sparse_eigs_exact", "theorem1_bound", "theorem2_bound", "OracleSolution",
    "oracle_ols", "solve_l0", "solve_oracle", "McConfig", "McReport",
    "gen_design", "run_mc", "run_sigma_mc", "PenaltySpec", "lambda_x_dependent",
    "lambda_x_independent", "normal_quantile", "resolve_penalty",
    "tail_bound_check", "OlsInference", "PostLassoFit", "SigmaEstimate",
    "estimate_sigma", "ols_inference", "post_lasso", "threshold_select",
    "LassoFit", "SolverOptions", "kkt_check", "lasso_path", "solve_lasso",
    "soft_threshold",
]
