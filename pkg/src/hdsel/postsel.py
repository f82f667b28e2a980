"""Post-selection least squares: refits on a selected support, hard
thresholding, iterative noise-level estimation, and OLS inference."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import CoefVector, DomainError, HdselError, NotNormalizedError, objective_q
from .penalty import lambda_x_independent, score_quantile
from .solver import SolverOptions, solve_lasso


class DegenerateRefitError(HdselError):
    """Selected support too large for the degrees-of-freedom correction.

    Carries the sigma trace accumulated so far in ``trace``.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class SingularGramError(HdselError):
    """Selected columns are collinear; deduplicate columns and retry."""


@dataclass
class PostLassoFit:
    beta: CoefVector            # zero off support_used
    support_used: tuple
    objective: float            # Q(beta), unpenalized
    rank_deficient: bool


@dataclass
class SigmaEstimate:
    trace: list                 # sigma_hat^0, sigma_hat^1, ...
    final: float
    iterations_used: int
    converged: bool
    method: str                 # "lasso" or "post_lasso"


@dataclass
class OlsInference:
    support: tuple
    coefficients: np.ndarray    # one per selected column, original scale
    std_errors: np.ndarray
    ci90: list                  # (low, high) per selected column at `level`
    dof: int
    level: float
    sigma_hat: float            # sqrt(n Q / (n - k))


def post_lasso(ds, support):
    """Least squares restricted to `support`; entries off it are exactly 0.

    A rank-deficient restricted Gram falls back to the minimum-norm
    solution with ``rank_deficient=True``.  The empty support returns the
    zero vector.
    """
    idx = sorted(int(j) for j in set(support))
    if idx and (idx[0] < 0 or idx[-1] >= ds.p):
        raise DomainError("support indices out of range")
    beta = np.zeros(ds.p)
    rank_deficient = False
    if idx:
        xs = ds.x[:, idx]
        coef, _, rank, _ = np.linalg.lstsq(xs, ds.y, rcond=None)
        beta[idx] = coef
        rank_deficient = rank < len(idx)
    return PostLassoFit(
        beta=CoefVector.from_values(beta),
        support_used=tuple(idx),
        objective=objective_q(ds, beta),
        rank_deficient=rank_deficient,
    )


def threshold_select(beta, t):
    """Indices with |coefficient| strictly above the hard threshold t."""
    if t < 0:
        raise DomainError("threshold must be >= 0")
    values = beta.values if isinstance(beta, CoefVector) else np.asarray(beta, float)
    return tuple(int(j) for j in np.flatnonzero(np.abs(values) > t))


def estimate_sigma(ds, spec, method="post_lasso", nu=1e-8, max_iter=15,
                   solver_opts=None):
    """Iterative noise-level estimation.

    Starts from the conservative sigma_hat^0 = sqrt(Var_n[y]); at every step
    resolves lam = 2 c sigma_hat^k * Lambda_hat (or the design-free analogue
    per spec.rule), fits, and refines: sqrt(Q(beta_hat)) under
    method="lasso", or sqrt(n/(n - s_hat) * Q(beta_tilde)) with the
    refit beta_tilde and s_hat selected columns under method="post_lasso".
    Stops when successive estimates change by at most nu or after max_iter
    refinements.
    """
    if not ds.normalized:
        raise NotNormalizedError("estimate_sigma requires a normalized dataset")
    if method not in ("lasso", "post_lasso"):
        raise DomainError(f"unknown method {method!r}")
    if max_iter <= 1:
        raise DomainError("max_iter must be > 1")
    if nu < 0:
        raise DomainError("nu must be >= 0")
    n = ds.n
    # The simulated quantile depends on the design only; resolve it once.
    if spec.rule == "x_dependent":
        base = score_quantile(ds, spec.alpha, spec.sim_draws, spec.seed)
    else:
        base = lambda_x_independent(n, ds.p, spec) / (2.0 * spec.c * spec.sigma)

    ybar = float(np.mean(ds.y))
    trace = [float(np.sqrt(np.mean((ds.y - ybar) ** 2)))]
    opts = solver_opts or SolverOptions()
    warm = None
    converged = False
    while True:
        k = len(trace) - 1
        sig_k = trace[-1]
        if sig_k == 0.0:
            # Exact fit already; the penalty would vanish.
            converged = True
            break
        lam = 2.0 * spec.c * sig_k * base
        fit = solve_lasso(ds, lam, SolverOptions(
            max_sweeps=opts.max_sweeps, coord_tol=opts.coord_tol,
            kkt_tol=opts.kkt_tol, warm_start=warm,
        ))
        warm = fit.beta
        if method == "lasso":
            nxt = math.sqrt(objective_q(ds, fit.beta.values))
        else:
            s_hat = fit.beta.l0
            if s_hat >= n:
                raise DegenerateRefitError(
                    f"selected {s_hat} columns with n={n}; correction undefined",
                    trace,
                )
            refit = post_lasso(ds, fit.beta.support)
            nxt = math.sqrt(n / (n - s_hat) * refit.objective)
        trace.append(float(nxt))
        if abs(trace[-1] - trace[-2]) <= nu:
            converged = True
            break
        if len(trace) - 1 >= max_iter:
            break
    return SigmaEstimate(
        trace=trace,
        final=trace[-1],
        iterations_used=len(trace) - 1,
        converged=converged,
        method=method,
    )


def ols_inference(ds, support, level=0.9):
    """OLS on the selected columns in original units, with homoskedastic
    standard errors and Student-t confidence intervals.

    Normalization is undone through the recorded scales, so coefficients
    are interpretable on the input scale.
    """
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    idx = sorted(int(j) for j in set(support))
    if not idx:
        raise DomainError("support must be non-empty")
    if idx[0] < 0 or idx[-1] >= ds.p:
        raise DomainError("support indices out of range")
    n = ds.n
    k = len(idx)
    if k >= n:
        raise DomainError(f"support size {k} must be smaller than n={n}")
    x_raw = ds.x * ds.scales if ds.normalized else ds.x
    xs = x_raw[:, idx]
    gram = xs.T @ xs
    coef, _, rank, _ = np.linalg.lstsq(xs, ds.y, rcond=None)
    if rank < k:
        raise SingularGramError(
            "selected columns are collinear; deduplicate columns before inference"
        )
    resid = ds.y - xs @ coef
    dof = n - k
    s2 = float(resid @ resid) / dof
    ginv = np.linalg.inv(gram)
    se = np.sqrt(s2 * np.diag(ginv))
    tcrit = float(stats.t.ppf(1.0 - (1.0 - level) / 2.0, dof))
    ci = [(float(c - tcrit * e), float(c + tcrit * e)) for c, e in zip(coef, se)]
    return OlsInference(
        support=tuple(idx),
        coefficients=coef,
        std_errors=se,
        ci90=ci,
        dof=dof,
        level=level,
        sigma_hat=math.sqrt(s2),
    )
