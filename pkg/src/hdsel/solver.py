"""Cyclic coordinate descent for the l1-penalized least-squares problem.

The objective is Q(beta) + (lam/n) * ||beta||_1 with
Q(beta) = E_n[(y_i - x_i' beta)^2].  On a dataset with unit-mean-square
columns the coordinate minimizer has unit denominator, so each update is a
single soft-threshold.  Fits are certified a posteriori by the stationarity
residual ``kkt_check``.
"""

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .core import (
    CoefVector,
    DimensionError,
    DomainError,
    NotNormalizedError,
    objective_q,
)


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0) for threshold t >= 0."""
    if t < 0:
        raise DomainError("threshold must be >= 0")
    az = abs(z) - t
    if az <= 0.0:
        return 0.0
    return az if z > 0 else -az


@dataclass
class SolverOptions:
    max_sweeps: int = 10_000
    coord_tol: float = 1e-9         # max absolute coordinate change per sweep
    kkt_tol: float = 1e-6           # relative to lam/n
    warm_start: np.ndarray | None = None
    track_objective: bool = False   # record the penalized objective per sweep

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise DomainError("max_sweeps must be >= 1")
        if self.coord_tol <= 0 or self.kkt_tol <= 0:
            raise DomainError("tolerances must be > 0")


@dataclass
class LassoFit:
    beta: CoefVector
    lam: float
    objective: float                # Q(beta) + (lam/n) ||beta||_1
    kkt_violation: float
    iterations: int                 # coordinate sweeps performed
    converged: bool
    objective_trace: list | None = None


@njit(cache=True)
def _cd_sweeps(x, y, beta, resid, thresh, coord_tol, max_sweeps, one_at_a_time):
    """Run cyclic sweeps in place; returns (sweeps, last max coordinate change).

    x must be Fortran-ordered (column slices are contiguous).  resid must
    equal y - x @ beta on entry and keeps that meaning on exit.
    """
    n, p = x.shape
    sweeps = 0
    max_delta = np.inf
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            dot = 0.0
            for i in range(n):
                dot += x[i, j] * resid[i]
            z = bj + dot / n
            az = abs(z) - thresh
            if az <= 0.0:
                nb = 0.0
            elif z > 0.0:
                nb = az
            else:
                nb = -az
            d = nb - bj
            if d != 0.0:
                beta[j] = nb
                for i in range(n):
                    resid[i] -= x[i, j] * d
                if abs(d) > max_delta:
                    max_delta = abs(d)
        sweeps += 1
        if max_delta < coord_tol or one_at_a_time:
            break
    return sweeps, max_delta


def kkt_check(ds, fit):
    """Largest violation of the subgradient stationarity conditions.

    On the support the condition is 2 E_n[x_ij (y - x'beta)] = sign(beta_j)
    lam / n; off the support the same moment must not exceed lam / n in
    absolute value.
    """
    beta = fit.beta.values
    if beta.shape != (ds.p,):
        raise DimensionError("fit does not match dataset dimension")
    g = (2.0 / ds.n) * (ds.x.T @ (ds.y - ds.x @ beta))
    lam_n = fit.lam / ds.n
    viol = np.maximum(np.abs(g) - lam_n, 0.0)
    supp = list(fit.beta.support)
    if supp:
        viol[supp] = np.abs(g[supp] - np.sign(beta[supp]) * lam_n)
    return float(np.max(viol)) if viol.size else 0.0


def solve_lasso(ds, lam, opts=None):
    """Minimize Q(beta) + (lam/n)||beta||_1 by cyclic coordinate descent.

    Deterministic given (ds, lam, opts).  The returned fit has
    ``converged`` set only when both the per-sweep coordinate change and the
    stationarity residual pass their tolerances; hitting ``max_sweeps``
    returns the current iterate with ``converged=False``.
    """
    if not ds.normalized:
        raise NotNormalizedError("solve_lasso requires a normalized dataset")
    if lam <= 0:
        raise DomainError("lam must be > 0")
    opts = opts or SolverOptions()
    n, p = ds.n, ds.p

    if opts.warm_start is not None:
        beta = np.array(
            opts.warm_start.values
            if isinstance(opts.warm_start, CoefVector)
            else opts.warm_start,
            dtype=float,
        )
        if beta.shape != (p,):
            raise DimensionError("warm_start has the wrong length")
    else:
        beta = np.zeros(p)

    resid = ds.y - ds.x @ beta
    thresh = lam / (2.0 * n)
    lam_n = lam / n
    trace = [] if opts.track_objective else None

    def penalized(b):
        return objective_q(ds, b) + lam_n * float(np.sum(np.abs(b)))

    sweeps_done = 0
    converged = False
    kkt = np.inf
    stalls = 0
    while sweeps_done < opts.max_sweeps:
        budget = opts.max_sweeps - sweeps_done
        step = 1 if opts.track_objective else budget
        used, max_delta = _cd_sweeps(
            ds.x, ds.y, beta, resid, thresh, opts.coord_tol, step,
            opts.track_objective,
        )
        sweeps_done += used
        if trace is not None:
            trace.append(penalized(beta))
        if max_delta >= opts.coord_tol and sweeps_done < opts.max_sweeps:
            continue
        fit_now = LassoFit(
            beta=CoefVector.from_values(beta),
            lam=lam, objective=0.0, kkt_violation=0.0,
            iterations=sweeps_done, converged=False,
        )
        kkt = kkt_check(ds, fit_now)
        if kkt <= opts.kkt_tol * lam_n and max_delta < opts.coord_tol:
            converged = True
            break
        if sweeps_done >= opts.max_sweeps:
            break
        # Stationarity not yet certified: refresh the residual to purge
        # accumulated drift and keep sweeping.  Give up once refreshed
        # sweeps stop moving any coordinate.
        stalls += 1
        if stalls > 5:
            break
        resid = ds.y - ds.x @ beta

    coef = CoefVector.from_values(beta)
    return LassoFit(
        beta=coef,
        lam=lam,
        objective=objective_q(ds, beta) + lam_n * coef.l1,
        kkt_violation=float(kkt),
        iterations=sweeps_done,
        converged=converged,
        objective_trace=trace,
    )


def lasso_path(ds, lambdas, opts=None):
    """Solve along a strictly descending penalty sequence with warm starts."""
    lambdas = [float(v) for v in lambdas]
    if any(v <= 0 for v in lambdas):
        raise DomainError("penalty levels must be > 0")
    if any(a <= b for a, b in zip(lambdas, lambdas[1:])):
        raise DomainError("penalty sequence must be strictly descending")
    opts = opts or SolverOptions()
    fits = []
    warm = opts.warm_start
    for lam in lambdas:
        fit = solve_lasso(ds, lam, replace(opts, warm_start=warm))
        fits.append(fit)
        warm = fit.beta
    return fits
