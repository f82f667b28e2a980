"""Exhaustive small-scale solvers: the infeasible risk-minimization problem
defining the sparse target, the l0-penalized estimator, and the
known-support least-squares benchmark."""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import BudgetError, CoefVector, DomainError, HdselError, support_of
from .postsel import post_lasso

ENUMERATION_BUDGET = 2_000_000


class OracleInconsistencyError(HdselError):
    """The solved target violates its own first-order properties."""


@dataclass
class OracleSolution:
    beta0: CoefVector
    support_T: tuple
    s: int
    c_s: float                  # root mean square approximation error
    criterion_value: float      # E_n[(f - x'beta0)^2] + sigma^2 s / n


def subset_count(p, k_max):
    """Number of supports of size at most k_max out of p columns."""
    return sum(math.comb(p, k) for k in range(0, k_max + 1))


def _check_budget(p, k_max, what):
    total = subset_count(p, k_max)
    if total > ENUMERATION_BUDGET:
        raise BudgetError(
            f"{what} would enumerate {total} supports "
            f"(budget {ENUMERATION_BUDGET}); reduce k_max or p"
        )
    return total


def _best_subset(x, target, k_max, extra_cost):
    """Scan all supports of size <= k_max for the least-squares fit that
    minimizes mean squared error + extra_cost(k).

    Supports are visited in size order then lexicographically, and only a
    strictly smaller criterion replaces the incumbent, so ties resolve to
    the smaller, lexicographically first support.
    """
    n, p = x.shape
    best = (np.inf, None, None)
    for k in range(0, k_max + 1):
        for supp in combinations(range(p), k):
            if k == 0:
                fitted = np.zeros(n)
                coef = np.empty(0)
            else:
                xs = x[:, supp]
                coef, _, _, _ = np.linalg.lstsq(xs, target, rcond=None)
                fitted = xs @ coef
            r = target - fitted
            crit = float(np.mean(r * r)) + extra_cost(k)
            if crit < best[0]:
                best = (crit, supp, coef)
    return best


def solve_oracle(x, f, sigma, k_max):
    """Globally minimize E_n[(f - x'beta)^2] + sigma^2 ||beta||_0 / n over
    supports of size at most k_max by exhaustive enumeration."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    n, p = x.shape
    if f.shape != (n,):
        raise DomainError("f must have length n")
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if not 0 <= k_max <= min(n, p):
        raise DomainError("k_max must lie in [0, min(n, p)]")
    _check_budget(p, k_max, "solve_oracle")

    _, supp, coef = _best_subset(x, f, k_max, lambda k: sigma * sigma * k / n)
    beta = np.zeros(p)
    if supp:
        beta[list(supp)] = coef
        r = f - x[:, supp] @ coef
    else:
        r = f.copy()
    support_T = support_of(beta)
    # Generically support_T == supp and this equals the scanned minimum; it
    # can only differ when least squares lands exactly on zero.
    crit = float(np.mean(r * r)) + sigma * sigma * len(support_T) / n
    return OracleSolution(
        beta0=CoefVector(values=beta, support=support_T),
        support_T=support_T,
        s=len(support_T),
        c_s=float(np.sqrt(np.mean(r * r))),
        criterion_value=crit,
    )


def solve_l0(ds, lam, k_max):
    """Globally minimize Q(beta) + (lam/n) ||beta||_0 over supports of size
    at most k_max (the exhaustive information-criterion estimator)."""
    if lam < 0:
        raise DomainError("lam must be >= 0")
    if not 0 <= k_max <= min(ds.n, ds.p):
        raise DomainError("k_max must lie in [0, min(n, p)]")
    _check_budget(ds.p, k_max, "solve_l0")
    _, supp, coef = _best_subset(ds.x, ds.y, k_max, lambda k: lam * k / ds.n)
    beta = np.zeros(ds.p)
    if supp:
        beta[list(supp)] = coef
    return CoefVector.from_values(beta)


def oracle_ols(ds, support_T):
    """Least squares on the true support; meaningful only when the truth is
    known (simulation benchmarks)."""
    return post_lasso(ds, support_T).beta


def verify_orthogonality(sol, x, f, sigma, n):
    """Check the first-order properties of a solved target.

    The approximation residual must be exactly orthogonal to the selected
    columns, and (for sigma > 0) its largest correlation with any column
    must not exceed min(sigma / sqrt(n), c_s).  Returns that sup-norm.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    r = f - x @ sol.beta0.values
    corr = x.T @ r / n
    sup = float(np.max(np.abs(corr))) if corr.size else 0.0
    on_support = max((abs(corr[j]) for j in sol.support_T), default=0.0)
    if on_support > 1e-10:
        raise OracleInconsistencyError(
            f"selected-column correlation {on_support:.3e} exceeds 1e-10"
        )
    if sigma > 0:
        bound = min(sigma / math.sqrt(n), sol.c_s)
        if sup > bound + 1e-10:
            raise OracleInconsistencyError(
                f"sup correlation {sup:.6e} exceeds min(sigma/sqrt(n), c_s)={bound:.6e}"
            )
    return sup
