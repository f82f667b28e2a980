"""Independent oracles used to cross-check the package implementations.

Everything here is deliberately written with plain loops or a different
linear-algebra route than the code under test.
"""

from itertools import combinations, product

import numpy as np


def loop_prediction_norm(x, delta):
    """Two-loop evaluation of sqrt(E_n[(x_i' delta)^2])."""
    n, p = x.shape
    acc = 0.0
    for i in range(n):
        dot = 0.0
        for j in range(p):
            dot += x[i, j] * delta[j]
        acc += dot * dot
    return np.sqrt(acc / n)


def loop_objective(x, y, beta):
    n, p = x.shape
    acc = 0.0
    for i in range(n):
        dot = 0.0
        for j in range(p):
            dot += x[i, j] * beta[j]
        acc += (y[i] - dot) ** 2
    return acc / n


def sign_pattern_lasso_minimum(x, y, lam):
    """Global minimum of E_n[(y - x'b)^2] + (lam/n)||b||_1 for tiny p.

    Enumerates every sign pattern in {-1, 0, +1}^p, solves the smooth
    restricted stationarity system, and evaluates the true objective at
    each candidate (plus the origin).  The candidate carrying the true
    minimizer's pattern attains the optimum, so the minimum over the
    candidate set equals the global minimum for generic designs.
    """
    n, p = x.shape
    gram = x.T @ x / n
    xy = x.T @ y / n
    half = lam / (2.0 * n)

    def true_objective(b):
        r = y - x @ b
        return float(np.mean(r * r)) + lam / n * float(np.sum(np.abs(b)))

    best = true_objective(np.zeros(p))
    for signs in product((-1.0, 0.0, 1.0), repeat=p):
        active = [j for j, s in enumerate(signs) if s != 0.0]
        if not active:
            continue
        sub = gram[np.ix_(active, active)]
        rhs = xy[active] - half * np.array([signs[j] for j in active])
        try:
            coef = np.linalg.solve(sub, rhs)
        except np.linalg.LinAlgError:
            coef, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        b = np.zeros(p)
        b[active] = coef
        best = min(best, true_objective(b))
    return best


def loop_oracle_enumeration(x, f, sigma, k_max):
    """Independent double-loop scan of the ideal risk criterion."""
    n, p = x.shape
    best_crit = np.inf
    best_supp = None
    for k in range(0, k_max + 1):
        for supp in combinations(range(p), k):
            if k == 0:
                fitted = np.zeros(n)
            else:
                xs = x[:, supp]
                coef, _, _, _ = np.linalg.lstsq(xs, f, rcond=None)
                fitted = xs @ coef
            r = f - fitted
            crit = float(np.mean(r * r)) + sigma * sigma * k / n
            if crit < best_crit:
                best_crit = crit
                best_supp = supp
    return best_crit, best_supp


def svd_restricted_extremes(x, support_T, m):
    """Restricted sparse extremes via singular values of the scaled
    submatrices (independent of the eigvalsh route)."""
    n, p = x.shape
    base = sorted(support_T)
    others = [j for j in range(p) if j not in set(base)]
    lo, hi = np.inf, -np.inf
    for k in range(0, min(m, len(others)) + 1):
        for extra in combinations(others, k):
            idx = base + list(extra)
            if not idx:
                continue
            sv = np.linalg.svd(x[:, idx] / np.sqrt(n), compute_uv=False)
            vals = np.zeros(len(idx))
            vals[: sv.size] = sv * sv
            lo = min(lo, float(np.min(vals)))
            hi = max(hi, float(np.max(vals)))
    return np.sqrt(max(lo, 0.0)), hi


def ar1_design(rng, n, p, rho):
    """Intercept plus AR(1) Gaussian covariates, unnormalized."""
    e = rng.standard_normal((n, p - 1))
    z = np.empty_like(e)
    z[:, 0] = e[:, 0]
    for j in range(1, p - 1):
        z[:, j] = rho * z[:, j - 1] + np.sqrt(1 - rho * rho) * e[:, j]
    return np.column_stack([np.ones(n), z])


def orthonormal_design(rng, n, p):
    """n x p design with empirical Gram exactly the identity."""
    assert n >= p
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return q * np.sqrt(n)
