"""Penalty-level rules: the closed-form design-free level and the simulated
design-adaptive quantile, plus the tail-bound ordering checks."""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import DomainError, NotNormalizedError

# Draws are generated in fixed-size blocks, each block's generator derived
# from (seed, block index), so any partitioning of blocks across workers
# reproduces the same numbers.
SIM_BLOCK = 512

# Acklam's rational approximation to the inverse normal CDF (relative error
# below 1.15e-9 on its own); one Newton step on the CDF pushes the absolute
# error to the order of double rounding.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_quantile(q):
    """Inverse standard normal CDF, accurate to well below 1e-9."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if q < _P_LOW:
        u = math.sqrt(-2.0 * math.log(q))
        x = ((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5])
             / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))
    elif q <= 1.0 - _P_LOW:
        u = q - 0.5
        r = u * u
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5])
              / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))
    # Newton polish on the tail with full relative precision: below the
    # median match the CDF, above it match the survival function (both via
    # erfc of a positive argument, avoiding cancellation near 1).
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if pdf > 0.0:
        if q < 0.5:
            cdf = 0.5 * math.erfc(-x / math.sqrt(2.0))
            x -= (cdf - q) / pdf
        else:
            sf = 0.5 * math.erfc(x / math.sqrt(2.0))
            x += (sf - (1.0 - q)) / pdf
    return x


@dataclass(frozen=True)
class PenaltySpec:
    """Everything needed to resolve a penalty level.

    rule is "x_independent" (closed form) or "x_dependent" (simulated
    quantile conditional on the design).  c > 1 is the slack multiplier,
    alpha the tail probability, sigma the noise level.  lam holds the
    resolved level once resolve_penalty has run; low_draws flags a
    simulation with fewer than 100 draws.
    """

    rule: str = "x_dependent"
    c: float = 1.1
    alpha: float = 0.1
    sigma: float = 1.0
    sim_draws: int = 10_000
    seed: int | tuple = 0
    lam: float | None = None
    low_draws: bool = False

    def __post_init__(self):
        if self.rule not in ("x_independent", "x_dependent"):
            raise DomainError(f"unknown penalty rule {self.rule!r}")
        if self.c <= 1:
            raise DomainError("c must be > 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if self.sigma <= 0:
            raise DomainError("sigma must be > 0")
        if self.lam is not None and self.lam <= 0:
            raise DomainError("resolved lam must be > 0")


def empirical_upper_quantile(draws, alpha):
    """The ceil(R(1-alpha))-th order statistic of R draws (no interpolation).

    The higher-order-statistic convention errs on the conservative side
    relative to interpolated quantiles.
    """
    draws = np.sort(np.asarray(draws, dtype=float))
    r = draws.size
    if r < 1:
        raise DomainError("need at least one draw")
    k = int(math.ceil(r * (1.0 - alpha)))
    k = min(max(k, 1), r)
    return float(draws[k - 1])


def sup_score_draws(x, draws, seed):
    """Simulated values of max_j |sum_i x_ij g_i| with i.i.d. standard
    normal g, generated in seed-derived blocks."""
    n = x.shape[0]
    out = np.empty(draws)
    done = 0
    block = 0
    while done < draws:
        k = min(SIM_BLOCK, draws - done)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(block,))
        )
        g = rng.standard_normal((k, n))
        out[done:done + k] = np.max(np.abs(g @ x), axis=1)
        done += k
        block += 1
    return out


def score_quantile(ds, alpha, sim_draws, seed):
    """Simulated (1-alpha)-quantile of the scaled sup-score, conditional on
    the design.  Deterministic given the seed."""
    if not ds.normalized:
        raise NotNormalizedError("score_quantile requires a normalized dataset")
    if sim_draws < 1:
        raise DomainError("sim_draws must be >= 1")
    return empirical_upper_quantile(sup_score_draws(ds.x, sim_draws, seed), alpha)


def lambda_x_independent(n, p, spec):
    """Closed-form level 2 c sigma sqrt(n) * quantile(1 - alpha / 2p)."""
    if n < 1 or p < 1:
        raise DomainError("need n >= 1 and p >= 1")
    q = 1.0 - spec.alpha / (2.0 * p)
    if not 0.0 < q < 1.0:
        raise DomainError("alpha / (2p) must lie in (0, 1)")
    return 2.0 * spec.c * spec.sigma * math.sqrt(n) * normal_quantile(q)


def lambda_x_dependent(ds, spec):
    """Simulated level 2 c sigma * Lambda_hat, where Lambda_hat is the
    empirical (1-alpha)-quantile of the sup-score conditional on the design."""
    if spec.sim_draws < 100:
        warnings.warn("fewer than 100 simulation draws; quantile is noisy")
    lam_q = score_quantile(ds, spec.alpha, spec.sim_draws, spec.seed)
    return 2.0 * spec.c * spec.sigma * lam_q


def resolve_penalty(spec, ds=None, n=None, p=None):
    """Return a copy of spec with lam filled in per its rule."""
    if spec.rule == "x_independent":
        if ds is not None:
            n, p = ds.n, ds.p
        if n is None or p is None:
            raise DomainError("x_independent rule needs n and p")
        lam = lambda_x_independent(n, p, spec)
        return replace(spec, lam=lam)
    if ds is None:
        raise DomainError("x_dependent rule needs a dataset")
    lam = lambda_x_dependent(ds, spec)
    return replace(spec, lam=lam, low_draws=spec.sim_draws < 100)


def tail_bound_check(n, p, alpha):
    """The pair (sqrt(n) * quantile(1 - alpha/2p), sqrt(2 n log(2p/alpha))).

    The first term dominates the simulated quantile and is itself dominated
    by the second; the ordering is asserted.
    """
    if n < 1 or p < 1:
        raise DomainError("need n >= 1 and p >= 1")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    mid = math.sqrt(n) * normal_quantile(1.0 - alpha / (2.0 * p))
    hi = math.sqrt(2.0 * n * math.log(2.0 * p / alpha))
    assert mid <= hi + 1e-12, "tail bound ordering violated"
    return mid, hi
