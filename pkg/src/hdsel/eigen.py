"""Design diagnostics: restricted sparse eigenvalues, the restricted
eigenvalue over the cone, and evaluators for the finite-sample error,
sparsity, and model-selection bounds."""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import BudgetError, DomainError, NotNormalizedError, prediction_norm
from .exhaustive import ENUMERATION_BUDGET
from .postsel import SingularGramError


@dataclass
class SparseEigenReport:
    m: int
    support_T: tuple
    kappa_m: float              # sqrt of the minimal restricted Rayleigh quotient
    phi_m: float                # maximal restricted Rayleigh quotient (unsquared)
    mu_m: float                 # sqrt(phi_m) / kappa_m
    exact: bool


@dataclass
class ReEstimate:
    cbar: float
    lower_bound: float          # certified, from the sparse-eigenvalue bound
    sampled_upper: float        # running minimum over sampled cone directions
    m_used: int


@dataclass
class Theorem2Result:
    bound: int                  # selected-outside-support cap, floor(s * phi * L)
    L: float
    conclusive: bool
    m_star: int | None          # first admissible sparsity level, if any
    m_cap: int


def _gram(ds):
    return (ds.x.T @ ds.x) / ds.n


def _size_extremes(gram, base, others, size):
    """Extreme eigenvalues of gram over supports base + J, |J| = size."""
    count = math.comb(len(others), size)
    lo, hi = np.inf, -np.inf
    for extra in combinations(others, size):
        idx = base + list(extra)
        w = np.linalg.eigvalsh(gram[np.ix_(idx, idx)])
        lo = min(lo, w[0])
        hi = max(hi, w[-1])
    return lo, hi, count


def sparse_eigs_exact(ds, support_T, m):
    """Exhaustive minimal/maximal restricted sparse eigenvalues.

    Scans every off-support subset J with |J| <= m and takes the extreme
    eigenvalues of the restricted empirical Gram matrix on T union J.
    """
    if m < 0:
        raise DomainError("m must be >= 0")
    base = sorted(int(j) for j in set(support_T))
    others = [j for j in range(ds.p) if j not in set(base)]
    m_eff = min(m, len(others))
    if not base and m_eff == 0:
        raise DomainError("need a non-empty support or m >= 1")
    total = sum(math.comb(len(others), k) for k in range(0, m_eff + 1))
    if total > ENUMERATION_BUDGET:
        raise BudgetError(
            f"exact sparse eigenvalues would scan {total} subsets "
            f"(budget {ENUMERATION_BUDGET}); use the sampled estimate instead"
        )
    gram = _gram(ds)
    # Extremes over |J| <= m are attained at |J| = m: every smaller subset
    # extends to a size-m one whose span contains it.
    lo, hi, _ = _size_extremes(gram, base, others, m_eff)
    kappa = math.sqrt(max(lo, 0.0))
    return SparseEigenReport(
        m=m,
        support_T=tuple(base),
        kappa_m=kappa,
        phi_m=float(hi),
        mu_m=math.sqrt(hi) / kappa if kappa > 0 else math.inf,
        exact=True,
    )


def sparse_eig_profile(ds, support_T, m_max):
    """kappa(m), phi(m) for every m = 0..m_max in one enumeration pass."""
    base = sorted(int(j) for j in set(support_T))
    if not base:
        raise DomainError("profile needs a non-empty support")
    others = [j for j in range(ds.p) if j not in set(base)]
    m_eff = min(m_max, len(others))
    total = sum(math.comb(len(others), k) for k in range(0, m_eff + 1))
    if total > ENUMERATION_BUDGET:
        raise BudgetError(
            f"profile would scan {total} subsets (budget {ENUMERATION_BUDGET}); "
            "use the sampled estimate instead"
        )
    gram = _gram(ds)
    kappas, phis = [], []
    lo, hi = np.inf, -np.inf
    for k in range(0, m_max + 1):
        if k <= m_eff:
            # Per-size extremes suffice (spans nest); running extremes guard
            # the monotone invariant against rounding.
            klo, khi, _ = _size_extremes(gram, base, others, k)
            lo = min(lo, klo)
            hi = max(hi, khi)
        kappas.append(math.sqrt(max(lo, 0.0)))
        phis.append(float(hi))
    return kappas, phis


def re_lower_bound(report, s, cbar, m=None):
    """Certified lower bound kappa(m) * (1 - mu(m) cbar sqrt(s/m)), clamped
    at zero (valid for any m >= 1)."""
    m = report.m if m is None else m
    if m <= 0:
        raise DomainError("m must be >= 1")
    if not math.isfinite(report.mu_m):
        return 0.0
    return max(0.0, report.kappa_m * (1.0 - report.mu_m * cbar * math.sqrt(s / m)))


def re_sampled(ds, support_T, cbar, draws, seed=0):
    """Sampled upper estimate of the restricted eigenvalue over the cone
    ||delta_off||_1 <= cbar ||delta_T||_1.

    Directions cycle through: support-only, one-spike off-support at the
    cone boundary, and dense off-support at the boundary; each delta_T is
    uniform on the l1 sphere.  The running minimum can only overestimate
    the true minimum and is deterministic given the seed.
    """
    if draws < 1:
        raise DomainError("draws must be >= 1")
    base = sorted(int(j) for j in set(support_T))
    if not base:
        raise DomainError("support must be non-empty for the cone minimum")
    if cbar < 0:
        raise DomainError("cbar must be >= 0")
    others = [j for j in range(ds.p) if j not in set(base)]
    s = len(base)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    best = math.inf
    delta = np.zeros(ds.p)
    for d in range(draws):
        delta[:] = 0.0
        w = rng.dirichlet(np.ones(s)) * rng.choice((-1.0, 1.0), size=s)
        delta[base] = w
        mode = d % 3
        if others and cbar > 0 and mode == 1:
            j = others[int(rng.integers(len(others)))]
            delta[j] = cbar * rng.choice((-1.0, 1.0))
        elif others and cbar > 0 and mode == 2:
            off = rng.dirichlet(np.ones(len(others)))
            off *= rng.choice((-1.0, 1.0), size=len(others))
            delta[others] = cbar * off
        val = math.sqrt(s) * prediction_norm(ds, delta)  # ||delta_T||_1 == 1
        if val < best:
            best = val
    return best


def theorem1_bound(lam, s, n, kappa_cbar, c, c_s):
    """Prediction-norm error cap (1 + 1/c) lam sqrt(s) / (n kappa) + 2 c_s,
    valid on the event lam >= c n ||S||_inf."""
    if kappa_cbar <= 0:
        raise DomainError("kappa_cbar must be > 0 for an informative bound")
    if c <= 1:
        raise DomainError("c must be > 1")
    return (1.0 + 1.0 / c) * lam * math.sqrt(s) / (n * kappa_cbar) + 2.0 * c_s


def _phi_at(ds, base, others, size):
    """phi at one sparsity level: the maximum lives at the largest feasible
    subset size, so only |J| = size needs scanning.

    Sizes too expensive to enumerate fall back to the unrestricted Gram
    maximum, a valid upper envelope (phi is non-decreasing in the level);
    the envelope is tight whenever the Gram spectrum is flat.
    """
    size = min(size, len(others))
    if size == 0 and not base:
        raise DomainError("empty restriction")
    gram = _gram(ds)
    count = math.comb(len(others), size)
    if count > ENUMERATION_BUDGET:
        return float(np.linalg.eigvalsh(gram)[-1]), False
    _, hi, _ = _size_extremes(gram, base, others, size)
    return float(hi), True


def theorem2_bound(ds, support_T, lam, s, kappa_cbar, c, c_s, n, m_cap=None):
    """Cap on the number of columns selected outside the true support.

    Scans sparsity levels m for the first member of the admissible set
    {m : m > s phi(m ^ n) 2L}; phi is evaluated exhaustively.  Levels
    m <= 2 s L cannot qualify because phi >= 1 on unit-mean-square columns,
    so the scan starts past them.  If no level up to the cap qualifies the
    result carries the cap and ``conclusive=False``.
    """
    if not ds.normalized:
        raise NotNormalizedError("theorem2_bound requires a normalized dataset")
    if kappa_cbar <= 0:
        raise DomainError("kappa_cbar must be > 0 for an informative bound")
    if c <= 1:
        raise DomainError("c must be > 1")
    if s < 1:
        raise DomainError("s must be >= 1")
    cbar = (c + 1.0) / (c - 1.0)
    L = (2.0 * cbar / kappa_cbar
         + 3.0 * (cbar + 1.0) * n * c_s / (lam * math.sqrt(s))) ** 2
    base = sorted(int(j) for j in set(support_T))
    others = [j for j in range(ds.p) if j not in set(base)]
    if m_cap is None:
        m_cap = min(n, ds.p - len(base), 5000)
    m_start = int(math.floor(2.0 * s * L)) + 1
    phi_cache = {}
    for m in range(max(1, m_start), m_cap + 1):
        size = min(m, n, len(others))
        if size not in phi_cache:
            phi_cache[size] = _phi_at(ds, base, others, size)
        phi_m, _ = phi_cache[size]
        if m > s * phi_m * 2.0 * L:
            # phi is non-decreasing in m, so the first member minimizes it.
            return Theorem2Result(
                bound=int(math.floor(s * phi_m * L)),
                L=L, conclusive=True, m_star=m, m_cap=m_cap,
            )
    return Theorem2Result(bound=m_cap, L=L, conclusive=False, m_star=None, m_cap=m_cap)


def lemma3_zeta_bounds(lam, n, s, kappa_cbar, kappa_mhat, c, c_s, sigma, U):
    """Sup-norm error caps for the two separation-based selection results.

    Returns (part2, part3): part2 needs only the restricted eigenvalues;
    part3 additionally assumes pairwise column correlations below 1/(U s)
    with U > 5 cbar.
    """
    if kappa_cbar <= 0 or kappa_mhat <= 0:
        raise DomainError("eigenvalue arguments must be > 0")
    if c <= 1:
        raise DomainError("c must be > 1")
    cbar = (c + 1.0) / (c - 1.0)
    part2 = ((1.0 + 1.0 / c) * lam * math.sqrt(s) / (n * kappa_cbar * kappa_mhat)
             + 2.0 * c_s / kappa_mhat)
    if U <= 5.0 * cbar:
        raise DomainError(f"U must exceed 5 cbar = {5.0 * cbar:.6g}")
    part3 = (lam / n * (U + cbar) / (U - 5.0 * cbar)
             + min(sigma / math.sqrt(n), c_s)
             + 6.0 * cbar / (U - 5.0 * cbar) * c_s / math.sqrt(s)
             + 4.0 * cbar / U * n / lam * c_s ** 2 / s)
    return part2, part3


def lemma4_check(ds, support_T, beta0, u, lam):
    """Exact model-selection test from the stationarity conditions.

    Requires the truth: beta0 is the target vector and u = r + eps the
    composite error.  Returns True iff the off-support sup-norm condition
    and the on-support sign-preservation condition both hold, in which case
    the l1 solution selects exactly support_T.
    """
    base = sorted(int(j) for j in set(support_T))
    if not base:
        raise DomainError("support must be non-empty")
    others = [j for j in range(ds.p) if j not in set(base)]
    u = np.asarray(u, dtype=float)
    if u.shape != (ds.n,):
        raise DomainError("u must have length n")
    values = beta0.values if hasattr(beta0, "values") else np.asarray(beta0, float)
    xt = ds.x[:, base]
    xc = ds.x[:, others]
    gtt = xt.T @ xt / ds.n
    a = xt.T @ u / ds.n
    half = lam / (2.0 * ds.n)
    rhs = a - half * np.sign(values[base])
    try:
        w = np.linalg.solve(gtt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError("restricted Gram matrix is singular") from exc
    # The stationarity construction plugs in the target signs, so the
    # candidate must keep them: a coefficient shrunk through zero breaks
    # the characterization as well as an exact zero.
    shifted = values[base] + w
    cond2 = bool(
        np.min(np.abs(shifted)) > 0.0
        and np.all(np.sign(shifted) == np.sign(values[base]))
    )
    if others:
        gct = xc.T @ xt / ds.n
        b = xc.T @ u / ds.n
        cond1 = bool(np.max(np.abs(gct @ w - b)) <= half)
    else:
        cond1 = True
    return cond1 and cond2


def lemma7_l1_bound(lam, s, n, kappa_cbar, kappa_2cbar, c, c_s):
    """l1-norm error cap combining the prediction-norm bound with the
    wider-cone restricted eigenvalue."""
    if kappa_cbar <= 0 or kappa_2cbar <= 0:
        raise DomainError("eigenvalue arguments must be > 0")
    if c <= 1:
        raise DomainError("c must be > 1")
    cbar = (c + 1.0) / (c - 1.0)
    pred = (1.0 + 1.0 / c) * lam * math.sqrt(s) / (n * kappa_cbar) + 2.0 * c_s
    term1 = (1.0 + 2.0 * cbar) * math.sqrt(s) / kappa_2cbar * pred
    term2 = (1.0 + 1.0 / (2.0 * cbar)) * (2.0 * c / (c - 1.0)) * n / lam * c_s ** 2
    return term1 + term2
