"""Seeded Monte Carlo engine: correlated Gaussian designs, estimator sweeps
(l1, refit, known-support benchmark, iterative noise estimation), and
aggregate reports with selection histograms."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from .core import Dataset, DomainError, TruthInfo, normalize_columns, prediction_norm
from .eigen import sparse_eigs_exact
from .penalty import PenaltySpec, normal_quantile, score_quantile
from .postsel import estimate_sigma, post_lasso
from .solver import solve_lasso

# Reps are aggregated in fixed-size blocks so partial sums do not depend on
# the worker count; block order is restored before reduction.
BLOCK_REPS = 25

PROFILE_VALUES = (1.0, 1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5)


def default_beta0(p):
    """The six-coefficient simulation profile on the leading covariates.

    Column 0 is the intercept and carries no signal; the profile values sit
    on columns 1..6.
    """
    if p < 1 + len(PROFILE_VALUES):
        raise DomainError(f"default profile needs p >= {1 + len(PROFILE_VALUES)}")
    beta0 = np.zeros(p)
    beta0[1:1 + len(PROFILE_VALUES)] = PROFILE_VALUES
    return beta0


@dataclass
class McConfig:
    n: int = 100
    p: int = 500                    # total columns including the intercept
    s: int = 6
    beta0: np.ndarray | None = None  # None selects the default profile
    rho: float = 0.5
    sigma2: float = 1.0
    reps: int = 1000
    alpha: float = 0.1
    c: float = 1.1
    penalty_rule: str = "x_dependent"
    sigma_mode: str = "known"       # known | estimated_lasso | estimated_postlasso
    penalty_draws: int = 500        # quantile-simulation draws per repetition
    sigma_nu: float = 1e-8
    sigma_max_iter: int = 15
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not -1.0 < self.rho < 1.0:
            raise DomainError("rho must lie in (-1, 1)")
        if self.sigma2 <= 0:
            raise DomainError("sigma2 must be > 0")
        if self.sigma_mode not in ("known", "estimated_lasso", "estimated_postlasso"):
            raise DomainError(f"unknown sigma_mode {self.sigma_mode!r}")
        if self.beta0 is None:
            if self.s != len(PROFILE_VALUES):
                raise DomainError(
                    f"default profile has s={len(PROFILE_VALUES)}; pass beta0 for other s"
                )
            self.beta0 = default_beta0(self.p)
        else:
            self.beta0 = np.asarray(self.beta0, dtype=float)
            if self.beta0.shape != (self.p,):
                raise DomainError("beta0 must have length p")
            nz = int(np.sum(self.beta0 != 0.0))
            if nz != self.s:
                raise DomainError(f"beta0 has {nz} non-zeros but s={self.s}")
        if self.s > self.p:
            raise DomainError("s must not exceed p")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")


@dataclass
class EstimatorStats:
    mean_l0: float
    bias_norm: float
    mean_pred_error: float


@dataclass
class McReport:
    estimators: dict
    hist_selected: dict             # counts of |selected support| per rep
    hist_true_pos: dict             # counts of |selected ∩ true| per rep
    rep_count: int
    failures: int
    flagged: bool
    seed: int
    config: dict
    sigma_summary: dict | None = None


def gen_design(config, rep_index):
    """One simulated dataset: intercept plus AR(1)-correlated Gaussian
    covariates, a Gaussian response, unit-mean-square normalization, and
    the recorded truth.

    The per-repetition generator is derived from (seed, rep_index), so
    repetitions are reproducible independently of execution order.
    """
    n, p, rho = config.n, config.p, config.rho
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(config.seed, rep_index, 0))
    )
    e = rng.standard_normal((n, p - 1))
    if p > 1:
        e[:, 1:] *= math.sqrt(1.0 - rho * rho)
        z = lfilter([1.0], [1.0, -rho], e, axis=1)
    else:
        z = e
    x_raw = np.column_stack([np.ones(n), z])
    sigma = math.sqrt(config.sigma2)
    f = x_raw @ config.beta0
    y = f + sigma * rng.standard_normal(n)
    x, scales = normalize_columns(x_raw)
    beta0_norm = config.beta0 * scales
    truth = TruthInfo(f=f, sigma=sigma, beta0=beta0_norm)
    return Dataset(x=x, y=y, scales=scales, normalized=True, truth=truth)


def _resolve_rep_lambda(config, ds, sigma, rep_index):
    if config.penalty_rule == "x_dependent":
        lam_q = score_quantile(
            ds, config.alpha, config.penalty_draws, (config.seed, rep_index, 1)
        )
    else:
        lam_q = math.sqrt(ds.n) * normal_quantile(1.0 - config.alpha / (2.0 * ds.p))
    return 2.0 * config.c * sigma * lam_q, lam_q


def _run_rep(config, rep_index):
    """All estimators on one repetition; returns a flat record."""
    ds = gen_design(config, rep_index)
    truth = ds.truth
    true_supp = set(truth.support_T)
    sigma_true = truth.sigma

    sigma_hat = None
    sigma0 = None
    if config.sigma_mode == "known":
        lam, _ = _resolve_rep_lambda(config, ds, sigma_true, rep_index)
    else:
        method = "lasso" if config.sigma_mode == "estimated_lasso" else "post_lasso"
        spec = PenaltySpec(
            rule=config.penalty_rule, c=config.c, alpha=config.alpha,
            sigma=1.0, sim_draws=config.penalty_draws,
            seed=(config.seed, rep_index, 1),
        )
        est = estimate_sigma(ds, spec, method=method, nu=config.sigma_nu,
                             max_iter=config.sigma_max_iter)
        sigma_hat = est.final
        sigma0 = est.trace[0]
        lam, _ = _resolve_rep_lambda(config, ds, max(sigma_hat, 1e-12), rep_index)

    fit = solve_lasso(ds, lam)
    supp = fit.beta.support
    refit = post_lasso(ds, supp)
    bench = post_lasso(ds, tuple(sorted(true_supp)))

    beta0_norm = truth.beta0
    rec = {
        "failed": 0 if fit.converged else 1,
        "selected": len(supp),
        "true_pos": len(true_supp.intersection(supp)),
        "sigma_hat": sigma_hat,
        "sigma0": sigma0,
    }
    for key, coefv in (("lasso", fit.beta), ("post_lasso", refit.beta),
                       ("oracle", bench.beta)):
        delta = coefv.values - beta0_norm
        rec[key] = {
            "l0": coefv.l0,
            "pred": prediction_norm(ds, delta),
            # Bias is tracked in original coordinates.
            "beta_orig": coefv.values / ds.scales,
        }
    return rec


def _mc_block(config, rep_indices):
    """Worker: run a contiguous block of repetitions in index order."""
    p = config.p
    out = {
        "reps": list(rep_indices),
        "failures": 0,
        "selected": [],
        "true_pos": [],
        "sigma_hat": [],
        "sigma0": [],
    }
    for key in ("lasso", "post_lasso", "oracle"):
        out[key] = {"l0": [], "pred": [], "beta_sum": np.zeros(p)}
    for rep in rep_indices:
        rec = _run_rep(config, rep)
        out["failures"] += rec["failed"]
        out["selected"].append(rec["selected"])
        out["true_pos"].append(rec["true_pos"])
        if rec["sigma_hat"] is not None:
            out["sigma_hat"].append(rec["sigma_hat"])
            out["sigma0"].append(rec["sigma0"])
        for key in ("lasso", "post_lasso", "oracle"):
            out[key]["l0"].append(rec[key]["l0"])
            out[key]["pred"].append(rec[key]["pred"])
            out[key]["beta_sum"] += rec[key]["beta_orig"]
    return out


def run_mc(config):
    """Full estimator sweep over config.reps repetitions.

    Deterministic given config.seed for any thread count: blocks have a
    fixed size, per-repetition generators depend only on (seed, rep_index),
    and reduction runs in block order.
    """
    blocks = [
        range(start, min(start + BLOCK_REPS, config.reps))
        for start in range(0, config.reps, BLOCK_REPS)
    ]
    if config.threads > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_mc_block, [config] * len(blocks), blocks))
    else:
        results = [_mc_block(config, b) for b in blocks]

    failures = sum(r["failures"] for r in results)
    selected = np.concatenate([np.asarray(r["selected"], int) for r in results])
    true_pos = np.concatenate([np.asarray(r["true_pos"], int) for r in results])
    sigma_hat = [v for r in results for v in r["sigma_hat"]]
    sigma0 = [v for r in results for v in r["sigma0"]]

    estimators = {}
    for key in ("lasso", "post_lasso", "oracle"):
        l0 = np.concatenate([np.asarray(r[key]["l0"], float) for r in results])
        pred = np.concatenate([np.asarray(r[key]["pred"], float) for r in results])
        beta_mean = sum(r[key]["beta_sum"] for r in results) / config.reps
        estimators[key] = EstimatorStats(
            mean_l0=float(np.mean(l0)),
            bias_norm=float(np.linalg.norm(beta_mean - config.beta0)),
            mean_pred_error=float(np.mean(pred)),
        )

    sigma_summary = None
    if sigma_hat:
        arr = np.asarray(sigma_hat)
        arr0 = np.asarray(sigma0)
        qs = (0.05, 0.25, 0.5, 0.75, 0.95)
        sigma_summary = {
            "mean": float(np.mean(arr)),
            "sd": float(np.std(arr)),
            "quantiles": {str(q): float(np.quantile(arr, q)) for q in qs},
            "initial_mean": float(np.mean(arr0)),
            "initial_sd": float(np.std(arr0)),
        }

    cfg = asdict(config)
    cfg["beta0"] = [float(v) for v in config.beta0]
    sel_vals, sel_counts = np.unique(selected, return_counts=True)
    tp_vals, tp_counts = np.unique(true_pos, return_counts=True)
    return McReport(
        estimators=estimators,
        hist_selected={int(v): int(c) for v, c in zip(sel_vals, sel_counts)},
        hist_true_pos={int(v): int(c) for v, c in zip(tp_vals, tp_counts)},
        rep_count=config.reps,
        failures=failures,
        flagged=failures > 0.01 * config.reps,
        seed=config.seed,
        config=cfg,
        sigma_summary=sigma_summary,
    )


def run_sigma_mc(config):
    """run_mc for the noise-estimation modes, with the sigma distribution
    summarized in the report."""
    if config.sigma_mode == "known":
        raise DomainError("run_sigma_mc needs an estimated sigma_mode")
    return run_mc(config)


def population_sparse_extremes(sigma_mat, k):
    """Extreme eigenvalues of sigma_mat over all supports of size <= k."""
    p = sigma_mat.shape[0]
    k = min(k, p)
    lo, hi = np.inf, -np.inf
    for size in range(1, k + 1):
        for supp in combinations(range(p), size):
            w = np.linalg.eigvalsh(sigma_mat[np.ix_(supp, supp)])
            lo = min(lo, w[0])
            hi = max(hi, w[-1])
    return float(lo), float(hi)


def design_condition_mc(config, m, reps):
    """Statistical check that random Gaussian designs keep their restricted
    sparse eigenvalues within the population-driven margins.

    Uses pure covariate designs (no intercept) with the config covariance;
    reports the frequency of phi(m) <= 8 phi_pop, kappa(m) >= kappa_pop /
    (6 sqrt(2)), and mu(m) <= 24 sqrt(phi_pop) / kappa_pop.
    """
    p, n = config.p, config.n
    sigma_mat = toeplitz(config.rho ** np.arange(p))
    k_pop = min(p, max(1, math.ceil(config.s * math.log(max(n, 3)))))
    lo_pop, hi_pop = population_sparse_extremes(sigma_mat, k_pop)
    kappa_pop = math.sqrt(max(lo_pop, 0.0))
    t_set = tuple(range(config.s))
    ok_phi = ok_kappa = ok_mu = 0
    for rep in range(reps):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(config.seed, rep, 2))
        )
        e = rng.standard_normal((n, p))
        if p > 1:
            e[:, 1:] *= math.sqrt(1.0 - config.rho ** 2)
            z = lfilter([1.0], [1.0, -config.rho], e, axis=1)
        else:
            z = e
        x, scales = normalize_columns(z)
        ds = Dataset(x=x, y=np.zeros(n), scales=scales, normalized=True)
        rep_eigs = sparse_eigs_exact(ds, t_set, m)
        ok_phi += rep_eigs.phi_m <= 8.0 * hi_pop
        ok_kappa += rep_eigs.kappa_m >= kappa_pop / (6.0 * math.sqrt(2.0))
        ok_mu += rep_eigs.mu_m <= 24.0 * math.sqrt(hi_pop) / kappa_pop
    return {
        "reps": reps,
        "m": m,
        "phi_pop": hi_pop,
        "kappa_pop": kappa_pop,
        "freq_phi_ok": ok_phi / reps,
        "freq_kappa_ok": ok_kappa / reps,
        "freq_mu_ok": ok_mu / reps,
    }
