import numpy as np
import pytest
from scipy.stats import norm

from hdsel.core import DomainError, dataset_from_arrays
from hdsel.penalty import (
    PenaltySpec,
    empirical_upper_quantile,
    lambda_x_dependent,
    lambda_x_independent,
    normal_quantile,
    resolve_penalty,
    score_quantile,
    sup_score_draws,
    tail_bound_check,
)


def test_normal_quantile_symmetry():
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("q,expected", [
    (0.975, 1.959964),
    (0.9999, 3.719016),
])
def test_normal_quantile_reference_points(q, expected):
    assert normal_quantile(q) == pytest.approx(expected, abs=5e-7)


def test_normal_quantile_against_scipy():
    qs = np.concatenate([
        [1e-12, 1e-9, 1e-6, 1e-3],
        np.linspace(0.01, 0.99, 57),
        [1 - 1e-3, 1 - 1e-6, 1 - 1e-9, 1 - 1e-12],
    ])
    for q in qs:
        assert abs(normal_quantile(q) - norm.ppf(q)) <= 1e-9


def test_normal_quantile_domain():
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(DomainError):
            normal_quantile(bad)


def test_lambda_x_independent_reference():
    spec = PenaltySpec(rule="x_independent", c=1.1, alpha=0.1, sigma=1.0)
    assert lambda_x_independent(100, 500, spec) == pytest.approx(81.8184, abs=2e-4)


def test_lambda_x_independent_linear_in_sigma():
    s1 = PenaltySpec(rule="x_independent", c=1.1, alpha=0.1, sigma=1.0)
    s2 = PenaltySpec(rule="x_independent", c=1.1, alpha=0.1, sigma=2.0)
    assert lambda_x_independent(50, 20, s2) == pytest.approx(
        2 * lambda_x_independent(50, 20, s1)
    )


def test_lambda_x_independent_monotone_in_p():
    spec = PenaltySpec(rule="x_independent", c=1.05, alpha=0.2, sigma=1.0)
    assert lambda_x_independent(100, 500, spec) > lambda_x_independent(100, 50, spec)


def test_empirical_quantile_convention():
    draws = np.arange(1.0, 11.0)  # 1..10
    assert empirical_upper_quantile(draws, 0.1) == 9.0
    assert empirical_upper_quantile(draws, 0.05) == 10.0
    assert empirical_upper_quantile(draws, 0.99) == 1.0


def test_single_column_half_normal_quantile(rng):
    # For p = 1 the sup score is |N(0, n)|; its 0.9-quantile is
    # sqrt(n) * Phi^{-1}(0.95).
    n = 64
    ds = dataset_from_arrays(rng.standard_normal((n, 1)), np.zeros(n))
    q = score_quantile(ds, 0.1, 100_000, seed=5)
    expected = np.sqrt(n) * normal_quantile(0.95)
    assert q == pytest.approx(expected, rel=0.02)


def test_xdep_below_xindep(rng):
    for seed in (0, 1):
        gen = np.random.default_rng(seed)
        n, p = 60, 40
        ds = dataset_from_arrays(gen.standard_normal((n, p)), np.zeros(n))
        spec = PenaltySpec(c=1.1, alpha=0.1, sigma=1.0, sim_draws=100_000, seed=seed)
        lam_dep = lambda_x_dependent(ds, spec)
        lam_ind = lambda_x_independent(n, p, spec)
        assert lam_dep <= lam_ind * 1.01


def test_xdep_deterministic_given_seed(rng):
    ds = dataset_from_arrays(rng.standard_normal((30, 10)), np.zeros(30))
    spec = PenaltySpec(sim_draws=2000, seed=123)
    assert lambda_x_dependent(ds, spec) == lambda_x_dependent(ds, spec)


def test_draw_blocks_are_prefix_stable(rng):
    # Each draw depends only on (seed, global draw index), so a longer run
    # reproduces a shorter one as its prefix.
    x = rng.standard_normal((20, 6))
    a = sup_score_draws(x, 600, seed=9)
    b = sup_score_draws(x, 1100, seed=9)
    assert np.array_equal(a, b[:600])


def test_low_draws_warns(rng):
    ds = dataset_from_arrays(rng.standard_normal((15, 4)), np.zeros(15))
    spec = PenaltySpec(sim_draws=50, seed=0)
    with pytest.warns(UserWarning):
        resolved = resolve_penalty(spec, ds=ds)
    assert resolved.low_draws
    assert resolved.lam > 0


def test_resolve_penalty_x_independent():
    spec = PenaltySpec(rule="x_independent", c=1.1, alpha=0.1, sigma=1.0)
    resolved = resolve_penalty(spec, n=100, p=500)
    assert resolved.lam == pytest.approx(81.8184, abs=2e-4)


def test_tail_bound_chain_reference():
    mid, hi = tail_bound_check(100, 500, 0.1)
    assert mid == pytest.approx(37.190, abs=2e-3)
    assert hi == pytest.approx(42.920, abs=2e-3)
    assert mid <= hi


def test_tail_bound_monotone_in_p():
    m1, h1 = tail_bound_check(100, 50, 0.1)
    m2, h2 = tail_bound_check(100, 500, 0.1)
    assert m2 > m1 and h2 > h1


def test_tail_bound_domain():
    with pytest.raises(DomainError):
        tail_bound_check(100, 1, 1.0)
    with pytest.raises(DomainError):
        PenaltySpec(alpha=1.0)
    with pytest.raises(DomainError):
        PenaltySpec(c=1.0)


def test_coverage_of_resolved_quantile(rng):
    # Fresh-noise exceedance frequency of the simulated quantile is close
    # to alpha.
    n, p, alpha = 50, 30, 0.1
    ds = dataset_from_arrays(rng.standard_normal((n, p)), np.zeros(n))
    lam_q = score_quantile(ds, alpha, 20_000, seed=11)
    draws = 10_000
    g = rng.standard_normal((draws, n))
    sup = np.max(np.abs(g @ ds.x), axis=1)
    frac = float(np.mean(sup > lam_q))
    slack = 3 * np.sqrt(alpha * (1 - alpha) / draws)
    assert abs(frac - alpha) <= slack
