import io

import numpy as np
import pytest

from hdsel.core import (
    CoefVector,
    CsvFormatError,
    Dataset,
    DegenerateColumnError,
    DimensionError,
    NotNormalizedError,
    TruthInfo,
    dataset_from_arrays,
    load_csv_dataset,
    normalize_columns,
    objective_q,
    prediction_norm,
    score,
    support_of,
)
from helpers import loop_objective, loop_prediction_norm


def test_normalize_ones_column_unchanged():
    x, scales = normalize_columns(np.ones((7, 1)))
    assert np.array_equal(x, np.ones((7, 1)))
    assert scales[0] == 1.0


def test_normalize_constant_scaling():
    x, scales = normalize_columns(np.full((4, 1), 2.0))
    assert np.allclose(x, 1.0)
    assert scales[0] == pytest.approx(2.0)


def test_normalize_unit_mean_square(rng):
    x_raw = rng.standard_normal((30, 5)) * rng.uniform(0.5, 4.0, size=5)
    x, scales = normalize_columns(x_raw)
    assert np.allclose(np.mean(x * x, axis=0), 1.0, atol=1e-12)
    assert np.allclose(x * scales, x_raw)


def test_normalize_idempotent(rng):
    x_raw = rng.standard_normal((20, 4))
    x1, _ = normalize_columns(x_raw)
    x2, s2 = normalize_columns(x1)
    assert np.max(np.abs(x2 - x1)) < 1e-12
    assert np.allclose(s2, 1.0, atol=1e-12)


def test_normalize_rejects_degenerate_column():
    x = np.ones((5, 3))
    x[:, 1] = 0.0
    with pytest.raises(DegenerateColumnError, match="column 1"):
        normalize_columns(x)


def test_prediction_norm_zero_vector(rng):
    ds = dataset_from_arrays(rng.standard_normal((10, 3)), rng.standard_normal(10))
    assert prediction_norm(ds, np.zeros(3)) == 0.0


def test_prediction_norm_unit_on_normalized_column(rng):
    ds = dataset_from_arrays(rng.standard_normal((25, 1)), np.zeros(25))
    assert prediction_norm(ds, np.array([1.0])) == pytest.approx(1.0, abs=1e-12)


def test_prediction_norm_matches_loop_oracle(rng):
    ds = dataset_from_arrays(rng.standard_normal((12, 4)), np.zeros(12))
    delta = rng.standard_normal(4)
    assert prediction_norm(ds, delta) == pytest.approx(
        loop_prediction_norm(ds.x, delta), abs=1e-12
    )


def test_prediction_norm_triangle_inequality(rng):
    ds = dataset_from_arrays(rng.standard_normal((15, 6)), np.zeros(15))
    for _ in range(20):
        a = rng.standard_normal(6)
        b = rng.standard_normal(6)
        assert prediction_norm(ds, a + b) <= (
            prediction_norm(ds, a) + prediction_norm(ds, b) + 1e-10
        )


def test_prediction_norm_dimension_error(rng):
    ds = dataset_from_arrays(rng.standard_normal((10, 3)), np.zeros(10))
    with pytest.raises(DimensionError):
        prediction_norm(ds, np.zeros(4))


def test_empirical_risk_triangle_inequality(rng):
    # sqrt(E_n[(x'b - f)^2]) <= ||b - b0||_pred + c_s for any b, b0.
    n, p = 30, 5
    x_raw = rng.standard_normal((n, p))
    f = np.sin(x_raw[:, 0]) + x_raw[:, 1]
    beta0 = rng.standard_normal(p)
    ds = dataset_from_arrays(x_raw, f + 0.1 * rng.standard_normal(n),
                             truth=TruthInfo(f=f, sigma=0.1, beta0=None))
    c_s = np.sqrt(np.mean((f - x_raw @ beta0) ** 2))
    beta0_n = beta0 * ds.scales
    for _ in range(10):
        beta = rng.standard_normal(p)
        lhs = np.sqrt(np.mean((ds.x @ (beta * ds.scales) - f) ** 2))
        assert lhs <= prediction_norm(ds, beta * ds.scales - beta0_n) + c_s + 1e-10


def test_score_zero_eps(rng):
    ds = dataset_from_arrays(rng.standard_normal((10, 4)), np.zeros(10))
    assert np.array_equal(score(ds, np.zeros(10)), np.zeros(4))


def test_score_ones_column():
    ds = dataset_from_arrays(np.ones((8, 1)), np.zeros(8))
    assert score(ds, np.ones(8))[0] == pytest.approx(2.0)


def test_score_linearity(rng):
    ds = dataset_from_arrays(rng.standard_normal((12, 3)), np.zeros(12))
    eps = rng.standard_normal(12)
    assert np.allclose(score(ds, 3.5 * eps), 3.5 * score(ds, eps), rtol=1e-14)


def test_score_tail_bound_monte_carlo(rng):
    # n ||S/(2 sigma)||_inf exceeds sqrt(2 n log(2p/alpha)) in at most an
    # alpha fraction of draws.
    n, p, alpha, sigma = 40, 12, 0.1, 1.3
    ds = dataset_from_arrays(rng.standard_normal((n, p)), np.zeros(n))
    cutoff = np.sqrt(2 * n * np.log(2 * p / alpha))
    draws = 10_000
    eps = rng.standard_normal((draws, n)) * sigma
    sup = np.max(np.abs(eps @ ds.x), axis=1) / sigma
    frac = np.mean(sup > cutoff)
    assert frac <= alpha


def test_objective_trivial_cases(rng):
    x_raw = rng.standard_normal((15, 3))
    beta = rng.standard_normal(3)
    ds = dataset_from_arrays(x_raw, x_raw @ beta)
    assert objective_q(ds, beta * ds.scales) == pytest.approx(0.0, abs=1e-20)
    assert objective_q(ds, np.zeros(3)) == pytest.approx(np.mean(ds.y ** 2))


def test_objective_matches_loop_oracle(rng):
    ds = dataset_from_arrays(rng.standard_normal((9, 4)), rng.standard_normal(9))
    beta = rng.standard_normal(4)
    assert objective_q(ds, beta) == pytest.approx(
        loop_objective(ds.x, ds.y, beta), abs=1e-14
    )


def test_coef_vector_support_tolerance():
    v = np.array([2.0, 1e-12, -0.5, 0.0])
    cv = CoefVector.from_values(v)
    assert cv.support == (0, 2)
    assert cv.l0 == 2
    assert cv.l1 == pytest.approx(np.sum(np.abs(v)))
    assert support_of(np.zeros(3)) == ()


def test_truth_info_support_consistency():
    beta0 = np.array([0.0, 1.5, 0.0, -2.0])
    t = TruthInfo(f=np.zeros(4), sigma=1.0, beta0=beta0)
    assert t.support_T == (1, 3)
    with pytest.raises(Exception):
        TruthInfo(f=np.zeros(4), sigma=1.0, beta0=beta0, support_T=(0,))


def test_dataset_invariant_checks(rng):
    x = rng.standard_normal((10, 3))
    with pytest.raises(DimensionError):
        Dataset(x=x, y=np.zeros(9), scales=np.ones(3))
    with pytest.raises(NotNormalizedError):
        Dataset(x=2.0 * np.ones((10, 3)), y=np.zeros(10), scales=np.ones(3),
                normalized=True)


def test_csv_ingestion_roundtrip():
    text = "a,y,b\n1.0,2.0,3.0\n2.0,1.0,0.5\n-1.0,0.0,2.5\n"
    ds = load_csv_dataset(io.StringIO(text))
    assert ds.names == ("(intercept)", "a", "b")
    assert ds.n == 3 and ds.p == 3
    assert np.array_equal(ds.y, [2.0, 1.0, 0.0])
    assert ds.normalized
    # intercept column stays all ones after normalization
    assert np.allclose(ds.x[:, 0], 1.0)


def test_csv_ingestion_errors():
    with pytest.raises(CsvFormatError, match="no column named"):
        load_csv_dataset(io.StringIO("a,b\n1,2\n"))
    with pytest.raises(CsvFormatError, match="row 3"):
        load_csv_dataset(io.StringIO("a,y\n1,2\n3\n"))
    with pytest.raises(CsvFormatError, match="row 2"):
        load_csv_dataset(io.StringIO("a,y\nfoo,2\n"))
    with pytest.raises(CsvFormatError, match="no data rows"):
        load_csv_dataset(io.StringIO("a,y\n"))
    with pytest.raises(DegenerateColumnError):
        load_csv_dataset(io.StringIO("a,y\n0,1\n0,2\n"))
