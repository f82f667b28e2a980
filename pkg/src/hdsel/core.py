"""Data model shared by every estimator: datasets, normalization, norms, score."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

# Columns whose root mean square falls below this are rejected at ingestion.
DEGENERATE_RMS = 1e-12

# |beta_j| > SUPPORT_RTOL * max(1, ||beta||_inf) counts as a non-zero entry.
SUPPORT_RTOL = 1e-10


class HdselError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(HdselError):
    """Vector or matrix shapes do not line up."""


class DegenerateColumnError(HdselError):
    """A design column has (near) zero root mean square."""


class NotNormalizedError(HdselError):
    """Operation requires a dataset with unit-mean-square columns."""


class DomainError(HdselError):
    """Parameter outside its valid domain."""


class BudgetError(HdselError):
    """Subset enumeration would exceed the allowed budget."""


class CsvFormatError(HdselError):
    """Malformed input CSV."""


def support_of(values, tol=None):
    """Indices with |value| above the support tolerance, as a sorted tuple."""
    values = np.asarray(values, dtype=float)
    if tol is None:
        mx = np.max(np.abs(values)) if values.size else 0.0
        tol = SUPPORT_RTOL * max(1.0, mx)
    return tuple(int(j) for j in np.flatnonzero(np.abs(values) > tol))


@dataclass(frozen=True)
class CoefVector:
    """A coefficient vector together with its detected support."""

    values: np.ndarray
    support: tuple = ()

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values=values, support=support_of(values))

    @property
    def l0(self):
        return len(self.support)

    @property
    def l1(self):
        return float(np.sum(np.abs(self.values)))


@dataclass(frozen=True)
class TruthInfo:
    """Known data-generating quantities, available in simulations only.

    f is the vector of noise-free regression values, sigma the noise level.
    beta0 (when present) is expressed in the coordinates of the dataset it
    accompanies, and support_T is its non-zero index set.
    """

    f: np.ndarray
    sigma: float
    beta0: np.ndarray | None = None
    support_T: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        if self.sigma < 0:
            raise DomainError("sigma must be >= 0")
        if self.beta0 is not None:
            beta0 = np.asarray(self.beta0, dtype=float)
            object.__setattr__(self, "beta0", beta0)
            supp = support_of(beta0)
            if self.support_T is None:
                object.__setattr__(self, "support_T", supp)
            elif tuple(self.support_T) != supp:
                raise DomainError("support_T does not match the non-zeros of beta0")


@dataclass(frozen=True)
class Dataset:
    """A fixed design with response.

    x has n rows (observations) and p columns (regressors; for CSV input
    column 0 is the prepended intercept).  scales holds the pre-normalization
    root mean square of every column, so original-scale coefficients are
    recovered as beta_normalized / scales.  Indices are 0-based throughout.
    """

    x: np.ndarray
    y: np.ndarray
    scales: np.ndarray
    normalized: bool = False
    truth: TruthInfo | None = None
    names: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        # Column-major storage: every solver sweep walks columns.
        object.__setattr__(self, "x", np.asfortranarray(x))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "scales", np.asarray(self.scales, dtype=float))
        n, p = self.x.shape
        if n < 1 or p < 1:
            raise DimensionError("need n >= 1 and p >= 1")
        if self.y.shape != (n,):
            raise DimensionError(f"y has length {self.y.shape}, expected {n}")
        if self.scales.shape != (p,):
            raise DimensionError("scales must have one entry per column")
        if np.any(self.scales <= 0):
            raise DegenerateColumnError("scales must be positive")
        if self.normalized:
            msq = np.mean(self.x * self.x, axis=0)
            if np.any(np.abs(msq - 1.0) > 1e-10):
                j = int(np.argmax(np.abs(msq - 1.0)))
                raise NotNormalizedError(
                    f"column {j} has mean square {msq[j]:.12g}, expected 1"
                )
        if self.truth is not None and self.truth.f.shape != (n,):
            raise DimensionError("truth.f must have length n")
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))
            if len(self.names) != p:
                raise DimensionError("names must have one entry per column")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]


def normalize_columns(x_raw):
    """Rescale every column to unit mean square.

    Returns the rescaled matrix and the vector of divisors (column root mean
    squares).  Re-applying to the output is the identity up to rounding.
    """
    x_raw = np.asarray(x_raw, dtype=float)
    scales = np.sqrt(np.mean(x_raw * x_raw, axis=0))
    bad = np.flatnonzero(scales < DEGENERATE_RMS)
    if bad.size:
        raise DegenerateColumnError(
            f"column {int(bad[0])} has root mean square below {DEGENERATE_RMS}"
        )
    return x_raw / scales, scales


def dataset_from_arrays(x_raw, y, truth=None, names=None, normalize=True):
    """Build a Dataset, normalizing columns unless told otherwise."""
    x_raw = np.asarray(x_raw, dtype=float)
    if normalize:
        x, scales = normalize_columns(x_raw)
        return Dataset(x=x, y=y, scales=scales, normalized=True, truth=truth, names=names)
    return Dataset(
        x=x_raw, y=y, scales=np.ones(x_raw.shape[1]), normalized=False,
        truth=truth, names=names,
    )


def prediction_norm(ds, delta):
    """Root mean square of x_i' delta over the design points."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (ds.p,):
        raise DimensionError(f"delta has shape {delta.shape}, expected ({ds.p},)")
    fitted = ds.x @ delta
    return float(np.sqrt(np.mean(fitted * fitted)))


def score(ds, eps):
    """The effective-noise vector 2 E_n[x_i eps_i]."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (ds.n,):
        raise DimensionError(f"eps has length {eps.shape}, expected {ds.n}")
    return (2.0 / ds.n) * (ds.x.T @ eps)


def objective_q(ds, beta):
    """Empirical least-squares criterion E_n[(y_i - x_i' beta)^2]."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (ds.p,):
        raise DimensionError(f"beta has shape {beta.shape}, expected ({ds.p},)")
    resid = ds.y - ds.x @ beta
    return float(np.mean(resid * resid))


def approximation_error(ds):
    """c_s = sqrt(E_n[r^2]) for datasets carrying truth with beta0."""
    if ds.truth is None or ds.truth.beta0 is None:
        raise DomainError("dataset carries no beta0 truth")
    r = ds.truth.f - ds.x @ ds.truth.beta0
    return float(np.sqrt(np.mean(r * r)))


def load_csv_dataset(path_or_file, response="y", normalize=True):
    """Read a regression dataset from CSV.

    The header row is required; the column named `response` is the response
    and every other column is a regressor.  An intercept column of ones is
    prepended.  Zero-variance columns are rejected rather than dropped so
    report indices stay aligned with the input.
    """
    if isinstance(path_or_file, io.TextIOBase):
        rows = list(csv.reader(path_or_file))
    else:
        with open(path_or_file, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise CsvFormatError(f"no column named {response!r} in header")
    ycol = header.index(response)
    xcols = [j for j in range(len(header)) if j != ycol]
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"row {i} has {len(row)} fields, expected {len(header)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise CsvFormatError(f"row {i}: {exc}") from exc
    if not data:
        raise CsvFormatError("CSV has a header but no data rows")
    arr = np.asarray(data, dtype=float)
    y = arr[:, ycol]
    x_raw = np.column_stack([np.ones(arr.shape[0]), arr[:, xcols]])
    names = ("(intercept)",) + tuple(header[j] for j in xcols)
    return dataset_from_arrays(x_raw, y, names=names, normalize=normalize)
