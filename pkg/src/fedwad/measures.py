"""Discrete and Gaussian measures plus dataset containers.

All value types are immutable: arrays are stored read-only and the
dataclasses are frozen. Randomness everywhere goes through
``numpy.random.default_rng`` (PCG64), so a seed pins every sample draw
bit-for-bit across runs and across processes on the same numpy version.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NegativeWeightError,
    NonFiniteValueError,
    NonPsdCovarianceError,
    ShapeMismatchError,
    ZeroTotalMassError,
)

WEIGHT_ATOL = 1e-9          # weights must sum to 1 within this
SYMMETRY_ATOL = 1e-9        # covariance symmetry slack
_CHOLESKY_JITTER = 1e-12    # diagonal jitter on semidefinite failure


def _readonly(arr):
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    """A weighted point cloud: ``n`` atoms in ``R^d`` on the simplex."""

    points: np.ndarray   # (n, d) float64, read-only
    weights: np.ndarray  # (n,) float64, nonnegative, sums to 1

    def __post_init__(self):
        pts, w = self.points, self.weights
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ShapeMismatchError(f"points must be (n, d) with n,d >= 1, got {pts.shape}")
        if w.shape != (pts.shape[0],):
            raise ShapeMismatchError(f"weights shape {w.shape} does not match n={pts.shape[0]}")
        if not np.isfinite(pts).all() or not np.isfinite(w).all():
            raise NonFiniteValueError("points and weights must be finite")
        if (w < 0).any():
            raise NegativeWeightError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_ATOL:
            raise ZeroTotalMassError(f"weights sum to {w.sum()!r}, expected 1")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def coordinate_range(self):
        """Per-coordinate (low, high) envelope. This is the only statistic
        a client reveals during the protocol handshake."""
        return self.points.min(axis=0), self.points.max(axis=0)


def new_discrete(points, weights=None) -> DiscreteMeasure:
    """Build a DiscreteMeasure, defaulting to uniform weights.

    Parameters
    ----------
    points : array-like, shape (n, d)
        Atom locations. Must be finite.
    weights : array-like, shape (n,), optional
        Nonnegative masses. Renormalized to sum exactly to 1; omitted
        means uniform 1/n.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ShapeMismatchError(f"points must be 2-D, got ndim={pts.ndim}")
    n = pts.shape[0]
    if weights is None:
        w = np.full(n, 1.0 / max(n, 1))
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.shape != (n,):
            raise ShapeMismatchError(f"weights shape {w.shape}, expected ({n},)")
        if not np.isfinite(w).all():
            raise NonFiniteValueError("weights must be finite")
        if (w < 0).any():
            raise NegativeWeightError("weights must be nonnegative")
        total = float(w.sum())
        if total <= 0.0:
            raise ZeroTotalMassError("weights sum to zero")
        w = w / total
    return DiscreteMeasure(_readonly(pts), _readonly(w))


@dataclass(frozen=True)
class GaussianMeasure:
    """Gaussian N(mean, covariance) used by the analytic backend."""

    mean: np.ndarray        # (d,)
    covariance: np.ndarray  # (d, d), symmetric

    def __post_init__(self):
        m, S = self.mean, self.covariance
        if m.ndim != 1 or m.shape[0] == 0:
            raise ShapeMismatchError(f"mean must be (d,), got {m.shape}")
        if S.shape != (m.shape[0], m.shape[0]):
            raise ShapeMismatchError(f"covariance shape {S.shape}, expected square of d={m.shape[0]}")
        if not np.isfinite(m).all() or not np.isfinite(S).all():
            raise NonFiniteValueError("mean and covariance must be finite")
        if np.abs(S - S.T).max() > SYMMETRY_ATOL:
            raise NonPsdCovarianceError("covariance is not symmetric")
        if (np.diag(S) < -SYMMETRY_ATOL).any():
            raise NonPsdCovarianceError("covariance has a negative diagonal entry")

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def new_gaussian(mean, covariance) -> GaussianMeasure:
    m = np.ascontiguousarray(mean, dtype=np.float64)
    S = np.ascontiguousarray(covariance, dtype=np.float64)
    return GaussianMeasure(_readonly(m), _readonly(S))


def _cholesky_factor(S):
    # Exact zero covariance is a legitimate degenerate Gaussian; numpy's
    # cholesky refuses it, so short-circuit before the jitter fallback.
    if not S.any():
        return np.zeros_like(S)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(S + _CHOLESKY_JITTER * np.eye(S.shape[0]))
    except np.linalg.LinAlgError:
        raise NonPsdCovarianceError("covariance is not positive semidefinite") from None


def sample_gaussian(g: GaussianMeasure, n: int, seed: int) -> DiscreteMeasure:
    """Draw n iid samples from g as a uniform discrete measure.

    Sampling is ``mean + z @ L.T`` with z standard normal from
    ``default_rng(seed)`` and L the (jittered) Cholesky factor, so a
    fixed seed reproduces the same point cloud exactly.
    """
    if n < 1:
        raise ShapeMismatchError("need at least one sample")
    L = _cholesky_factor(g.covariance)
    z = np.random.default_rng(seed).standard_normal((n, g.d))
    return new_discrete(g.mean + z @ L.T)


def class_statistics(features, labels):
    """Per-class (mean, covariance) with the population (ddof=0) estimator.

    ddof=0 keeps one-sample classes well defined: their covariance is the
    zero matrix rather than NaN.
    """
    stats = {}
    for lab in np.unique(labels):
        rows = features[labels == lab]
        mean = rows.mean(axis=0)
        centered = rows - mean
        cov = centered.T @ centered / rows.shape[0]
        stats[int(lab)] = (_readonly(mean), _readonly(cov))
    return stats


@dataclass(frozen=True)
class LabeledDataset:
    """Features with integer labels and cached per-class Gaussians."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray    # (n,) int64
    class_stats: dict = field(compare=False)

    def __post_init__(self):
        X, y = self.features, self.labels
        if X.ndim != 2 or X.shape[0] == 0:
            raise ShapeMismatchError(f"features must be (n, d), got {X.shape}")
        if y.shape != (X.shape[0],):
            raise ShapeMismatchError("labels length does not match features")
        if not np.isfinite(X).all():
            raise NonFiniteValueError("features must be finite")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self):
        return sorted(self.class_stats)


def new_labeled(features, labels) -> LabeledDataset:
    X = _readonly(np.ascontiguousarray(features, dtype=np.float64))
    y = np.ascontiguousarray(labels, dtype=np.int64)
    y.setflags(write=False)
    if X.ndim != 2:
        raise ShapeMismatchError("features must be 2-D")
    if y.shape != (X.shape[0],):
        raise ShapeMismatchError("labels length does not match features")
    return LabeledDataset(X, y, class_statistics(X, y))


def make_synthetic_labeled(class_means, per_class_n: int, noise_scale: float,
                           seed: int) -> LabeledDataset:
    """Isotropic Gaussian blobs, one per row of class_means.

    Rows are grouped by class (class 0 first). noise_scale == 0 yields
    exact copies of the class means.
    """
    M = np.asarray(class_means, dtype=np.float64)
    if M.ndim != 2:
        raise ShapeMismatchError("class_means must be (c, d)")
    if per_class_n < 1:
        raise ShapeMismatchError("per_class_n must be >= 1")
    rng = np.random.default_rng(seed)
    c, d = M.shape
    feats = np.empty((c * per_class_n, d))
    labels = np.repeat(np.arange(c), per_class_n)
    for k in range(c):
        z = rng.standard_normal((per_class_n, d))
        feats[k * per_class_n:(k + 1) * per_class_n] = M[k] + noise_scale * z
    return new_labeled(feats, labels)


# -- file formats ------------------------------------------------------------
#
# CSV: header required, d coordinate columns, optional trailing `weight`
# column. .fwm: the wire measure blob written verbatim to disk.

def save_measure_csv(measure: DiscreteMeasure, path_or_file):
    close = False
    if isinstance(path_or_file, (str, os.PathLike)):
        fh = open(path_or_file, "w", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(measure.d)] + ["weight"])
        for row, w in zip(measure.points, measure.weights):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
    finally:
        if close:
            fh.close()


def load_measure_csv(path_or_file) -> DiscreteMeasure:
    close = False
    if isinstance(path_or_file, (str, os.PathLike)):
        fh = open(path_or_file, "r", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ShapeMismatchError("empty CSV: header row required") from None
        header = [h.strip() for h in header]
        if not header or _is_number(header[0]):
            raise ShapeMismatchError("CSV header row required (got numeric first row)")
        has_weight = header[-1].lower() == "weight"
        d = len(header) - (1 if has_weight else 0)
        if d < 1:
            raise ShapeMismatchError("CSV needs at least one coordinate column")
        pts, ws = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ShapeMismatchError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise NonFiniteValueError(f"line {lineno}: non-numeric cell") from None
            pts.append(vals[:d])
            if has_weight:
                ws.append(vals[d])
        if not pts:
            raise ShapeMismatchError("CSV has a header but no data rows")
        return new_discrete(np.array(pts), np.array(ws) if has_weight else None)
    finally:
        if close:
            fh.close()


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def save_labeled_csv(ds: LabeledDataset, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(ds.d)] + ["label"])
        for row, lab in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def load_labeled_csv(path) -> LabeledDataset:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ShapeMismatchError("empty CSV: header row required") from None
        if not header or header[-1].lower() != "label":
            raise ShapeMismatchError("labeled CSV must end with a `label` column")
        d = len(header) - 1
        if d < 1:
            raise ShapeMismatchError("labeled CSV needs at least one feature column")
        feats, labs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ShapeMismatchError(f"line {lineno}: expected {len(header)} cells")
            try:
                feats.append([float(v) for v in row[:d]])
                labs.append(int(float(row[d])))
            except ValueError:
                raise NonFiniteValueError(f"line {lineno}: non-numeric cell") from None
        if not feats:
            raise ShapeMismatchError("CSV has a header but no data rows")
        return new_labeled(np.array(feats), np.array(labs))


def save_measure(measure: DiscreteMeasure, path):
    """Dispatch on extension: .csv text or .fwm wire blob."""
    path = os.fspath(path)
    if path.endswith(".fwm"):
        from .netproto import encode_measure
        with open(path, "wb") as fh:
            fh.write(encode_measure(measure))
    else:
        save_measure_csv(measure, path)


def load_measure(path) -> DiscreteMeasure:
    path = os.fspath(path)
    if path.endswith(".fwm"):
        from .netproto import decode_measure
        with open(path, "rb") as fh:
            blob = fh.read()
        measure, used = decode_measure(blob, 0)
        if used != len(blob):
            raise ShapeMismatchError("trailing bytes after .fwm measure blob")
        return measure
    return load_measure_csv(path)


def measure_to_csv_text(measure: DiscreteMeasure) -> str:
    buf = io.StringIO()
    save_measure_csv(measure, buf)
    return buf.getvalue()
