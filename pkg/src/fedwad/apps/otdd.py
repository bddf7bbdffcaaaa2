"""Dataset distance via label-augmented optimal transport.

Each sample (x, y) becomes the vector [x ; m_y ; sigma_y] where m_y and
sigma_y are the class-conditional mean and (by default the diagonal of the)
class-conditional covariance. Squared Euclidean distance on the augmented
vectors then decomposes as

    ||x - x'||^2 + ||m_y - m_{y'}||^2 + ||S_y - S_{y'}||_F^2

so W2 on the augmented measures is a dataset distance that sees both feature
geometry and label geometry. Either side of a comparison can be computed
federated: the augmented measures go through the standard protocol and only
interpolants travel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeMismatchError
from ..measures import DiscreteMeasure, LabeledDataset, _readonly, new_discrete
from ..ot_core import wasserstein
from ..protocol import FedConfig, run_fedwad
from .coreset import ClientPool

SYMMETRY_ATOL = 1e-9


def otdd_featurize(ds: LabeledDataset, diag_only: bool = True) -> DiscreteMeasure:
    """Uniform measure over augmented rows [x_i ; m_{y_i} ; cov terms].

    diag_only keeps the covariance contribution to diag(Sigma_y), giving
    augmented dimension 3d; otherwise the full row-major vec(Sigma_y) is
    appended (dimension d^2 + 2d).
    """
    X, y = ds.features, ds.labels
    n, d = X.shape
    cov_dim = d if diag_only else d * d
    aug = np.empty((n, 2 * d + cov_dim))
    aug[:, :d] = X
    for lab, (mean, cov) in ds.class_stats.items():
        rows = y == lab
        aug[rows, d:2 * d] = mean
        aug[rows, 2 * d:] = np.diag(cov) if diag_only else cov.reshape(-1)
    return new_discrete(aug)


def otdd_distance(ds1: LabeledDataset, ds2: LabeledDataset,
                  mode: str = "centralized", fed: FedConfig | None = None,
                  diag_only: bool = True) -> float:
    """W2 between the augmented measures of two labeled datasets."""
    if ds1.features.shape[1] != ds2.features.shape[1]:
        raise ShapeMismatchError("datasets have different feature dimensions")
    f1 = otdd_featurize(ds1, diag_only=diag_only)
    f2 = otdd_featurize(ds2, diag_only=diag_only)
    if mode == "centralized":
        return wasserstein(f1, f2, p=2)
    if mode == "federated":
        return run_fedwad(f1, f2, fed or FedConfig()).distance
    raise ConfigError(f"mode must be 'centralized' or 'federated', got {mode!r}")


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray

    def __post_init__(self):
        V = self.values
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ShapeMismatchError(f"distance matrix must be square, got {V.shape}")
        if not np.isfinite(V).all():
            raise ConfigError("distance matrix must be finite")
        if np.abs(V - V.T).max(initial=0.0) > SYMMETRY_ATOL:
            raise ConfigError("distance matrix must be symmetric within 1e-9")
        if np.abs(np.diag(V)).max(initial=0.0) > SYMMETRY_ATOL:
            raise ConfigError("distance matrix diagonal must be zero within 1e-9")
        if V.min(initial=0.0) < 0:
            raise ConfigError("distances must be nonnegative")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_csv(self) -> str:
        lines = [",".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"


def pairwise_distance_matrix(pool: ClientPool, fed: FedConfig | None = None,
                             diag_only: bool = True) -> DistanceMatrix:
    """Federated dataset distance between every client pair.

    Each unordered pair runs once; the matrix is symmetric with a zero
    diagonal by construction. Pool subsampling, when configured, is drawn
    once per client from the pool seed so both runs touching a client see
    the same subsample.
    """
    c = len(pool)
    rng = np.random.default_rng(pool.seed)
    datasets = [pool.dataset(i, rng) for i in range(c)]
    V = np.zeros((c, c))
    for i in range(c):
        for j in range(i + 1, c):
            dij = otdd_distance(datasets[i], datasets[j], mode="federated",
                                fed=fed, diag_only=diag_only)
            V[i, j] = V[j, i] = dij
    return DistanceMatrix(_readonly(V))
