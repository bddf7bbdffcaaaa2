"""Wasserstein coresets.

A coreset is K points whose uniform measure sits W2-close to a dataset:

    min over x'_1..x'_K of W2^2( (1/K) sum_i delta_{x'_i}, mu )

optimized by gradient descent through the transport plan. The federated
variant never touches raw client data: each round it runs the federated
distance protocol against a sample of clients and differentiates only the
coordinator-side term W2^2(coreset, xi_final), which depends on nothing a
client did not already send.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import logging

import numpy as np

from ..errors import ConfigError, DimensionMismatchError, KTooLargeError
from ..measures import DiscreteMeasure, LabeledDataset, _readonly, new_discrete
from ..ot_core import cost_matrix, grad_support, solve_exact
from ..protocol import FedConfig, run_fedwad

log = logging.getLogger("fedwad.apps.coreset")


@dataclass(frozen=True)
class Coreset:
    """K support points with implicit uniform 1/K weights. labels appear
    only after label_coreset; objective_trace records the fit."""

    points: np.ndarray
    labels: np.ndarray | None = None
    objective_trace: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ConfigError(f"coreset points must be (K, d), got {self.points.shape}")
        if self.labels is not None and self.labels.shape != (self.points.shape[0],):
            raise ConfigError("coreset labels length must match points")

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def measure(self) -> DiscreteMeasure:
        return new_discrete(self.points)


def _objective_grad(points, target: DiscreteMeasure):
    """W2^2 between the uniform measure on `points` and `target`, plus its
    gradient with respect to the points."""
    cs = new_discrete(points)
    C = cost_matrix(cs, target, p=2)
    plan = solve_exact(cs.weights, target.weights, C)
    return plan.objective, grad_support(plan, cs, target, side="mu")


def coreset_fit(data: DiscreteMeasure, k: int, steps: int = 300,
                learning_rate: float = 1.0, seed: int = 0) -> Coreset:
    """Centralized fit: descend W2^2(coreset, data) from a seeded sample of
    K data points. A step must strictly decrease the objective; on increase
    (or a plateau with movement) the rate is halved, up to 8 times, after
    which the step is rejected. The working rate persists across steps.
    """
    if k > data.n:
        raise KTooLargeError(f"coreset size {k} exceeds data size {data.n}")
    if k < 1:
        raise ConfigError(f"coreset size must be >= 1, got {k}")
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    rng = np.random.default_rng(seed)
    idx = rng.choice(data.n, size=k, replace=False)
    x = data.points[idx].copy()

    obj, grad = _objective_grad(x, data)
    trace = [obj]
    lr = float(learning_rate)
    for step in range(steps):
        moved = False
        for _ in range(9):  # first try plus 8 halvings
            cand = x - lr * grad
            if np.array_equal(cand, x):
                break  # zero gradient: stationary point
            cand_obj, cand_grad = _objective_grad(cand, data)
            if cand_obj < obj:
                x, obj, grad = cand, cand_obj, cand_grad
                moved = True
                break
            lr *= 0.5
        trace.append(obj)
        if not moved:
            log.debug("fit stalled at step %d (objective %.3g)", step, obj)
            break
    return Coreset(points=_readonly(x), objective_trace=tuple(trace))


@dataclass(frozen=True)
class ClientPool:
    """Datasets held by separate owners, with an optional per-round data
    subsample drawn by each owner before it joins a round."""

    clients: tuple
    subsample_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if len(self.clients) < 1:
            raise ConfigError("pool needs at least one client")
        if self.subsample_size is not None and self.subsample_size < 1:
            raise ConfigError("subsample_size must be >= 1 when given")

    def __len__(self):
        return len(self.clients)

    def measure(self, i: int, rng=None) -> DiscreteMeasure:
        """Client i's feature measure, subsampled when the pool asks for it."""
        c = self.clients[i]
        pts = c.features if isinstance(c, LabeledDataset) else c.points
        if self.subsample_size is not None and rng is not None:
            take = min(self.subsample_size, pts.shape[0])
            pts = pts[rng.choice(pts.shape[0], size=take, replace=False)]
        return new_discrete(pts)

    def dataset(self, i: int, rng=None) -> LabeledDataset:
        from ..measures import new_labeled

        c = self.clients[i]
        if not isinstance(c, LabeledDataset):
            raise ConfigError(f"client {i} holds no labels")
        if self.subsample_size is not None and rng is not None:
            take = min(self.subsample_size, c.features.shape[0])
            idx = rng.choice(c.features.shape[0], size=take, replace=False)
            return new_labeled(c.features[idx], c.labels[idx])
        return c


def coreset_fit_federated(pool: ClientPool, k: int, rounds: int = 50,
                          clients_per_round: int | None = None,
                          learning_rate: float = 1.0,
                          fed: FedConfig | None = None, seed: int = 0) -> Coreset:
    """Federated fit.

    Per round: sample clients, run the federated distance protocol between
    the current coreset and each sampled client's (sub)dataset, pool the
    final interpolants into one equal-weight mixture, and descend the
    coordinator-side gradient d/dx W2^2(coreset, mixture). Solving one
    transport against the mixture splits the coreset across clients the way
    a run against the (never materialized) union of their data would; the
    gradient still decomposes into per-client blocks of the plan. Averaging
    independent per-client gradients instead would pull every point toward
    the grand centroid whenever clients hold disjoint regions, since each
    client run must transport the whole coreset onto its own data.

    The interpolation parameter of `fed` sets where the mixture sits
    between the coreset and the client data, so stationary coreset points
    land about (1-t) short of the client regions; fits that should reach
    the data want t close to 1. The coreset is initialized uniformly inside
    the clients' coordinate box, which is already disclosed by the protocol
    handshake.
    """
    fed = fed or FedConfig()
    c = len(pool)
    if clients_per_round is None:
        clients_per_round = min(10, c)
    if not (1 <= clients_per_round <= c):
        raise ConfigError(f"clients_per_round must be in [1, {c}], "
                          f"got {clients_per_round}")
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")
    dims = {pool.measure(i).d for i in range(c)}
    if len(dims) != 1:
        raise DimensionMismatchError(f"clients disagree on dimension: {sorted(dims)}")
    d = dims.pop()

    rng = np.random.default_rng(seed)
    ranges = [pool.measure(i).coordinate_range() for i in range(c)]
    lo = np.min([r[0] for r in ranges], axis=0)
    hi = np.max([r[1] for r in ranges], axis=0)
    x = lo + rng.random((k, d)) * (hi - lo)

    lr = float(learning_rate)
    trace = []
    for rd in range(rounds):
        chosen = rng.choice(c, size=clients_per_round, replace=False)
        cs = new_discrete(x)
        parts = []
        for ci in chosen:
            client_m = pool.measure(int(ci), rng)
            parts.append(run_fedwad(cs, client_m, fed).xi_final)
        mix = new_discrete(
            np.vstack([m.points for m in parts]),
            np.concatenate([m.weights for m in parts]) / len(parts))
        C = cost_matrix(cs, mix, p=2)
        plan = solve_exact(cs.weights, mix.weights, C)
        x = x - lr * grad_support(plan, cs, mix, side="mu")
        trace.append(plan.objective)
        log.debug("federated round %d: smoothed objective %.4g", rd, trace[-1])
    return Coreset(points=_readonly(x), objective_trace=tuple(trace))


def label_coreset(coreset: Coreset, client_data: LabeledDataset) -> Coreset:
    """Give each coreset point the label of its nearest client sample
    (squared Euclidean; ties go to the lowest sample index)."""
    if coreset.d != client_data.features.shape[1]:
        raise DimensionMismatchError("coreset and data dimensions differ")
    diff = coreset.points[:, None, :] - client_data.features[None, :, :]
    nearest = np.argmin((diff * diff).sum(axis=2), axis=1)
    labels = client_data.labels[nearest].copy()
    labels.setflags(write=False)
    return Coreset(points=coreset.points, labels=labels,
                   objective_trace=coreset.objective_trace)


def knn1_classify(pooled, queries):
    """1-NN over the union of labeled coresets, in pool order.

    queries may be a single d-vector or a (q, d) batch; ties resolve to the
    lowest index in the pooled order.
    """
    pooled = list(pooled)
    if not pooled:
        raise ConfigError("no coresets to classify against")
    for i, cs in enumerate(pooled):
        if cs.labels is None:
            raise ConfigError(f"coreset {i} is unlabeled; run label_coreset first")
    points = np.vstack([cs.points for cs in pooled])
    labels = np.concatenate([cs.labels for cs in pooled])
    q = np.asarray(queries, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    if q.shape[1] != points.shape[1]:
        raise DimensionMismatchError("query dimension does not match coresets")
    diff = q[:, None, :] - points[None, :, :]
    nearest = np.argmin((diff * diff).sum(axis=2), axis=1)
    out = labels[nearest]
    return int(out[0]) if single else out
