"""Interpolating measures along Wasserstein geodesics.

Two constructions over an optimal plan P* between mu and nu:

* exact: the displacement interpolant, one atom (1-t) x_i + t y_j of mass
  P*_ij per nonzero plan entry, coincident atoms merged. This is a point on
  a W_p geodesic, so distances split additively through it.
* approx: a fixed-support surrogate that keeps the smaller side's atom
  count. Each anchor atom moves toward its barycentric image under the
  plan, row i mapping to (P* Y)_i / a_i. With uniform weights and equal
  sizes the plan is a scaled permutation and this equals the exact
  interpolant; otherwise it is a cheap stand-in whose support never grows.

Both default to p=2 plans when none is supplied. The Gaussian helpers
cover the analytic equal-covariance case, where the geodesic just
translates the mean.
"""

from __future__ import annotations

import numpy as np

from .errors import CovarianceMismatchError, InvalidTError, ShapeMismatchError
from .measures import DiscreteMeasure, GaussianMeasure, _readonly, new_gaussian
from .ot_core import TransportPlan, cost_matrix, solve_exact

MERGE_ATOL = 1e-12  # atoms closer than this (per coordinate) collapse
COV_ATOL = 1e-9


def _check_t(t):
    t = float(t)
    if not np.isfinite(t) or t < 0.0 or t > 1.0:
        raise InvalidTError(f"t must lie in [0, 1], got {t!r}")
    return t


def _plan_for(mu, nu, plan):
    if plan is None:
        return solve_exact(mu.weights, nu.weights, cost_matrix(mu, nu, 2))
    if plan.coupling.shape != (mu.n, nu.n):
        raise ShapeMismatchError(
            f"plan shape {plan.coupling.shape} does not match ({mu.n}, {nu.n})")
    return plan


def _merge_atoms(points, weights):
    # lexicographic sort, then collapse runs of coordinate-wise equal rows
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    w = weights[order]
    if pts.shape[0] == 1:
        return pts, w
    same = (np.abs(np.diff(pts, axis=0)) <= MERGE_ATOL).all(axis=1)
    group = np.concatenate([[0], np.cumsum(~same)])
    k = group[-1] + 1
    first = np.searchsorted(group, np.arange(k))
    merged_w = np.zeros(k)
    np.add.at(merged_w, group, w)
    return pts[first], merged_w


def interp_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, t,
                 plan: TransportPlan | None = None) -> DiscreteMeasure:
    """Displacement interpolant at parameter t (t=0 gives mu, t=1 gives nu).

    When plan is omitted it is solved internally for p=2. A supplied plan
    must be optimal for (mu, nu); this is trusted, not re-verified.
    """
    t = _check_t(t)
    plan = _plan_for(mu, nu, plan)
    I, J = np.nonzero(plan.coupling)
    pts = (1.0 - t) * mu.points[I] + t * nu.points[J]
    w = plan.coupling[I, J]
    pts, w = _merge_atoms(pts, w)
    # Weights are the plan entries themselves, not a renormalized copy:
    # rescaling would erode the rational structure that keeps supports
    # small across repeated interpolation. Renormalize only if pruning
    # removed enough mass to threaten the simplex invariant.
    s = float(w.sum())
    if abs(s - 1.0) > 1e-11:
        w = w / s
    return DiscreteMeasure(_readonly(np.ascontiguousarray(pts)), _readonly(w))


def interp_approx(mu: DiscreteMeasure, nu: DiscreteMeasure, t,
                  plan: TransportPlan | None = None) -> DiscreteMeasure:
    """Fixed-support interpolant anchored on the smaller side.

    Support size is always min(mu.n, nu.n); output weights are the anchor
    side's weights. Anchoring on mu keeps t=0 exact; anchoring on nu keeps
    t=1 exact.
    """
    t = _check_t(t)
    plan = _plan_for(mu, nu, plan)
    P = plan.coupling
    if mu.n <= nu.n:
        w = mu.weights
        targets = np.divide(P @ nu.points, w[:, None],
                            out=mu.points.copy(), where=w[:, None] > 0)
        pts = (1.0 - t) * mu.points + t * targets
    else:
        w = nu.weights
        sources = np.divide(P.T @ mu.points, w[:, None],
                            out=nu.points.copy(), where=w[:, None] > 0)
        pts = (1.0 - t) * sources + t * nu.points
    # anchor weights pass through bit-exactly
    return DiscreteMeasure(_readonly(np.ascontiguousarray(pts)), _readonly(w.copy()))


# -- analytic Gaussian case ----------------------------------------------------

def _require_equal_cov(g1: GaussianMeasure, g2: GaussianMeasure):
    if g1.d != g2.d:
        raise ShapeMismatchError(f"dimension mismatch: {g1.d} vs {g2.d}")
    if np.abs(g1.covariance - g2.covariance).max() > COV_ATOL:
        raise CovarianceMismatchError(
            "Gaussian interpolation here requires equal covariances")


def gaussian_w2(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    """W2 between equal-covariance Gaussians: the distance between means."""
    _require_equal_cov(g1, g2)
    return float(np.linalg.norm(g1.mean - g2.mean))


def gaussian_interp(g1: GaussianMeasure, g2: GaussianMeasure, t) -> GaussianMeasure:
    """Geodesic point between equal-covariance Gaussians: mean moves
    linearly, covariance stays put."""
    t = _check_t(t)
    _require_equal_cov(g1, g2)
    return new_gaussian((1.0 - t) * g1.mean + t * g2.mean, g1.covariance)
