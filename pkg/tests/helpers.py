"""Shared test utilities: canonical atom comparison, a hand-rolled adjusted
Rand index, and fuzz generators. Kept independent of the library's own
numerics where they serve as oracles."""

import numpy as np


def canonical_atoms(measure, merge_tol=1e-12):
    """Sort atoms lexicographically and merge coordinate-duplicates, so two
    measures can be compared as weighted multisets."""
    pts = np.asarray(measure.points, dtype=np.float64)
    w = np.asarray(measure.weights, dtype=np.float64)
    order = np.lexsort(pts.T[::-1])
    pts, w = pts[order], w[order]
    out_p, out_w = [pts[0]], [w[0]]
    for i in range(1, len(w)):
        if np.all(np.abs(pts[i] - out_p[-1]) <= merge_tol):
            out_w[-1] += w[i]
        else:
            out_p.append(pts[i])
            out_w.append(w[i])
    return np.array(out_p), np.array(out_w)


def atoms_equal(m1, m2, tol=1e-9):
    """Weighted-multiset equality of two discrete measures within tol."""
    p1, w1 = canonical_atoms(m1)
    p2, w2 = canonical_atoms(m2)
    if p1.shape != p2.shape:
        return False
    return (np.abs(p1 - p2) <= tol).all() and (np.abs(w1 - w2) <= tol).all()


def adjusted_rand_index(a, b) -> float:
    """Pair-counting ARI, written directly from the contingency table."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    assert a.size == b.size
    n = a.size
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def random_measure(rng, n, d, uniform=False, scale=1.0):
    from fedwad.measures import new_discrete

    pts = scale * rng.standard_normal((n, d))
    if uniform:
        return new_discrete(pts)
    w = rng.random(n) + 0.05
    return new_discrete(pts, w)


def random_simplex(rng, n):
    w = rng.random(n) + 0.05
    return w / w.sum()
