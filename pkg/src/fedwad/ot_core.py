"""Exact discrete optimal transport.

The general solver is a transportation network simplex over the bipartite
supply/demand graph. Degeneracy is broken Dantzig-style by perturbing the
demand vector with 1e-12 * j; the perturbation only steers basis selection,
final flows are recomputed exactly from the clean marginals on the optimal
tree. Uniform same-size inputs take a fast assignment route instead
(optimal vertices of that polytope are scaled permutations), which keeps
large equal-cloud solves tractable without touching the general path.

`oracle_cost` is the independent check: it splits atoms to a common
denominator and exhaustively minimizes over assignments. It shares no code
with the simplex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DimensionMismatchError,
    InfeasibleError,
    NegativeWeightError,
    NonFiniteValueError,
    NumericalFailureError,
    ShapeMismatchError,
    TooLargeForOracleError,
    UnsupportedExponentError,
)
from .measures import DiscreteMeasure

MASS_ATOL = 1e-9        # |sum(a) - sum(b)| beyond this is infeasible
PLAN_PRUNE = 1e-12      # coupling entries below this are zeroed
_UNIFORM_ATOL = 1e-12   # tolerance for the uniform fast-path test
_RATIONAL_ATOL = 1e-9   # oracle: |w - k/Q| must be below this
_ORACLE_LIMIT = 10      # largest common denominator the oracle accepts

_pivots = 0             # diagnostic: pivot count of the last simplex solve


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise ground costs ||x_i - y_j||^p for p in {1, 2}."""

    values: np.ndarray  # (n, m)
    order: int          # the exponent p

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray  # (n, m), pruned below PLAN_PRUNE
    objective: float      # <C, P>
    order: int

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coupling))

    def row_marginal(self):
        return self.coupling.sum(axis=1)

    def col_marginal(self):
        return self.coupling.sum(axis=0)


def _check_exponent(p):
    if p not in (1, 2):
        raise UnsupportedExponentError(f"p must be 1 or 2, got {p!r}")


def _sqdist(X, Y):
    # The broadcast form gives exact zeros on shared atoms; fall back to the
    # Gram identity only when the intermediate would be too large.
    n, m, d = X.shape[0], Y.shape[0], X.shape[1]
    if n * m * d <= 1 << 24:
        diff = X[:, None, :] - Y[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    D = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T)
    np.maximum(D, 0.0, out=D)
    return D


def cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2) -> CostMatrix:
    """Ground cost ||x_i - y_j||_2^p between the supports of mu and nu."""
    _check_exponent(p)
    if mu.d != nu.d:
        raise DimensionMismatchError(f"measures live in d={mu.d} vs d={nu.d}")
    D = _sqdist(mu.points, nu.points)
    if p == 1:
        D = np.sqrt(D)
    return CostMatrix(D, p)


def _validate_marginals(a, b, shape):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or (a.shape[0], b.shape[0]) != shape:
        raise ShapeMismatchError(
            f"marginals ({a.shape}, {b.shape}) do not match cost shape {shape}")
    if not np.isfinite(a).all() or not np.isfinite(b).all():
        raise NonFiniteValueError("marginals must be finite")
    if (a < 0).any() or (b < 0).any():
        raise NegativeWeightError("marginals must be nonnegative")
    if abs(float(a.sum()) - float(b.sum())) > MASS_ATOL:
        raise InfeasibleError(
            f"total masses differ: {a.sum()!r} vs {b.sum()!r}")
    return a, b


def _is_uniform(w):
    n = w.shape[0]
    return np.abs(w - 1.0 / n).max() <= _UNIFORM_ATOL


def solve_exact(a, b, cost: CostMatrix) -> TransportPlan:
    """Minimize <C, P> over couplings of (a, b). Returns a vertex plan
    with at most n + m - 1 nonzero entries."""
    C = cost.values
    a, b = _validate_marginals(a, b, C.shape)
    if not np.isfinite(C).all():
        raise NonFiniteValueError("cost matrix must be finite")
    n, m = C.shape
    if n == m and _is_uniform(a) and _is_uniform(b):
        rows, cols = linear_sum_assignment(C)
        P = np.zeros_like(C)
        P[rows, cols] = 1.0 / n
        obj = float(C[rows, cols].sum() / n)
        return TransportPlan(P, obj, cost.order)
    P = _network_simplex(a, b, C)
    P[P < PLAN_PRUNE] = 0.0
    obj = float((C * P).sum())
    return TransportPlan(P, obj, cost.order)


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2) -> float:
    """p-Wasserstein distance between two discrete measures."""
    C = cost_matrix(mu, nu, p)
    n, m = C.shape
    if n == m and _is_uniform(mu.weights) and _is_uniform(nu.weights):
        # objective without materializing the dense permutation plan
        rows, cols = linear_sum_assignment(C.values)
        obj = float(C.values[rows, cols].sum() / n)
    else:
        obj = solve_exact(mu.weights, nu.weights, C).objective
    return obj ** 0.5 if p == 2 else obj


# -- network simplex ---------------------------------------------------------
#
# Basis = spanning tree over rows 0..n-1 and cols n..n+m-1, rooted at row 0.
# Per node we keep the arc to its parent: its cell (prow, pcol) and its flow.
# Pivots re-hang only the detached subtree, so tree maintenance is O(cycle +
# subtree) instead of O(n+m); duals are refreshed from the root every couple
# of thousand pivots to stop float drift from accumulating.

def _greedy_start(pa, pb, C):
    """Cost-greedy initial spanning tree for the transportation polytope.

    Visit cells in increasing cost order, each fill saturating the smaller
    residual; every fill closes a row or a column, so the filled cells form
    a forest. Components are then stitched together with zero-flow arcs,
    cheapest crossing arc first. Returns (rows, cols, flows) of exactly
    n + m - 1 tree arcs. Starting near the optimum cuts pivot counts by
    orders of magnitude compared to a cost-blind northwest start.
    """
    n, m = C.shape
    order = np.argsort(C.ravel(), kind="stable")
    ra = pa.copy()
    rb = pb.copy()
    open_rows = int(np.count_nonzero(ra))
    open_cols = int(np.count_nonzero(rb))
    ai, aj, av = [], [], []
    uf = list(range(n + m))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for f in order:
        f = int(f)
        i = f // m
        j = f - i * m
        ri = ra[i]
        rj = rb[j]
        if ri == 0.0 or rj == 0.0:
            continue
        ai.append(i)
        aj.append(j)
        if ri <= rj:
            av.append(ri)
            rb[j] = rj - ri if ri < rj else 0.0
            ra[i] = 0.0
            open_rows -= 1
            if rb[j] == 0.0:
                open_cols -= 1
        else:
            av.append(rj)
            ra[i] = ri - rj
            rb[j] = 0.0
            open_cols -= 1
        uf[find(i)] = find(n + j)
        if open_rows == 0 and open_cols == 0:
            break

    comp = {}
    for x in range(n + m):
        comp.setdefault(find(x), []).append(x)
    comps = list(comp.values())
    if len(comps) > 1:
        # Put the root's component first, then components that bring a
        # column, so row-only groups (zero-weight rows) always find an
        # absorbed column to attach to.
        root_root = find(0)
        comps.sort(key=lambda g: (find(g[0]) != root_root,
                                  not any(x >= n for x in g)))
        absorbed_rows = [x for x in comps[0] if x < n]
        absorbed_cols = [x - n for x in comps[0] if x >= n]
        for grp in comps[1:]:
            grows = [x for x in grp if x < n]
            gcols = [x - n for x in grp if x >= n]
            best = None
            if grows and absorbed_cols:
                sub = C[np.ix_(grows, absorbed_cols)]
                k = int(np.argmin(sub))
                r, c = divmod(k, len(absorbed_cols))
                best = (float(sub[r, c]), grows[r], absorbed_cols[c])
            if gcols and absorbed_rows:
                sub = C[np.ix_(absorbed_rows, gcols)]
                k = int(np.argmin(sub))
                r, c = divmod(k, len(gcols))
                cand = (float(sub[r, c]), absorbed_rows[r], gcols[c])
                if best is None or cand[0] < best[0]:
                    best = cand
            ai.append(best[1])
            aj.append(best[2])
            av.append(0.0)
            absorbed_rows += grows
            absorbed_cols += gcols
    return ai, aj, av


def _network_simplex(a, b, C):
    n, m = C.shape
    N = n + m
    max_iter = 100 * n * m

    # Perturb demands so ratio ties (the source of degenerate pivots) have
    # measure zero; rescale b first so totals match exactly. Total extra
    # mass is 1e-12 whatever m, so flows recomputed at the end against the
    # unperturbed marginals can go negative by at most that much, which the
    # caller's pruning then zeroes harmlessly.
    sa = float(a.sum())
    sb = float(b.sum())
    eps = 2e-12 / (m * (m + 1))
    pb = b * (sa / sb) + eps * np.arange(1, m + 1)
    pa = a.astype(np.float64).copy()
    pa[-1] += eps * (m * (m + 1) // 2)

    parent = np.full(N, -1, dtype=np.int64)
    prow = np.full(N, -1, dtype=np.int64)
    pcol = np.full(N, -1, dtype=np.int64)
    fl = np.zeros(N)
    depth = np.zeros(N, dtype=np.int64)
    pi = np.zeros(N)
    children = [set() for _ in range(N)]

    if n * m <= 1 << 24:
        arcs_i, arcs_j, flows = _greedy_start(pa, pb, C)
        if len(arcs_i) != N - 1:
            raise NumericalFailureError("initial basis is not a spanning tree")
        adj = [[] for _ in range(N)]
        for k, (gi, gj) in enumerate(zip(arcs_i, arcs_j)):
            adj[gi].append((n + gj, k))
            adj[n + gj].append((gi, k))
        visited = np.zeros(N, dtype=bool)
        visited[0] = True
        stack = [0]
        seen = 1
        while stack:
            u = stack.pop()
            for v, k in adj[u]:
                if not visited[v]:
                    visited[v] = True
                    parent[v] = u
                    prow[v] = arcs_i[k]
                    pcol[v] = arcs_j[k]
                    fl[v] = flows[k]
                    depth[v] = depth[u] + 1
                    children[u].add(v)
                    stack.append(v)
                    seen += 1
        if seen != N:
            raise NumericalFailureError("initial basis is not a spanning tree")
    else:
        # Northwest-corner staircase: each cell after the first advances
        # exactly one index, so every cell hangs one new node onto the tree.
        # Cost-blind, but needs no argsort of the full cost matrix.
        i = j = 0
        ra = float(pa[0])
        rb = float(pb[0])
        new_is_col = True
        while True:
            f = min(ra, rb)
            v, p = (n + j, i) if new_is_col else (i, n + j)
            parent[v] = p
            prow[v] = i
            pcol[v] = j
            fl[v] = f
            depth[v] = depth[p] + 1
            children[p].add(v)
            if i == n - 1 and j == m - 1:
                break
            if (ra < rb or j == m - 1) and i < n - 1:
                i += 1
                rb -= f
                ra = float(pa[i])
                new_is_col = False
            else:
                j += 1
                ra -= f
                rb = float(pb[j])
                new_is_col = True

    def refresh_subtree(start):
        # recompute depth and duals below `start` from its (already correct)
        # parent; iterative DFS
        stack = [start]
        seen = 0
        while stack:
            w = stack.pop()
            p = int(parent[w])
            depth[w] = depth[p] + 1
            pi[w] = C[prow[w], pcol[w]] - pi[p]
            seen += 1
            stack.extend(children[w])
        return seen

    def full_refresh():
        pi[0] = 0.0
        depth[0] = 0
        seen = 1
        for w in children[0]:
            seen += refresh_subtree(w)
        if seen != N:
            raise NumericalFailureError("basis lost connectivity")

    full_refresh()
    tol = 1e-11 * max(1.0, float(np.abs(C).max()))
    refresh_countdown = 2 * N

    # Pricing rotates over blocks of rows (sized to roughly 32k entries)
    # and enters the most negative arc in the first block that has one; a
    # clean full rotation certifies optimality. Row blocks price through
    # plain 2D broadcasts, with no per-entry index arithmetic.
    u = pi[:n]
    v = pi[n:]
    row_block = max(1, (1 << 15) // max(1, m))
    pos0 = 0
    chain_duals = min(n, m) <= 64
    half = N // 2

    global _pivots
    _pivots = 0
    for _ in range(max_iter):
        if refresh_countdown <= 0:
            full_refresh()
            refresh_countdown = 2 * N
        refresh_countdown -= 1

        ei = -1
        pos = pos0
        scanned = 0
        while scanned < n:
            e = min(pos + row_block, n)
            Rb = C[pos:e] - u[pos:e, None] - v[None, :]
            di, dj = divmod(int(np.argmin(Rb)), m)
            if Rb[di, dj] < -tol:
                ei = pos + di
                ej = dj
                r_enter = float(Rb[di, dj])
                pos0 = pos
                break
            scanned += e - pos
            pos = e if e < n else 0
        if ei < 0:
            break
        _pivots += 1

        # Find the lowest common ancestor by climbing both endpoints one
        # step at a time with position marks, so the cost is the cycle
        # length, not the tree depth.
        u0, v0 = ei, n + ej
        pathu = [u0]
        pathv = [v0]
        posu = {u0: 0}
        posv = {v0: 0}
        cu = cv = None
        while cu is None:
            w = pathu[-1]
            if w != 0:
                w = int(parent[w])
                if w in posv:
                    cu = pathu[:]
                    cv = pathv[:posv[w]]
                    break
                posu[w] = len(pathu)
                pathu.append(w)
            w = pathv[-1]
            if w != 0:
                w = int(parent[w])
                if w in posu:
                    cv = pathv[:]
                    cu = pathu[:posu[w]]
                    break
                posv[w] = len(pathv)
                pathv.append(w)

        # conservation alternates arc signs along each chain, starting with
        # "-" at the entering endpoints
        delta = np.inf
        leave, leave_in_u = -1, False
        for idx in range(0, len(cu), 2):
            w = cu[idx]
            if fl[w] < delta:
                delta, leave, leave_in_u = fl[w], w, True
        for idx in range(0, len(cv), 2):
            w = cv[idx]
            if fl[w] < delta:
                delta, leave, leave_in_u = fl[w], w, False
        if not np.isfinite(delta):
            raise NumericalFailureError("unbounded pivot")
        for idx, w in enumerate(cu):
            fl[w] += delta if idx % 2 else -delta
        for idx, w in enumerate(cv):
            fl[w] += delta if idx % 2 else -delta

        # the subtree under `leave` detaches; re-root it at the entering
        # endpoint it contains and hang it on the other endpoint
        s, o = (u0, v0) if leave_in_u else (v0, u0)
        path = [s]
        while path[-1] != leave:
            path.append(int(parent[path[-1]]))
        old_parent = [int(parent[w]) for w in path]
        old_cell = [(int(prow[w]), int(pcol[w])) for w in path]
        old_flow = [float(fl[w]) for w in path]
        children[old_parent[-1]].discard(leave)
        for t in range(len(path) - 1, 0, -1):
            w, nxt = path[t], path[t - 1]
            parent[w] = nxt
            prow[w], pcol[w] = old_cell[t - 1]
            fl[w] = old_flow[t - 1]
            children[nxt].add(w)
            children[w].discard(nxt)
        parent[s] = o
        prow[s], pcol[s] = ei, ej
        fl[s] = delta
        children[o].add(s)

        # Duals must change on exactly one side of the leaving cut. Two
        # strategies, picked by aspect ratio:
        #  - thin problems rebuild every dual from scratch: resolve the
        #    smaller side by climbing parent chains (memoized), then gather
        #    the larger side in one vectorized pass. Tree arcs alternate
        #    row/col, so every column's parent is a row and vice versa;
        #    cost is O(min) python steps plus an O(max) gather per pivot,
        #    however large a subtree the re-hang moved.
        #  - squarish problems shift the moved subtree by the entering
        #    arc's reduced cost (rows and columns oppositely). Reduced
        #    costs are invariant under a global row+t/col-t gauge, so the
        #    complement may be shifted instead when it is the smaller walk.
        if not chain_duals:
            t = r_enter if s < n else -r_enter
            nodes = [s]
            qi = 0
            small = True
            while qi < len(nodes):
                nodes.extend(children[nodes[qi]])
                qi += 1
                if len(nodes) > half:
                    small = False
                    break
            if small:
                for w in nodes:
                    pi[w] += t if w < n else -t
            else:
                stack = [0]
                while stack:
                    w = stack.pop()
                    for c2 in children[w]:
                        if c2 != s:
                            stack.append(c2)
                    pi[w] += -t if w < n else t
        elif m <= n:
            done = np.zeros(m, dtype=bool)
            for j0 in range(m):
                if done[j0]:
                    continue
                chain = []
                jc = j0
                while True:
                    chain.append(jc)
                    r = int(prow[n + jc])
                    if r == 0:
                        break
                    jc = int(pcol[r])
                    if done[jc]:
                        break
                for jc in reversed(chain):
                    r = int(prow[n + jc])
                    ur = 0.0 if r == 0 else C[r, int(pcol[r])] - v[int(pcol[r])]
                    v[jc] = C[r, jc] - ur
                    done[jc] = True
            u[0] = 0.0
            if n > 1:
                pc = pcol[1:n]
                u[1:] = C[np.arange(1, n), pc] - v[pc]
        else:
            done = np.zeros(n, dtype=bool)
            done[0] = True
            u[0] = 0.0
            for i0 in range(1, n):
                if done[i0]:
                    continue
                chain = []
                ic = i0
                while True:
                    chain.append(ic)
                    cp = int(pcol[ic])
                    ic = int(prow[n + cp])
                    if done[ic]:
                        break
                for ic in reversed(chain):
                    cp = int(pcol[ic])
                    r = int(prow[n + cp])
                    u[ic] = C[ic, cp] - (C[r, cp] - u[r])
                    done[ic] = True
            pr_ = prow[n:]
            v[:] = C[pr_, np.arange(m)] - u[pr_]
    else:
        raise NumericalFailureError(f"no optimum within {max_iter} pivots")

    # Optimal basis found: recompute flows by leaf elimination against the
    # unperturbed marginals, so the plan is exact for the caller's data.
    order = np.empty(N, dtype=np.int64)
    order[0] = 0
    head, count = 0, 1
    while head < count:
        u = int(order[head])
        head += 1
        for w in children[u]:
            order[count] = w
            count += 1
    if count != N:
        raise NumericalFailureError("basis lost connectivity")
    residual = np.concatenate([a, b])
    P = np.zeros((n, m))
    for v in order[:0:-1]:
        v = int(v)
        p = int(parent[v])
        P[prow[v], pcol[v]] = residual[v]
        residual[p] -= residual[v]
    return P


# -- enumeration oracle -------------------------------------------------------

def _split_to_common_denominator(a, b):
    n, m = len(a), len(b)
    for Q in range(max(n, m), _ORACLE_LIMIT + 1):
        ka = np.rint(a * Q).astype(np.int64)
        kb = np.rint(b * Q).astype(np.int64)
        if (ka < 1).any() or (kb < 1).any():
            continue
        if ka.sum() != Q or kb.sum() != Q:
            continue
        if np.abs(a - ka / Q).max() > _RATIONAL_ATOL:
            continue
        if np.abs(b - kb / Q).max() > _RATIONAL_ATOL:
            continue
        return Q, ka, kb
    raise TooLargeForOracleError(
        f"no common denominator <= {_ORACLE_LIMIT} represents these weights")


def _assignment_min_enumerate(EC):
    Q = EC.shape[0]
    best = np.inf
    cols = range(Q)
    for perm in itertools.permutations(cols):
        s = 0.0
        for r in cols:
            s += EC[r, perm[r]]
            if s >= best:
                break
        else:
            best = s
    return best


def _assignment_min_dp(EC):
    # Exhaustive minimum over assignments via subset DP (Held-Karp); exact,
    # and fast enough for Q up to the oracle limit.
    Q = EC.shape[0]
    size = 1 << Q
    dp = np.full(size, np.inf)
    dp[0] = 0.0
    for S in range(1, size):
        r = bin(S).count("1") - 1
        best = np.inf
        rest = S
        while rest:
            low = rest & -rest
            j = low.bit_length() - 1
            cand = dp[S ^ low] + EC[r, j]
            if cand < best:
                best = cand
            rest ^= low
        dp[S] = best
    return float(dp[size - 1])


def oracle_cost(a, b, cost: CostMatrix) -> float:
    """Brute-force optimal objective, independent of the simplex.

    Splits each atom into unit masses 1/Q for the smallest common
    denominator Q <= 10, then exhaustively minimizes the resulting QxQ
    assignment problem. Raises TooLargeForOracleError when the weights
    have no such representation.
    """
    C = cost.values
    a, b = _validate_marginals(a, b, C.shape)
    Q, ka, kb = _split_to_common_denominator(a, b)
    rows = np.repeat(np.arange(len(a)), ka)
    cols = np.repeat(np.arange(len(b)), kb)
    EC = C[np.ix_(rows, cols)]
    if Q <= 7:
        best = _assignment_min_enumerate(EC)
    else:
        best = _assignment_min_dp(EC)
    return float(best / Q)


# -- derivatives ---------------------------------------------------------------

def grad_support(plan: TransportPlan, mu: DiscreteMeasure, nu: DiscreteMeasure,
                 side: str = "nu"):
    """Envelope-theorem gradient of <C, P*> w.r.t. one side's support points
    (squared-Euclidean cost only).

    For side "nu", row j is 2 (b_j y_j - (P^T X)_j); for side "mu", row i is
    2 (a_i x_i - (P Y)_i). The plan is held fixed, which is exactly the
    envelope derivative at non-degenerate optima.
    """
    if plan.order != 2:
        raise UnsupportedExponentError("support gradients require p=2 plans")
    if plan.coupling.shape != (mu.n, nu.n):
        raise ShapeMismatchError("plan does not match the measure pair")
    if side == "nu":
        return 2.0 * (nu.weights[:, None] * nu.points - plan.coupling.T @ mu.points)
    if side == "mu":
        return 2.0 * (mu.weights[:, None] * mu.points - plan.coupling @ nu.points)
    raise ValueError(f"side must be 'mu' or 'nu', got {side!r}")
