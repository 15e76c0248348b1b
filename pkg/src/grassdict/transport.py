"""Exact discrete optimal transport.

Three solvers, all returning a coupling matrix whose row sums are the source
weights and whose column sums are the target weights:

* :func:`assignment_plan` -- uniform weights on two sets of equal size; the
  problem is a linear assignment, solved by ``scipy.optimize.linear_sum_assignment``.
* :func:`transport_simplex` -- arbitrary weights; the transportation simplex
  with a north-west-corner start and MODI (u-v potential) pricing.
* :func:`bottleneck_plan` -- minimizes the largest cost on the plan's support,
  by bisection over the sorted distinct costs.
"""

from collections import deque

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ContractError, DecompositionError

WEIGHT_TOL = 1e-12


def check_weights(w, name):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ContractError(f"{name} must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ContractError(f"{name} must be finite and nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, w.size):
        raise ContractError(f"{name} must sum to 1 (got {w.sum()!r})")
    return w


def is_uniform_square(a, b):
    n = a.size
    return n == b.size and np.all(a == 1.0 / n) and np.all(b == 1.0 / n)


def assignment_plan(cost):
    """Optimal plan between two uniform measures of the same size."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ContractError("assignment needs a square cost matrix")
    rows, cols = linear_sum_assignment(cost)
    plan = np.zeros_like(cost)
    plan[rows, cols] = 1.0 / n
    return plan


def _northwest_corner(supply, demand):
    m, n = supply.size, demand.size
    s, d = supply.copy(), demand.copy()
    x = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        q = min(s[i], d[j])
        x[i, j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        # exactly one move per cell keeps m + n - 1 basic cells
        if j == n - 1 or (i < m - 1 and s[i] <= d[j]):
            i += 1
        else:
            j += 1
    return x, basis


def _potentials(cost, basis, m, n):
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot = np.full(m + n, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if np.isnan(pot[nxt]):
                if node < m:
                    pot[nxt] = cost[node, nxt - m] - pot[node]
                else:
                    pot[nxt] = cost[nxt, node - m] - pot[node]
                queue.append(nxt)
    if np.any(np.isnan(pot)):
        raise DecompositionError("transportation basis is not a spanning tree")
    return pot[:m], pot[m:], adj


def _tree_path(adj, start, goal):
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt in adj[node]:
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def transport_simplex(cost, supply, demand, max_iter=None):
    """Minimum-cost plan for a balanced transportation problem.

    Parameters
    ----------
    cost : array of shape (m, n)
    supply : array of shape (m,)
    demand : array of shape (n,)
        Nonnegative, with equal totals.

    Returns
    -------
    plan : array of shape (m, n)
    """
    cost = np.asarray(cost, dtype=float)
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    m, n = cost.shape
    if supply.shape != (m,) or demand.shape != (n,):
        raise ContractError("weight lengths do not match the cost matrix")
    if abs(supply.sum() - demand.sum()) > 1e-9:
        raise ContractError("transportation problem is not balanced")
    scale = max(1.0, float(np.abs(cost).max()))
    x, basis = _northwest_corner(supply, demand)
    if max_iter is None:
        max_iter = 50 * (m + n) ** 2 + 1000
    for _ in range(max_iter):
        u, v, adj = _potentials(cost, basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0
        flat = int(np.argmin(reduced))
        i0, j0 = divmod(flat, n)
        if reduced[i0, j0] >= -1e-12 * scale:
            return np.maximum(x, 0.0)
        path = _tree_path(adj, i0, m + j0)
        # path alternates row, col, row, ..., col; its edges alternate -, +, -
        edges = []
        for a, b in zip(path[:-1], path[1:]):
            edges.append((a, b - m) if a < m else (b, a - m))
        minus = edges[0::2]
        plus = edges[1::2]
        theta_idx = min(range(len(minus)), key=lambda k: (x[minus[k]], k))
        theta = x[minus[theta_idx]]
        for cell in minus:
            x[cell] -= theta
        for cell in plus:
            x[cell] += theta
        x[i0, j0] += theta
        leaving = minus[theta_idx]
        x[leaving] = 0.0
        basis.remove(leaving)
        basis.append((i0, j0))
    raise DecompositionError("transportation simplex exceeded its iteration cap")


def optimal_plan(cost, a, b):
    """Exact optimal plan; Hungarian when both measures are uniform and equal-sized."""
    cost = np.asarray(cost, dtype=float)
    if is_uniform_square(a, b):
        return assignment_plan(cost)
    return transport_simplex(cost, a, b)


def _feasible(allowed, a, b, uniform_square):
    if uniform_square:
        match = maximum_bipartite_matching(csr_matrix(allowed.astype(np.int8)), perm_type="column")
        if np.all(match >= 0):
            n = allowed.shape[0]
            plan = np.zeros(allowed.shape)
            plan[np.arange(n), match] = 1.0 / n
            return plan
        return None
    plan = transport_simplex((~allowed).astype(float), a, b)
    if plan[~allowed].sum() <= 1e-12:
        return plan
    return None


def bottleneck_plan(cost, a, b):
    """Plan minimizing ``max cost`` over its support, and that optimal value."""
    cost = np.asarray(cost, dtype=float)
    uniform_square = is_uniform_square(a, b)
    values = np.unique(cost)
    lo, hi = 0, values.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(cost <= values[mid], a, b, uniform_square) is None:
            lo = mid + 1
        else:
            hi = mid
    return _feasible(cost <= values[lo], a, b, uniform_square), float(values[lo])
