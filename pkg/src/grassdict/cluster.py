"""Analytics on distance matrices between dictionaries.

Gaussian similarities, affinity propagation, consensus of several partitions,
Hausdorff-linkage agglomeration, Laplacian eigenmaps and a session purity
score. Every function takes a square symmetric matrix with zero diagonal.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.cluster import hierarchy
from scipy.linalg import eigh
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import squareform
from sklearn.metrics import normalized_mutual_info_score

from .errors import ContractError

SYMMETRY_TOL = 1e-12


@dataclass
class Partition:
    """Cluster labels in ``[0, k)`` with optional exemplar indices per label."""

    labels: np.ndarray
    exemplars: Optional[np.ndarray] = None
    converged: bool = True
    n_iter: int = 0

    @property
    def n_clusters(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0


@dataclass
class Embedding:
    coords: np.ndarray
    eigenvalues: np.ndarray
    components: np.ndarray
    disconnected: bool


def check_distance_matrix(d, tol=SYMMETRY_TOL):
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise ContractError(f"expected a nonempty square matrix, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ContractError("distance matrix has non-finite entries")
    scale = max(1.0, float(np.abs(d).max()))
    if np.abs(d - d.T).max() > tol * scale:
        raise ContractError("distance matrix is not symmetric")
    if np.abs(np.diag(d)).max() > tol * scale:
        raise ContractError("distance matrix must have a zero diagonal")
    return d


def relabel(labels):
    """Renumber labels ``0, 1, ...`` in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse.ravel()]


def to_similarity(d, sigma=1.0):
    """Gaussian similarities ``exp(-g**2 / (2 sigma**2))``.

    The diagonal holds the preference: the similarity of the median
    off-diagonal distance.
    """
    d = check_distance_matrix(d)
    if sigma <= 0:
        raise ContractError("sigma must be positive")
    s = np.exp(-(d**2) / (2.0 * sigma**2))
    n = len(d)
    if n > 1:
        g = np.median(d[~np.eye(n, dtype=bool)])
        np.fill_diagonal(s, np.exp(-(g**2) / (2.0 * sigma**2)))
    return s


def affinity_propagation(s, damping=0.5, window=50, max_iter=500):
    """Exemplar clustering by responsibility/availability message passing.

    ``s`` is a similarity matrix whose diagonal carries the preferences.
    Iteration stops once the exemplar set has been unchanged for ``window``
    consecutive iterations. If ``max_iter`` is reached first, the last
    labeling is returned with ``converged=False`` and a warning.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
        raise ContractError("similarity matrix must be square and nonempty")
    if not np.all(np.isfinite(s)):
        raise ContractError("similarity matrix has non-finite entries")
    if not 0.5 <= damping < 1:
        raise ContractError("damping must lie in [0.5, 1)")
    n = len(s)
    if n == 1:
        return Partition(np.zeros(1, dtype=int), np.zeros(1, dtype=int))

    rows = np.arange(n)
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    previous = None
    stable = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        tmp = a + s
        best = tmp.argmax(axis=1)
        first = tmp[rows, best]
        tmp[rows, best] = -np.inf
        second = tmp.max(axis=1)
        r_new = s - first[:, None]
        r_new[rows, best] = s[rows, best] - second
        r = damping * r + (1 - damping) * r_new

        rp = np.maximum(r, 0)
        rp[rows, rows] = r[rows, rows]
        a_new = rp.sum(axis=0)[None, :] - rp
        self_avail = a_new[rows, rows].copy()
        a_new = np.minimum(a_new, 0)
        a_new[rows, rows] = self_avail
        a = damping * a + (1 - damping) * a_new

        exemplar = (np.diag(a) + np.diag(r)) > 0
        if previous is not None and np.array_equal(exemplar, previous):
            stable += 1
        else:
            stable = 0
        previous = exemplar
        if stable >= window and exemplar.any():
            converged = True
            break

    exemplars = np.flatnonzero(previous)
    if len(exemplars) == 0:
        exemplars = np.array([int(np.argmax(np.diag(a) + np.diag(r)))])
    if not converged:
        warnings.warn(
            f"affinity propagation did not converge in {max_iter} iterations",
            RuntimeWarning,
            stacklevel=2,
        )
    labels = s[:, exemplars].argmax(axis=1)
    labels[exemplars] = np.arange(len(exemplars))
    return Partition(labels, exemplars, converged, it)


def _co_association(partitions):
    n = len(partitions[0])
    co = np.zeros((n, n))
    for p in partitions:
        p = np.asarray(p)
        co += p[:, None] == p[None, :]
    return co / len(partitions)


def average_nmi(partition, partitions):
    """Mean normalized mutual information (geometric normalization)."""
    return float(
        np.mean(
            [normalized_mutual_info_score(p, partition, average_method="geometric") for p in partitions]
        )
    )


def consensus_ensemble(partitions, n_clusters):
    """Combine partitions through their co-association matrix.

    Pairs are scored by the fraction of inputs that put them together, and
    ``1 - score`` is clustered by average linkage cut at ``n_clusters``.

    Returns ``(partition, nmi)`` where ``nmi`` is the mean normalized mutual
    information between the consensus and the inputs.
    """
    partitions = [np.asarray(getattr(p, "labels", p)) for p in partitions]
    if not partitions:
        raise ContractError("at least one partition is required")
    n = len(partitions[0])
    if any(len(p) != n for p in partitions):
        raise ContractError("partitions must cover the same points")
    if not 1 <= n_clusters <= n:
        raise ContractError(f"n_clusters must lie in [1, {n}]")
    if n == 1:
        labels = np.zeros(1, dtype=int)
    else:
        dist = 1.0 - _co_association(partitions)
        np.fill_diagonal(dist, 0.0)
        z = hierarchy.linkage(squareform(dist, checks=False), method="average")
        labels = relabel(hierarchy.cut_tree(z, n_clusters=n_clusters).ravel())
    return Partition(labels), average_nmi(labels, partitions)


def _hausdorff_link(d, a, b):
    block = d[np.ix_(a, b)]
    return max(block.min(axis=1).max(), block.min(axis=0).max())


def hierarchical_hausdorff(d):
    """Agglomerative clustering with the discrete Hausdorff distance as linkage.

    Clusters are numbered like scipy: points ``0..n-1``, and the cluster
    created at step ``s`` (from 1) gets id ``n + s - 1``. Ties are broken by
    the smallest ``(a, b)`` id pair.

    Returns the merge list ``[(a, b, height), ...]`` with ``a < b``.
    """
    d = check_distance_matrix(d)
    n = len(d)
    members = {i: [i] for i in range(n)}
    link = {}
    for i in range(n):
        for j in range(i + 1, n):
            link[(i, j)] = d[i, j]
    merges = []
    for step in range(1, n):
        a, b = min(link, key=lambda ab: (link[ab], ab))
        height = link[(a, b)]
        new = n + step - 1
        merged = members.pop(a) + members.pop(b)
        link = {ab: v for ab, v in link.items() if a not in ab and b not in ab}
        for c, pts in members.items():
            link[(c, new)] = _hausdorff_link(d, pts, merged)
        members[new] = merged
        merges.append((a, b, float(height)))
    return merges


def merges_to_linkage(merges, n):
    """Merge list as a scipy linkage matrix (for plotting or comparison)."""
    size = {i: 1 for i in range(n)}
    z = np.empty((len(merges), 4))
    for s, (a, b, h) in enumerate(merges):
        size[n + s] = size[a] + size[b]
        z[s] = (a, b, h, size[n + s])
    return z


def knn_graph(d, neighbors):
    """Symmetric binary adjacency: ``i ~ j`` if either is among the other's neighbors."""
    n = len(d)
    masked = d + np.diag(np.full(n, np.inf))
    nearest = np.argsort(masked, axis=1, kind="stable")[:, :neighbors]
    w = np.zeros((n, n))
    w[np.repeat(np.arange(n), neighbors), nearest.ravel()] = 1.0
    return np.maximum(w, w.T)


def _component_embedding(w, out_dim):
    lap = np.diag(w.sum(axis=1)) - w
    values, vectors = eigh(lap)
    coords = np.zeros((len(w), out_dim))
    take = min(out_dim, len(w) - 1)
    coords[:, :take] = vectors[:, 1 : 1 + take]
    return coords, values


def laplacian_eigenmaps(d, neighbors=10, out_dim=2):
    """Embed points with eigenvectors of a kNN graph Laplacian ``L = D - W``.

    The coordinates are the eigenvectors of the ``out_dim`` smallest nonzero
    eigenvalues. A disconnected graph is embedded one component at a time
    (components too small for ``out_dim`` coordinates are zero padded) and the
    first coordinate of component ``c`` out of ``C`` is shifted by
    ``3 * (c - (C - 1) / 2)``; the result is flagged ``disconnected``.
    """
    d = check_distance_matrix(d)
    n = len(d)
    if not 1 <= neighbors < n:
        raise ContractError(f"neighbors must lie in [1, {n - 1}]")
    if out_dim < 1:
        raise ContractError("out_dim must be positive")
    w = knn_graph(d, neighbors)
    n_comp, comp = connected_components(w, directed=False)
    if n_comp == 1:
        coords, values = _component_embedding(w, out_dim)
        return Embedding(coords, values, comp, False)
    warnings.warn(f"neighborhood graph has {n_comp} components", RuntimeWarning, stacklevel=2)
    coords = np.zeros((n, out_dim))
    values = []
    for c in range(n_comp):
        idx = np.flatnonzero(comp == c)
        sub, vals = _component_embedding(w[np.ix_(idx, idx)], out_dim)
        sub[:, 0] += 3.0 * (c - (n_comp - 1) / 2.0)
        coords[idx] = sub
        values.append(vals)
    return Embedding(coords, np.sort(np.concatenate(values)), comp, True)


def session_purity(labels, sessions):
    """``2 * f - 1`` where ``f`` is the size-weighted majority-session fraction.

    1 means every cluster holds a single session and 0 means every cluster
    is split evenly.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    sessions = np.asarray(sessions)
    if labels.shape != sessions.shape or labels.ndim != 1 or len(labels) == 0:
        raise ContractError("labels and sessions must be nonempty and the same length")
    values = np.unique(sessions)
    if len(values) > 2:
        raise ContractError("sessions must be binary")
    majority = 0
    for lab in np.unique(labels):
        in_cluster = sessions[labels == lab]
        majority += max(np.sum(in_cluster == v) for v in values)
    return float(2 * majority - len(labels)) / len(labels)
