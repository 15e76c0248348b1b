"""Frame-theoretic diagnostics for univariate frames.

A frame is an ``(N, M)`` array whose M columns are the frame vectors.
Multivariate dictionaries can be inspected through :func:`flatten_dictionary`,
which turns each ``N x rho`` atom into one column of length ``N * rho``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linops
from .errors import ContractError, GuardError, RankDeficiencyError, ShapeMismatchError

RIP_SUBSET_CAP = 10**6


def as_frame(frame, unit_norm=False, tol=1e-12):
    f = linops.as_matrix(frame, "frame")
    if unit_norm:
        norms = np.linalg.norm(f, axis=0)
        if np.abs(norms - 1.0).max() > tol:
            raise ContractError("frame vectors must have unit norm")
    return f


def flatten_dictionary(dictionary):
    """``(M, N, rho)`` stack of atoms -> ``(N * rho, M)`` frame."""
    d = np.asarray(dictionary, dtype=float)
    return d.reshape(d.shape[0], -1).T.copy()


def normalize_columns(frame):
    f = np.array(frame, dtype=float)
    norms = np.linalg.norm(f, axis=0)
    if np.any(norms == 0):
        raise ContractError("cannot normalize a zero frame vector")
    return f / norms


def analysis(frame, w):
    """Coefficients ``<w, u_i>`` of ``w`` against every frame vector."""
    f = as_frame(frame)
    w = np.asarray(w, dtype=float)
    if w.shape != (f.shape[0],):
        raise ShapeMismatchError(f"vector of length {f.shape[0]} expected, got shape {w.shape}")
    return f.T @ w


def synthesis(frame, c):
    """Linear combination ``sum_i c_i u_i``."""
    f = as_frame(frame)
    c = np.asarray(c, dtype=float)
    if c.shape != (f.shape[1],):
        raise ShapeMismatchError(f"{f.shape[1]} coefficients expected, got shape {c.shape}")
    return f @ c


def frame_operator(frame):
    f = as_frame(frame)
    return f @ f.T


def frame_operator_bounds(frame, rank_tol=linops.DEFAULT_RANK_TOL):
    """Optimal lower and upper frame bounds (extreme eigenvalues of ``F F^T``)."""
    values, _ = linops.sym_eigen(frame_operator(frame))
    if values[0] <= rank_tol * max(values[-1], 1e-300):
        raise RankDeficiencyError("vectors do not span the space; not a frame")
    return float(values[0]), float(values[-1])


def is_tight(frame, tol=1e-9):
    b1, b2 = frame_operator_bounds(frame)
    return abs(b2 - b1) <= tol


def _normalized_gram(f):
    g = normalize_columns(f)
    return g.T @ g


def coherence(frame):
    """Largest absolute normalized inner product between distinct vectors."""
    f = as_frame(frame)
    if f.shape[1] < 2:
        raise ContractError("coherence needs at least two frame vectors")
    g = np.abs(_normalized_gram(f))
    np.fill_diagonal(g, 0.0)
    return float(min(g.max(), 1.0))


def welch_bound(m, n):
    """Lower bound on the coherence of ``m`` unit vectors in dimension ``n``."""
    if n < 1 or m < 2:
        raise ContractError("welch_bound needs n >= 1 and m >= 2")
    if m < n:
        raise ContractError("welch_bound needs m >= n")
    return math.sqrt((m - n) / (n * (m - 1)))


@dataclass
class EtfReport:
    is_etf: bool
    equiangular: bool
    tight: bool
    coherence: float
    welch_bound: float
    gap: float
    angle_spread: float
    frame_bounds: tuple
    within_existence_cap: bool


def is_equiangular_tight(frame, tol=1e-9):
    """Check whether a unit-norm frame is an equiangular tight frame.

    Returns an :class:`EtfReport`; ``report.is_etf`` is the verdict and
    ``report.gap`` is how far the coherence sits above the Welch bound.
    """
    f = as_frame(frame, unit_norm=True, tol=max(tol, 1e-12))
    n, m = f.shape
    if m < 2:
        raise ContractError("ETF test needs at least two vectors")
    g = np.abs(f.T @ f)
    off = g[~np.eye(m, dtype=bool)]
    spread = float(off.max() - off.min())
    mu = float(off.max())
    wb = welch_bound(m, n) if m >= n else float("nan")
    try:
        bounds = frame_operator_bounds(f)
    except RankDeficiencyError:
        bounds = (0.0, float(np.linalg.eigvalsh(f @ f.T)[-1]))
    equi = spread <= tol
    tight = abs(bounds[1] - bounds[0]) <= tol
    return EtfReport(
        is_etf=bool(equi and tight),
        equiangular=bool(equi),
        tight=bool(tight),
        coherence=mu,
        welch_bound=wb,
        gap=mu - wb,
        angle_spread=spread,
        frame_bounds=bounds,
        within_existence_cap=m <= n * (n + 1) // 2,
    )


def rip_constant_exact(frame, k):
    """Smallest RIP constant of order ``k``, by enumerating every k-subset.

    Refuses with :class:`GuardError` when there are more than a million
    subsets.
    """
    f = as_frame(frame)
    m = f.shape[1]
    if not 1 <= k <= m:
        raise ContractError(f"k must lie in [1, {m}]")
    if math.comb(m, k) > RIP_SUBSET_CAP:
        raise GuardError(f"C({m},{k}) subsets exceed the enumeration cap {RIP_SUBSET_CAP}")
    gram = f.T @ f
    eye = np.eye(k)
    best = 0.0
    batch = []
    for subset in itertools.combinations(range(m), k):
        batch.append(subset)
        if len(batch) == 4096:
            best = max(best, _batch_deviation(gram, batch, eye))
            batch = []
    if batch:
        best = max(best, _batch_deviation(gram, batch, eye))
    return best


def _batch_deviation(gram, subsets, eye):
    idx = np.asarray(subsets)
    sub = gram[idx[:, :, None], idx[:, None, :]] - eye
    return float(np.abs(np.linalg.eigvalsh(sub)).max())


def rip_gershgorin_bound(frame, k):
    """Upper bound ``(k - 1) * coherence`` on the RIP constant of order ``k``."""
    if k < 1:
        raise ContractError("k must be at least 1")
    if k == 1:
        return 0.0
    return (k - 1) * coherence(frame)


def etf_penalty(frame, gram_cap=None):
    """Squared Frobenius distance from the Gram matrix to the nearest admissible target.

    Admissible targets have a unit diagonal and off-diagonal entries bounded
    by ``gram_cap`` in absolute value (the Welch bound by default).
    """
    f = as_frame(frame)
    n, m = f.shape
    if gram_cap is None:
        gram_cap = welch_bound(m, n)
    if not 0.0 <= gram_cap <= 1.0:
        raise ContractError("gram_cap must lie in [0, 1]")
    g = f.T @ f
    diag = np.diag(g)
    off = np.abs(g[~np.eye(m, dtype=bool)])
    return float(np.sum(np.maximum(off - gram_cap, 0.0) ** 2) + np.sum((diag - 1.0) ** 2))
