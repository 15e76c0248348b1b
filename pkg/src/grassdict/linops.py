"""Dense linear-algebra substrate.

Thin, checked wrappers around LAPACK (through numpy) that every other module
uses. Everything is float64; inputs are never modified in place.
"""

from typing import NamedTuple

import numpy as np

from .errors import (
    ContractError,
    DecompositionError,
    EmptySpanError,
    RankDeficiencyError,
)

DEFAULT_RANK_TOL = 1e-10


class SvdResult(NamedTuple):
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D float64 array, raising on anything else."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} has non-finite entries")
    return a


def svd(m):
    """Thin singular value decomposition ``m = U diag(s) V^T``.

    ``right_vectors`` holds V (not V^T), so that both factors have
    orthonormal columns. Singular values are nonincreasing.
    """
    a = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u, s, vt.T)


def orthonormal_basis(m, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the column space of ``m``.

    The numerical rank counts singular values above ``rank_tol * s[0]``.
    """
    if rank_tol <= 0:
        raise ContractError("rank_tol must be positive")
    u, s, _ = svd(m)
    if s[0] == 0.0:
        raise EmptySpanError("zero matrix has an empty column span")
    rank = int(np.count_nonzero(s > rank_tol * s[0]))
    return u[:, :rank].copy()


def numerical_rank(m, rank_tol=DEFAULT_RANK_TOL):
    s = svd(m).singular_values
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def sym_eigen(m, sym_tol=1e-12):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ContractError(f"sym_eigen needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > sym_tol * scale:
        raise ContractError("sym_eigen needs a symmetric matrix")
    try:
        values, vectors = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigensolver did not converge: {exc}") from exc
    return values, vectors


def lstsq(a, b, rank_tol=DEFAULT_RANK_TOL):
    """Least-squares solution of ``a X = b`` for full column rank ``a``.

    Solved through the thin SVD of ``a``; a rank-deficient ``a`` raises
    instead of silently returning a minimum-norm solution.
    """
    a = as_matrix(a, "a")
    b_arr = np.asarray(b, dtype=float)
    vector_rhs = b_arr.ndim == 1
    b2 = as_matrix(b_arr, "b")
    if b2.shape[0] != a.shape[0]:
        raise ContractError(f"row mismatch: a has {a.shape[0]} rows, b has {b2.shape[0]}")
    u, s, v = svd(a)
    if a.shape[1] > a.shape[0] or s[-1] <= rank_tol * max(s[0], 1e-300):
        raise RankDeficiencyError("a does not have full column rank")
    x = v @ ((u.T @ b2) / s[:, None])
    return x[:, 0] if vector_rhs else x
