"""Principal angles and ground distances between linear subspaces.

A :class:`Subspace` stores an orthonormal basis of a point of the
Grassmannian Gr(k, n). Every distance below is a function of the principal
angles between two subspaces. Large angles come from the singular values of
the cross-Gram matrix of the bases and small ones from the singular values
of the residual of one basis after projection on the other, which keeps
full accuracy for nearly coincident subspaces.

The pairwise helpers at the bottom (:func:`stacked_angles` and friends)
evaluate the same quantities for whole collections at once; they are what
:mod:`grassdict.setmetric` uses on dictionaries.
"""

from dataclasses import dataclass

import numpy as np

from . import linops
from .errors import ContractError, ShapeMismatchError

ORTHO_TOL = 1e-10
UNIT_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Subspace:
    """Point of Gr(dim, ambient_dim), held as an orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = linops.as_matrix(self.basis, "basis")
        if b.shape[1] > b.shape[0]:
            raise ContractError(f"basis has more columns than rows: {b.shape}")
        err = np.abs(b.T @ b - np.eye(b.shape[1])).max()
        if err > ORTHO_TOL:
            raise ContractError(f"basis columns are not orthonormal (error {err:.2e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_span(cls, m, rank_tol=linops.DEFAULT_RANK_TOL):
        return cls(linops.orthonormal_basis(m, rank_tol))

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ self.basis.T


def subspace_of(atom, rank_tol=linops.DEFAULT_RANK_TOL):
    """Subspace spanned by the columns of a multivariate atom."""
    return Subspace.from_span(atom, rank_tol)


def _check_pair(u, w):
    if u.ambient_dim != w.ambient_dim:
        raise ShapeMismatchError(
            f"subspaces live in different spaces (R^{u.ambient_dim} vs R^{w.ambient_dim})"
        )


def _angles_from(cos, sin):
    """Combine both views of the angles, each where it is accurate.

    ``cos`` is descending and ``sin`` ascending along the last axis. Near 0
    the arccos of a cosine loses half the digits, and near pi/2 so does the
    arcsin of a sine; the switch sits at pi/4.
    """
    cos = np.clip(cos, 0.0, 1.0)
    sin = np.clip(sin, 0.0, 1.0)
    small = sin < np.sqrt(0.5)
    return np.where(small, np.arcsin(sin), np.arccos(cos))


def _sorted_pair(u, w):
    # the residual of the lower-dimensional basis carries the sines
    _check_pair(u, w)
    return (u, w) if u.dim >= w.dim else (w, u)


def principal_angles(u, w):
    """Principal angles between ``u`` and ``w``, nondecreasing, in [0, pi/2].

    There are ``min(u.dim, w.dim)`` of them. Cosines come from the singular
    values of ``A^T B`` and sines from those of ``B - A A^T B``.
    """
    big, small = _sorted_pair(u, w)
    g = big.basis.T @ small.basis
    cos = np.linalg.svd(g, compute_uv=False)
    sin = np.linalg.svd(small.basis - big.basis @ g, compute_uv=False)[::-1]
    return _angles_from(cos, sin)


def _one_minus_cos2_product(theta):
    """``1 - prod cos^2`` without cancellation for small angles."""
    # a right angle gives log1p(-1) = -inf and the exact answer 1
    with np.errstate(divide="ignore"):
        return -np.expm1(np.sum(np.log1p(-np.sin(theta) ** 2), axis=-1))


def distance_from_angles(kind, theta):
    """Evaluate a principal-angle distance from angles on the last axis."""
    theta = np.asarray(theta, dtype=float)
    if kind == "geodesic":
        return np.linalg.norm(theta, axis=-1)
    if kind == "chordal":
        return np.linalg.norm(np.sin(theta), axis=-1)
    if kind == "chordal2":
        return np.sin(theta[..., -1])
    if kind == "projection":
        return 2.0 * np.linalg.norm(np.sin(theta / 2.0), axis=-1)
    if kind == "projection2":
        return 2.0 * np.sin(theta[..., -1] / 2.0)
    if kind == "fubini_study":
        rest = np.maximum(_one_minus_cos2_product(theta), 0.0)
        return np.arctan2(np.sqrt(rest), np.prod(np.cos(theta), axis=-1))
    if kind == "spectral":
        return np.sin(theta[..., 0])
    if kind == "binet_cauchy":
        return np.sqrt(np.maximum(_one_minus_cos2_product(theta), 0.0))
    raise ContractError(f"unknown principal-angle distance {kind!r}")


def _distance(kind, u, w):
    return float(distance_from_angles(kind, principal_angles(u, w)))


def geodesic(u, w):
    """Arc-length distance ``||theta||_2``."""
    return _distance("geodesic", u, w)


def chordal(u, w):
    """Chordal distance ``||sin theta||_2``."""
    return _distance("chordal", u, w)


def chordal_from_gram(u, w):
    """Chordal distance via ``sqrt(k - ||A^T B||_F^2)``; equal dimensions only."""
    _check_pair(u, w)
    if u.dim != w.dim:
        raise ShapeMismatchError("Gram form of the chordal distance needs equal dimensions")
    g = u.basis.T @ w.basis
    return float(np.sqrt(max(u.dim - np.sum(g * g), 0.0)))


def chordal_from_projectors(u, w):
    """Chordal distance via ``||AA^T - BB^T||_F / sqrt(2)``; equal dimensions only."""
    _check_pair(u, w)
    if u.dim != w.dim:
        raise ShapeMismatchError("projector form of the chordal distance needs equal dimensions")
    return float(np.linalg.norm(u.projector() - w.projector()) / np.sqrt(2.0))


def chordal_2norm(u, w):
    """``||sin theta||_inf``: a pseudo-metric (zero for distinct subspaces sharing no angle > 0)."""
    return _distance("chordal2", u, w)


def projection(u, w):
    """``2 * ||sin(theta / 2)||_2``, the closest-representation distance."""
    return _distance("projection", u, w)


def projection_2norm(u, w):
    """``2 * sin(theta_max / 2)``, operator-norm variant of :func:`projection`."""
    return _distance("projection2", u, w)


def fubini_study(u, w):
    """``arccos |det(A^T B)|``; defined for subspaces of equal dimension."""
    _check_pair(u, w)
    if u.dim != w.dim:
        raise ShapeMismatchError("Fubini-Study distance needs subspaces of equal dimension")
    return _distance("fubini_study", u, w)


def spectral(u, w):
    """``min_k sin theta_k``; not a metric, zero as soon as one direction is shared."""
    return _distance("spectral", u, w)


def binet_cauchy(u, w):
    """``sqrt(1 - prod cos^2 theta_k)``."""
    return _distance("binet_cauchy", u, w)


def atom_frobenius_distance(a, b):
    """``||a - b||_F`` for unit-norm atoms, written as ``sqrt(2 - 2<a, b>)``.

    Not sign invariant: ``b = -a`` gives 2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"atom shapes differ: {a.shape} vs {b.shape}")
    for x in (a, b):
        if abs(np.linalg.norm(x) - 1.0) > UNIT_NORM_TOL:
            raise ContractError("atoms must have unit Frobenius norm")
    inner = float(np.clip(np.sum(a * b), -1.0, 1.0))
    return float(np.sqrt(2.0 - 2.0 * inner))


# -- collections -------------------------------------------------------------


def stacked_bases(atoms, rank_tol=linops.DEFAULT_RANK_TOL):
    """Orthonormal bases of a stack of atoms with shape ``(m, n, r)``.

    Returns an ``(m, n, r)`` array when every atom has full column rank,
    otherwise ``None`` (callers fall back to per-pair :class:`Subspace`).
    """
    atoms = np.asarray(atoms, dtype=float)
    u, s, _ = np.linalg.svd(atoms, full_matrices=False)
    if np.any(s[:, -1] <= rank_tol * s[:, 0]):
        return None
    return u


def stacked_angles(bases_a, bases_b):
    """Principal angles for every pair of two basis stacks.

    ``bases_a`` is ``(p, n, k)`` and ``bases_b`` is ``(q, n, k)``; the result
    is ``(p, q, k)`` with angles ascending along the last axis.
    """
    g = np.einsum("anr,bns->abrs", bases_a, bases_b, optimize=True)
    cos = np.linalg.svd(g, compute_uv=False)
    rest = bases_b[None] - np.einsum("anr,abrs->abns", bases_a, g, optimize=True)
    sin = np.linalg.svd(rest, compute_uv=False)[..., ::-1]
    return _angles_from(cos, sin)


SUBSPACE_DISTANCES = {
    "geodesic": geodesic,
    "chordal": chordal,
    "chordal2": chordal_2norm,
    "projection": projection,
    "projection2": projection_2norm,
    "fubini_study": fubini_study,
    "spectral": spectral,
    "binet_cauchy": binet_cauchy,
}
