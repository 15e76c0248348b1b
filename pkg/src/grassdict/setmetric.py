"""Hausdorff and Wasserstein distances between sets of subspaces or atoms.

A dictionary is compared with another one through the collection of
subspaces its atoms span: the ground distance measures two subspaces (or, for
the ``frobenius`` ground, two atoms directly) and the set metric lifts it to
the whole collections. Since only spans matter, the resulting dictionary
distance is blind to permutations, sign flips and any invertible right
multiplication of the atoms.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import grassmann, transport
from .errors import ContractError, ShapeMismatchError


class GroundDistance(str, enum.Enum):
    GEODESIC = "geodesic"
    CHORDAL = "chordal"
    CHORDAL2 = "chordal2"
    PROJECTION = "projection"
    PROJECTION2 = "projection2"
    FUBINI_STUDY = "fubini_study"
    SPECTRAL = "spectral"
    BINET_CAUCHY = "binet_cauchy"
    FROBENIUS = "frobenius"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ContractError(f"unknown ground distance {value!r}") from None

    @property
    def is_metric(self):
        """False for the pseudo-metrics, which break separability."""
        return self not in _PSEUDO

    @property
    def on_subspaces(self):
        return self is not GroundDistance.FROBENIUS


_ALIASES = {"fubini": "fubini_study", "binetcauchy": "binet_cauchy", "fs": "fubini_study"}
# frobenius is a metric on atoms but not on the Grassmannian; it is flagged
# with the others because d_F built on it is not span-invariant
_PSEUDO = {
    GroundDistance.CHORDAL2,
    GroundDistance.PROJECTION2,
    GroundDistance.SPECTRAL,
    GroundDistance.FROBENIUS,
}


@dataclass(frozen=True, eq=False)
class MeasureSet:
    """Finite set of points (subspaces or atoms) carrying a discrete measure."""

    points: tuple
    weights: np.ndarray

    @classmethod
    def uniform(cls, points):
        points = tuple(points)
        if not points:
            raise ContractError("a measure set needs at least one point")
        return cls(points, np.full(len(points), 1.0 / len(points)))

    def __post_init__(self):
        if len(self.points) == 0:
            raise ContractError("a measure set needs at least one point")
        w = transport.check_weights(self.weights, "weights")
        if w.size != len(self.points):
            raise ContractError("one weight per point is required")
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.points)


def as_measure_set(s):
    if isinstance(s, MeasureSet):
        return s
    if isinstance(s, np.ndarray) and s.ndim == 3:
        return MeasureSet.uniform(list(s))
    return MeasureSet.uniform(s)


def _as_subspaces(points):
    return [p if isinstance(p, grassmann.Subspace) else grassmann.subspace_of(p) for p in points]


def _stack(points):
    """Stack raw atoms into an (m, n, r) array, or None when shapes differ."""
    if any(isinstance(p, grassmann.Subspace) for p in points):
        return None
    shapes = {np.shape(p) for p in points}
    if len(shapes) != 1:
        return None
    return np.asarray(points, dtype=float)


def _frobenius_matrix(points_a, points_b):
    if any(isinstance(p, grassmann.Subspace) for p in (*points_a, *points_b)):
        raise ContractError("the frobenius ground compares atoms, not subspaces")
    a, b = _stack(points_a), _stack(points_b)
    if a is None or b is None or a.shape[1:] != b.shape[1:]:
        raise ShapeMismatchError("frobenius ground needs atoms of one common shape")
    for x in (a, b):
        norms = np.linalg.norm(x.reshape(len(x), -1), axis=1)
        if np.abs(norms - 1.0).max() > grassmann.UNIT_NORM_TOL:
            raise ContractError("frobenius ground needs unit-norm atoms")
    inner = a.reshape(len(a), -1) @ b.reshape(len(b), -1).T
    return np.sqrt(2.0 - 2.0 * np.clip(inner, -1.0, 1.0))


def _stacked_subspace_bases(points):
    if all(isinstance(p, grassmann.Subspace) for p in points):
        if len({p.basis.shape for p in points}) == 1:
            return np.stack([p.basis for p in points])
        return None
    atoms = _stack(points)
    if atoms is None:
        return None
    return grassmann.stacked_bases(atoms)


def _zero_identical(d, pa, pb):
    """Pin the distance between bitwise-identical points to exactly 0."""
    def key(x):
        if isinstance(x, grassmann.Subspace):
            return None
        x = np.asarray(x, dtype=float)
        return x.shape, x.tobytes()

    seen = {}
    for i, x in enumerate(pa):
        seen.setdefault(key(x), []).append(i)
    seen.pop(None, None)
    for j, y in enumerate(pb):
        rows = seen.get(key(y))
        if rows:
            d[rows, j] = 0.0
    return d


def pairwise_ground(set_a, set_b, ground):
    """Matrix of ground distances between the points of two sets.

    Identical points are at distance exactly 0, free of rounding.
    """
    ground = GroundDistance.parse(ground)
    pa = as_measure_set(set_a).points
    pb = as_measure_set(set_b).points
    return _zero_identical(_pairwise_ground(pa, pb, ground), pa, pb)


def _pairwise_ground(pa, pb, ground):
    if ground is GroundDistance.FROBENIUS:
        return _frobenius_matrix(pa, pb)
    ba, bb = _stacked_subspace_bases(pa), _stacked_subspace_bases(pb)
    if ba is not None and bb is not None and ba.shape[1:] == bb.shape[1:]:
        if ground is GroundDistance.CHORDAL:
            # ||B - A A^T B||_F equals ||sin theta|| without a per-pair SVD,
            # and unlike sqrt(k - ||A^T B||^2) it keeps full accuracy near 0
            gram = np.einsum("anr,bns->abrs", ba, bb, optimize=True)
            rest = bb[None] - np.einsum("anr,abrs->abns", ba, gram, optimize=True)
            return np.sqrt(np.einsum("abns,abns->ab", rest, rest))
        return grassmann.distance_from_angles(ground.value, grassmann.stacked_angles(ba, bb))
    ua, ub = _as_subspaces(pa), _as_subspaces(pb)
    if ua[0].ambient_dim != ub[0].ambient_dim or len({u.ambient_dim for u in ua + ub}) != 1:
        raise ShapeMismatchError("all subspaces must share one ambient dimension")
    fn = grassmann.SUBSPACE_DISTANCES[ground.value]
    return np.array([[fn(u, w) for w in ub] for u in ua])


def hausdorff_from_matrix(d):
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        raise ContractError("Hausdorff distance of an empty set")
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def wasserstein_from_matrix(d, a=None, b=None, p=1.0, return_plan=False):
    """Wasserstein distance for a precomputed ground-distance matrix.

    For ``p >= 1`` the p-th root of the optimal cost is returned; for
    ``0 < p < 1`` the optimal cost itself (the root would break the
    triangle inequality); ``p = inf`` gives the bottleneck distance.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.size == 0:
        raise ContractError("Wasserstein distance of an empty set")
    m, n = d.shape
    a = np.full(m, 1.0 / m) if a is None else transport.check_weights(a, "source weights")
    b = np.full(n, 1.0 / n) if b is None else transport.check_weights(b, "target weights")
    if a.size != m or b.size != n:
        raise ContractError("weights do not match the ground-distance matrix")
    if p == np.inf:
        plan, value = transport.bottleneck_plan(d, a, b)
    elif p > 0:
        cost = d**p
        plan = transport.optimal_plan(cost, a, b)
        value = float(np.sum(plan * cost))
        if p >= 1:
            value = value ** (1.0 / p)
    else:
        raise ContractError(f"p must be positive or inf, got {p!r}")
    return (value, plan) if return_plan else value


def hausdorff(set_a, set_b, ground="chordal"):
    """Largest distance from a point of either set to the other set."""
    return hausdorff_from_matrix(pairwise_ground(set_a, set_b, ground))


def wasserstein(set_a, set_b, ground="chordal", p=1.0, return_plan=False):
    """Optimal-transport distance between two weighted sets."""
    set_a, set_b = as_measure_set(set_a), as_measure_set(set_b)
    d = pairwise_ground(set_a, set_b, ground)
    return wasserstein_from_matrix(d, set_a.weights, set_b.weights, p, return_plan)


def _check_dictionary(dictionary, name):
    dictionary = np.asarray(dictionary, dtype=float)
    if dictionary.ndim != 3 or dictionary.shape[0] < 1:
        raise ContractError(f"{name} must be an array of atoms with shape (M, N, rho)")
    return dictionary


def dictionary_distance(dict_a, dict_b, ground="chordal", set_metric="wasserstein", p=1.0):
    """Distance between two dictionaries of multivariate atoms.

    Each atom is replaced by its column span (kept as is for the
    ``frobenius`` ground), both sets get uniform weights, and the chosen set
    metric is applied. Dictionaries may hold different numbers of atoms.
    """
    a = _check_dictionary(dict_a, "dict_a")
    b = _check_dictionary(dict_b, "dict_b")
    if a.shape[1:] != b.shape[1:]:
        raise ShapeMismatchError(f"atom shapes differ: {a.shape[1:]} vs {b.shape[1:]}")
    d = pairwise_ground(list(a), list(b), ground)
    if set_metric == "hausdorff":
        return hausdorff_from_matrix(d)
    if set_metric == "wasserstein":
        return wasserstein_from_matrix(d, p=p)
    raise ContractError(f"unknown set metric {set_metric!r}")


def normalized_score(d, ground, rank):
    """Rescale a chordal or frobenius set distance to a 0-100 similarity score.

    ``rank`` is the subspace dimension (number of atom columns); it sets the
    chordal maximum ``sqrt(rank)``. The frobenius ground reaches 2 for
    opposite atoms while its score hits 0 at sqrt(2); values in between are
    clipped to 0.
    """
    ground = GroundDistance.parse(ground)
    if ground is GroundDistance.CHORDAL:
        top, upper = np.sqrt(rank), np.sqrt(rank)
    elif ground is GroundDistance.FROBENIUS:
        top, upper = np.sqrt(2.0), 2.0
    else:
        raise ContractError("normalized scores are defined for chordal and frobenius grounds")
    tol = 1e-9
    if not (-tol <= d <= upper + tol):
        raise ContractError(f"distance {d!r} outside the {ground.value} range [0, {upper}]")
    return float(np.clip((top - d) / top * 100.0, 0.0, 100.0))
