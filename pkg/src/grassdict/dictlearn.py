"""Multivariate sparse coding and dictionary learning.

Signals and atoms are ``N x rho`` matrices; a dictionary is an ``(M, N, rho)``
array of unit Frobenius norm atoms and a dataset a ``(Q, N, rho)`` array.

Two signal models are covered:

* multivariate: ``Y = sum_m a_m U_m + E`` (M-OMP / M-DLA);
* rotation invariant: ``Y = sum_m a_m U_m R_m + E`` with orthogonal
  ``R_m`` (nDRI-OMP / nDRI-DLA). The per-atom fit of ``(a, R)`` is an
  orthogonal Procrustes problem, see :func:`nd_registration`.

The sparse coders work on whole batches of signals at once; the single-signal
functions are thin wrappers.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractError, ShapeMismatchError

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
ZERO_RESIDUAL = 1e-12
REREGISTER_SWEEPS = 3


class Registration(NamedTuple):
    alpha: float
    rotation: np.ndarray


@dataclass
class SparseCode:
    """Active atoms of one signal, in selection order."""

    indices: np.ndarray
    coeffs: np.ndarray
    rotations: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.indices)


@dataclass
class LearnResult:
    dictionary: np.ndarray
    errors: list = field(default_factory=list)
    replacements: list = field(default_factory=list)
    indices: Optional[np.ndarray] = None
    coeffs: Optional[np.ndarray] = None
    rotations: Optional[np.ndarray] = None


def normalize_atoms(atoms):
    atoms = np.array(atoms, dtype=float)
    norms = np.linalg.norm(atoms.reshape(len(atoms), -1), axis=1)
    if np.any(norms == 0):
        raise ContractError("cannot normalize a zero atom")
    return atoms / norms[:, None, None]


def check_dictionary(dictionary, tol=1e-10):
    d = np.asarray(dictionary, dtype=float)
    if d.ndim != 3 or d.shape[0] < 1:
        raise ContractError(f"dictionary must have shape (M, N, rho), got {d.shape}")
    norms = np.linalg.norm(d.reshape(len(d), -1), axis=1)
    if np.abs(norms - 1.0).max() > tol:
        raise ContractError("dictionary atoms must have unit Frobenius norm")
    return d


def _check_signals(y, dictionary):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 2
    if single:
        y = y[None]
    if y.ndim != 3 or y.shape[1:] != dictionary.shape[1:]:
        raise ShapeMismatchError(
            f"signals of shape {dictionary.shape[1:]} expected, got {y.shape[1:]}"
        )
    return y, single


def _check_sparsity(k, m):
    if not 1 <= k <= m:
        raise ContractError(f"sparsity must lie in [1, {m}], got {k}")


# -- registration ------------------------------------------------------------


def _procrustes(m):
    """Rotation maximizing ``trace(M R^T)`` for a batch of square ``M``."""
    a, s, bt = np.linalg.svd(m)
    return a @ bt, s.sum(axis=-1)


def nd_registration(u, z):
    """Scale and orthogonal matrix that best map atom ``u`` onto ``z``.

    Solves ``min ||z - alpha u R||_F`` over real ``alpha`` and orthogonal
    ``R``; reflections are allowed.
    """
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    if u.shape != z.shape or u.ndim != 2:
        raise ShapeMismatchError(f"atom and signal shapes differ: {u.shape} vs {z.shape}")
    energy = float(np.sum(u * u))
    if energy == 0.0:
        raise ContractError("cannot register a zero atom")
    rotation, nuclear = _procrustes(u.T @ z)
    return Registration(float(nuclear) / energy, rotation)


# -- M-OMP -------------------------------------------------------------------


def _refit(y_flat, atoms_flat):
    """Least-squares coefficients of ``y`` on stacked atoms, batched.

    ``atoms_flat`` is ``(B, s, L)`` and ``y_flat`` ``(B, L)``. Linearly
    dependent atoms fall back to the pseudo-inverse at ``RANK_TOL``.
    """
    pinv = np.linalg.pinv(np.swapaxes(atoms_flat, 1, 2), rcond=RANK_TOL)
    return np.einsum("bsl,bl->bs", pinv, y_flat)


def batch_m_omp(signals, dictionary, k):
    """M-OMP on every signal of a ``(Q, N, rho)`` batch.

    Returns ``(indices, coeffs, residuals)``; ``indices`` is ``(Q, k)`` and
    padded with -1 where a signal was fully explained before ``k`` steps.
    """
    q = len(signals)
    m = len(dictionary)
    d_flat = dictionary.reshape(m, -1)
    y_flat = signals.reshape(q, -1)
    resid = y_flat.copy()
    indices = np.full((q, k), -1, dtype=np.int64)
    coeffs = np.zeros((q, k))
    y_norm = np.linalg.norm(y_flat, axis=1)
    active = y_norm > 0
    for step in range(k):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        corr = np.abs(resid[rows] @ d_flat.T)
        if step:
            taken = indices[rows, :step]
            np.put_along_axis(corr, taken, -np.inf, axis=1)
        indices[rows, step] = np.argmax(corr, axis=1)
        sel = indices[rows, : step + 1]
        atoms = d_flat[sel]
        c = _refit(y_flat[rows], atoms)
        coeffs[rows, : step + 1] = c
        resid[rows] = y_flat[rows] - np.einsum("bs,bsl->bl", c, atoms)
        done = np.linalg.norm(resid[rows], axis=1) <= ZERO_RESIDUAL * np.maximum(y_norm[rows], 1.0)
        active[rows[done]] = False
    return indices, coeffs, resid.reshape(signals.shape)


def m_omp(y, dictionary, k):
    """Multivariate orthogonal matching pursuit of a single signal.

    Each step picks the atom with the largest ``|<E, U_m>_F|`` against the
    current residual ``E`` and re-projects the signal on all selected atoms.

    Returns
    -------
    code : SparseCode
    residual : array of shape (N, rho)
    """
    dictionary = check_dictionary(dictionary)
    y, _ = _check_signals(y, dictionary)
    _check_sparsity(k, len(dictionary))
    idx, c, r = batch_m_omp(y, dictionary, k)
    keep = idx[0] >= 0
    return SparseCode(idx[0][keep], c[0][keep]), r[0]


# -- nDRI-OMP ----------------------------------------------------------------


class _AtomFactors(NamedTuple):
    left: np.ndarray  # (M, N, rho) left singular vectors
    sigma: np.ndarray  # (M, rho)


def _atom_factors(dictionary):
    a, s, _ = np.linalg.svd(dictionary, full_matrices=False)
    return _AtomFactors(a, s)


def _registration_upper_bound(resid, factors, chunk=256):
    """Cheap upper bound of ``||U_m^T E_q||_*`` for every (signal, atom) pair.

    With ``U = A diag(s) B^T``, ``||U^T E||_* = ||diag(s) A^T E||_*`` is at
    most the sum of its row norms ``sum_i s_i ||a_i^T E||``. The bound is
    exact when ``E`` is a rotated multiple of ``U``.
    """
    q, n, r = resid.shape
    m = factors.left.shape[0]
    a_flat = factors.left.transpose(1, 0, 2).reshape(n, m * r)
    out = np.empty((q, m))
    for start in range(0, q, chunk):
        block = resid[start : start + chunk]
        b = len(block)
        proj = (block.transpose(0, 2, 1).reshape(b * r, n) @ a_flat).reshape(b, r, m, r)
        rown = np.sqrt(np.einsum("bjmi,bjmi->bmi", proj, proj))
        out[start : start + b] = np.einsum("bmi,mi->bm", rown, factors.sigma)
    return out


def _nuclear(dictionary, resid, rows, atoms):
    prod = np.einsum("pnr,pns->prs", dictionary[atoms], resid[rows])
    return np.linalg.svd(prod, compute_uv=False).sum(axis=-1)


def _select_registered(dictionary, factors, resid, rows, taken):
    """Exact argmax over atoms of ``||U_m^T E_q||_*`` (branch and bound).

    Candidates are visited in decreasing order of the upper bound and the
    search stops once no unvisited candidate can beat the incumbent.
    Equal scores resolve to the lowest atom index.
    """
    m = len(dictionary)
    ub = _registration_upper_bound(resid[rows], factors)
    if taken.shape[1]:
        np.put_along_axis(ub, taken, -np.inf, axis=1)
    order = np.argsort(-ub, axis=1, kind="stable")
    n_rows = len(rows)
    best_val = np.full(n_rows, -np.inf)
    best_idx = np.full(n_rows, m, dtype=np.int64)
    open_ = np.arange(n_rows)
    start, width = 0, 4
    while open_.size:
        stop = min(start + width, m)
        cand = order[open_, start:stop]
        cand_ub = np.take_along_axis(ub[open_], cand, axis=1)
        ok = np.isfinite(cand_ub)
        loc, col = np.nonzero(ok)
        if loc.size:
            vals = _nuclear(dictionary, resid, rows[open_[loc]], cand[loc, col])
            scores = np.full(cand.shape, -np.inf)
            scores[loc, col] = vals
            idx_grid = np.where(ok, cand, m)
            for j in range(cand.shape[1]):
                v, i = scores[:, j], idx_grid[:, j]
                cur_v, cur_i = best_val[open_], best_idx[open_]
                better = (v > cur_v) | ((v == cur_v) & (i < cur_i))
                best_val[open_[better]] = v[better]
                best_idx[open_[better]] = i[better]
        if stop >= m:
            break
        nxt_ub = ub[open_, order[open_, stop]]
        open_ = open_[(nxt_ub >= best_val[open_]) & np.isfinite(nxt_ub)]
        start, width = stop, width * 2
    return best_idx


def _reregister(dictionary, indices, coeffs, rotations, resid, sweeps):
    """Block-coordinate refinement of the active ``(coeff, rotation)`` pairs.

    Each atom in turn is given back its contribution and registered again on
    the resulting signal, which can only lower the residual. Arrays are
    updated in place.
    """
    for _ in range(sweeps):
        for j in range(indices.shape[1]):
            u = dictionary[indices[:, j]]
            z = resid + coeffs[:, j, None, None] * (u @ rotations[:, j])
            rot, alpha = _procrustes(np.einsum("bnr,bns->brs", u, z))
            coeffs[:, j] = alpha
            rotations[:, j] = rot
            resid[:] = z - alpha[:, None, None] * (u @ rot)


def batch_ndri_omp(signals, dictionary, k, factors=None, sweeps=REREGISTER_SWEEPS):
    """Rotation-invariant OMP on a batch of signals.

    Each step registers every unselected atom on the residual and keeps the
    one whose registration removes the most energy. All active coefficients
    are then re-fitted by least squares with the rotations held fixed, and
    ``sweeps`` passes of block re-registration refine the rotations, since a
    rotation fitted while other atoms still sit in the residual is biased.

    Returns ``(indices, coeffs, rotations, residuals)`` with ``rotations`` of
    shape ``(Q, k, rho, rho)``.
    """
    q, n, r = signals.shape
    if factors is None:
        factors = _atom_factors(dictionary)
    y_flat = signals.reshape(q, -1)
    resid = signals.copy()
    indices = np.full((q, k), -1, dtype=np.int64)
    coeffs = np.zeros((q, k))
    rotations = np.zeros((q, k, r, r))
    y_norm = np.linalg.norm(y_flat, axis=1)
    active = y_norm > 0
    for step in range(k):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        chosen = _select_registered(dictionary, factors, resid, rows, indices[rows, :step])
        indices[rows, step] = chosen
        rot, _ = _procrustes(np.einsum("pnr,pns->prs", dictionary[chosen], resid[rows]))
        rotations[rows, step] = rot
        placed = np.einsum(
            "psnr,psrt->psnt", dictionary[indices[rows, : step + 1]], rotations[rows, : step + 1]
        ).reshape(len(rows), step + 1, -1)
        c = _refit(y_flat[rows], placed)
        coeffs[rows, : step + 1] = c
        resid[rows] = (y_flat[rows] - np.einsum("bs,bsl->bl", c, placed)).reshape(-1, n, r)
        if step and sweeps:
            sub = (indices[rows, : step + 1], coeffs[rows, : step + 1], rotations[rows, : step + 1], resid[rows])
            _reregister(dictionary, *sub, sweeps)
            coeffs[rows, : step + 1], rotations[rows, : step + 1], resid[rows] = sub[1], sub[2], sub[3]
        done = np.linalg.norm(resid[rows].reshape(len(rows), -1), axis=1) <= ZERO_RESIDUAL * np.maximum(
            y_norm[rows], 1.0
        )
        active[rows[done]] = False
    return indices, coeffs, rotations, resid


def ndri_omp(y, dictionary, k):
    """Rotation-invariant sparse approximation of a single signal.

    Returns ``(SparseCode, residual)``; the code carries one orthogonal
    matrix per active atom, so that ``y ~ sum a_i U_i R_i``.
    """
    dictionary = check_dictionary(dictionary)
    y, _ = _check_signals(y, dictionary)
    _check_sparsity(k, len(dictionary))
    idx, c, rot, res = batch_ndri_omp(y, dictionary, k)
    keep = idx[0] >= 0
    return SparseCode(idx[0][keep], c[0][keep], rot[0][keep]), res[0]


# -- learning ----------------------------------------------------------------


def _initial_dictionary(signals, n_atoms, rng):
    norms = np.linalg.norm(signals.reshape(len(signals), -1), axis=1)
    candidates = np.flatnonzero(norms > 0)
    if candidates.size < n_atoms:
        raise ContractError(f"need at least {n_atoms} nonzero signals to initialize, got {candidates.size}")
    pick = rng.choice(candidates, size=n_atoms, replace=False)
    return normalize_atoms(signals[pick])


def _update_atoms(signals, dictionary, indices, coeffs, rotations, resid):
    """Block update of every used atom, in index order; returns unused atoms.

    For atom ``m`` the signals that use it are given back its contribution,
    ``Z_q = E_q + a_q U_m R_q``; the atom becomes the least-squares solution
    ``sum a_q Z_q R_q^T / sum a_q^2``, is renormalized, and the coefficients
    (and rotations, when present) are refit against it. Codes and residuals
    are updated in place.
    """
    unused = []
    for m in range(len(dictionary)):
        qs, ks = np.nonzero(indices == m)
        if qs.size == 0:
            unused.append(m)
            continue
        a = coeffs[qs, ks]
        weight = float(np.dot(a, a))
        if weight == 0.0:
            unused.append(m)
            continue
        if rotations is None:
            placed = np.broadcast_to(dictionary[m], (qs.size,) + dictionary.shape[1:])
            z = resid[qs] + a[:, None, None] * placed
            target = np.einsum("q,qnr->nr", a, z)
        else:
            rot = rotations[qs, ks]
            z = resid[qs] + a[:, None, None] * (dictionary[m] @ rot)
            target = np.einsum("q,qns,qrs->nr", a, z, rot)
        norm = np.linalg.norm(target)
        if norm == 0.0:
            continue
        atom = target / norm
        if rotations is None:
            placed = atom[None]
            a_new = np.einsum("qnr,qnr->q", z, np.broadcast_to(placed, z.shape))
        else:
            # register every occurrence again on the new atom
            rot, a_new = _procrustes(np.einsum("nr,qns->qrs", atom, z))
            rotations[qs, ks] = rot
            placed = atom @ rot
        resid[qs] = z - a_new[:, None, None] * placed
        coeffs[qs, ks] = a_new
        dictionary[m] = atom
    return unused


def _revive(signals, dictionary, resid, unused):
    """Replace unused atoms by the worst-approximated signals."""
    if not unused:
        return []
    err = np.linalg.norm(resid.reshape(len(resid), -1), axis=1)
    worst = [q for q in np.argsort(-err, kind="stable") if err[q] > 0][: len(unused)]
    events = []
    for m, q in zip(unused, worst):
        dictionary[m] = signals[q] / np.linalg.norm(signals[q])
        events.append((m, int(q)))
    return events


def _learn(signals, n_atoms, k, iters, seed, rotation_invariant, init=None, callback=None):
    signals = np.asarray(signals, dtype=float)
    if signals.ndim != 3 or len(signals) == 0:
        raise ContractError("dataset must be a non-empty (Q, N, rho) array")
    if not np.all(np.isfinite(signals)):
        raise ContractError("dataset has non-finite entries")
    rng = np.random.default_rng(seed)
    if init is None:
        dictionary = _initial_dictionary(signals, n_atoms, rng)
    else:
        dictionary = check_dictionary(np.array(init, dtype=float), tol=1e-8).copy()
        if dictionary.shape != (n_atoms,) + signals.shape[1:]:
            raise ShapeMismatchError("initial dictionary does not match the dataset")
    _check_sparsity(k, n_atoms)
    result = LearnResult(dictionary)
    if callback is not None:
        callback(0, dictionary, None)
    prev = None
    for it in range(1, iters + 1):
        if rotation_invariant:
            idx, c, rot, res = batch_ndri_omp(signals, dictionary, k)
        else:
            (idx, c, res), rot = batch_m_omp(signals, dictionary, k), None
        if prev is not None:
            # a fresh greedy code can be worse than last pass's; keep the better one
            old_err = np.einsum("qnr,qnr->q", prev[3], prev[3])
            new_err = np.einsum("qnr,qnr->q", res, res)
            keep = old_err < new_err
            if np.any(keep):
                idx[keep], c[keep], res[keep] = prev[0][keep], prev[1][keep], prev[3][keep]
                if rot is not None:
                    rot[keep] = prev[2][keep]
        unused = _update_atoms(signals, dictionary, idx, c, rot, res)
        events = _revive(signals, dictionary, res, unused)
        for m, q in events:
            log.info("iteration %d: atom %d unused, replaced by signal %d", it, m, q)
            # the replaced atom must not be matched to stale codes
            c[idx == m] = 0.0
        result.replacements.extend((it, m, q) for m, q in events)
        result.errors.append(float(np.einsum("qnr,qnr->", res, res)))
        prev = (idx, c, rot, res)
        if callback is not None:
            callback(it, dictionary, result)
    if prev is not None:
        result.indices, result.coeffs, result.rotations = prev[0], prev[1], prev[2]
    return result


def m_dla(signals, n_atoms, k=3, iters=80, seed=0, init=None, callback=None):
    """Learn a multivariate dictionary by alternating M-OMP and block atom updates.

    Parameters
    ----------
    signals : array of shape (Q, N, rho)
    n_atoms : int
        Number of atoms M to learn.
    k : int
        Sparsity of every code.
    iters : int
        Number of passes over the dataset.
    seed : int
        Seeds the choice of training signals used as initial atoms.
    init : array of shape (M, N, rho), optional
        Explicit initial dictionary.
    callback : callable, optional
        Called as ``callback(iteration, dictionary, result)`` after
        initialization (iteration 0) and after every pass.

    Returns
    -------
    LearnResult
        Final dictionary and the total squared error after each pass.
        The error never increases from one pass to the next.
    """
    return _learn(signals, n_atoms, k, iters, seed, False, init, callback)


def ndri_dla(signals, n_atoms, k=3, iters=80, seed=0, init=None, callback=None):
    """Rotation-invariant counterpart of :func:`m_dla` (nDRI-OMP coding)."""
    return _learn(signals, n_atoms, k, iters, seed, True, init, callback)


# -- evaluation --------------------------------------------------------------


def correlation_matrix(original, learned, rotation_invariant=False):
    """Matching scores between every original and every learned atom.

    Plain scores are ``|<U, V>_F|``; rotation-invariant ones are the
    registration scale of ``V`` onto ``U``, ``||V^T U||_* / ||V||_F^2``.
    """
    original = np.asarray(original, dtype=float)
    learned = np.asarray(learned, dtype=float)
    if original.shape[1:] != learned.shape[1:]:
        raise ShapeMismatchError("original and learned atoms have different shapes")
    if not rotation_invariant:
        return np.abs(original.reshape(len(original), -1) @ learned.reshape(len(learned), -1).T)
    cross = np.einsum("jnr,mns->mjrs", learned, original, optimize=True)
    nuclear = np.linalg.svd(cross, compute_uv=False).sum(axis=-1)
    energy = np.einsum("jnr,jnr->j", learned, learned)
    return nuclear / energy[None, :]


def detection_rate(original, learned, threshold, rotation_invariant=False):
    """Percentage of original atoms recovered by some learned atom.

    An original atom counts as recovered when its best matching score
    against the learned dictionary reaches ``threshold``. Scores ignore the
    sign of the atoms, and also their rotation when ``rotation_invariant``.
    """
    if not 0.0 < threshold <= 1.0:
        raise ContractError("threshold must lie in (0, 1]")
    scores = correlation_matrix(original, learned, rotation_invariant)
    return float(100.0 * np.mean(scores.max(axis=1) >= threshold))
