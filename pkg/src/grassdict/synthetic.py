"""Synthetic dictionary-recovery experiments.

An original dictionary of random multivariate atoms generates a training set
of sparse combinations (optionally with every atom occurrence rotated, and
optionally corrupted by white Gaussian noise). A dictionary is learned from
the signals and compared to the original after every pass, with detection
rates and with rescaled Wasserstein/Hausdorff set distances.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import dictlearn, setmetric
from .errors import ContractError

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t99", "t97", "wass_chordal", "wass_frob", "haus_chordal", "haus_frob")

# independent random streams derived from one seed
_DICT, _DATA, _NOISE, _LEARN = range(4)


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


@dataclass(frozen=True)
class SynthConfig:
    n_atoms: int = 135
    length: int = 20
    channels: int = 10
    n_signals: int = 2000
    atoms_per_signal: int = 3
    rotate: bool = False
    snr_db: Optional[float] = None
    seed: int = 0
    iters: int = 80
    repeats: int = 10
    sparsity: int = 3
    coeff_range: tuple = (0.5, 1.5)
    signed: bool = True

    def __post_init__(self):
        for name in ("n_atoms", "length", "channels", "n_signals", "atoms_per_signal", "sparsity"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive")
        if self.iters < 0 or self.repeats < 1:
            raise ContractError("iters must be >= 0 and repeats >= 1")
        lo, hi = self.coeff_range
        if not 0 < lo <= hi:
            raise ContractError("coeff_range must satisfy 0 < low <= high")


@dataclass
class GroundTruth:
    indices: np.ndarray
    coeffs: np.ndarray
    rotations: Optional[np.ndarray] = None


def haar_orthogonal(n, rng):
    """Random orthogonal matrix, Haar distributed on O(n)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def gen_original_dictionary(cfg):
    """Atoms with i.i.d. uniform(-1, 1) entries, normalized to unit Frobenius norm."""
    rng = _rng(cfg.seed, _DICT)
    atoms = rng.uniform(-1.0, 1.0, size=(cfg.n_atoms, cfg.length, cfg.channels))
    return dictlearn.normalize_atoms(atoms)


def gen_dataset(dictionary, cfg):
    """Sparse combinations of original atoms.

    Every signal sums ``cfg.atoms_per_signal`` distinct atoms with
    coefficients of magnitude uniform in ``cfg.coeff_range`` and random sign;
    with ``cfg.rotate`` each occurrence is right-multiplied by its own
    random orthogonal matrix.

    Returns ``(signals, truth)``.
    """
    dictionary = np.asarray(dictionary, dtype=float)
    m, n, r = dictionary.shape
    a = cfg.atoms_per_signal
    if a > m:
        raise ContractError(f"cannot draw {a} distinct atoms from {m}")
    rng = _rng(cfg.seed, _DATA)
    q = cfg.n_signals
    indices = np.array([rng.choice(m, size=a, replace=False) for _ in range(q)])
    coeffs = rng.uniform(*cfg.coeff_range, size=(q, a))
    if cfg.signed:
        coeffs *= rng.choice([-1.0, 1.0], size=(q, a))
    if cfg.rotate:
        rotations = np.array([[haar_orthogonal(r, rng) for _ in range(a)] for _ in range(q)])
        parts = np.einsum("qanr,qars->qans", dictionary[indices], rotations)
    else:
        rotations = None
        parts = dictionary[indices]
    signals = np.einsum("qa,qanr->qnr", coeffs, parts)
    return signals, GroundTruth(indices, coeffs, rotations)


def add_noise(signals, snr_db, seed):
    """Add white Gaussian noise at a per-signal signal-to-noise ratio (dB).

    The noise of each signal is rescaled so that the ratio holds exactly.
    ``snr_db`` of ``None`` or ``inf`` returns an unchanged copy.
    """
    signals = np.array(signals, dtype=float)
    if snr_db is None or snr_db == np.inf:
        return signals
    if not np.isfinite(snr_db):
        raise ContractError("snr_db must be finite")
    rng = _rng(seed, _NOISE)
    noise = rng.standard_normal(signals.shape)
    flat_s = signals.reshape(len(signals), -1)
    flat_n = noise.reshape(len(noise), -1)
    s_norm = np.linalg.norm(flat_s, axis=1)
    n_norm = np.linalg.norm(flat_n, axis=1)
    zero = s_norm == 0
    if np.any(zero):
        log.warning("%d zero signals left without noise", int(zero.sum()))
    scale = np.where(zero, 0.0, s_norm * 10.0 ** (-snr_db / 20.0) / n_norm)
    return signals + (flat_n * scale[:, None]).reshape(signals.shape)


def snr_db(signal, noisy):
    signal = np.asarray(signal, dtype=float)
    noise = np.asarray(noisy, dtype=float) - signal
    return float(10.0 * np.log10(np.sum(signal**2) / np.sum(noise**2)))


def evaluate(original, learned, rotation_invariant=False):
    """One trace row: detection rates and the four rescaled set distances."""
    rank = original.shape[2]
    t99 = dictlearn.detection_rate(original, learned, 0.99, rotation_invariant)
    t97 = dictlearn.detection_rate(original, learned, 0.97, rotation_invariant)
    d_c = setmetric.pairwise_ground(list(original), list(learned), "chordal")
    d_f = setmetric.pairwise_ground(list(original), list(learned), "frobenius")
    score = setmetric.normalized_score
    return (
        t99,
        t97,
        score(setmetric.wasserstein_from_matrix(d_c), "chordal", rank),
        score(setmetric.wasserstein_from_matrix(d_f), "frobenius", rank),
        score(setmetric.hausdorff_from_matrix(d_c), "chordal", rank),
        score(setmetric.hausdorff_from_matrix(d_f), "frobenius", rank),
    )


@dataclass
class ExperimentTrace:
    """Per-pass recovery metrics of one learning run (all in percent)."""

    rows: list = field(default_factory=list)
    initial: Optional[tuple] = None
    errors: list = field(default_factory=list)
    dictionary: Optional[np.ndarray] = None

    def column(self, name):
        return np.array([row[TRACE_COLUMNS.index(name)] for row in self.rows])

    @property
    def final(self):
        return self.rows[-1]

    def __len__(self):
        return len(self.rows)


def learn_with_trace(signals, original, algo, n_atoms, k, iters, seed):
    """Run M-DLA or nDRI-DLA and evaluate against ``original`` after every pass."""
    if algo not in ("mdla", "ndri"):
        raise ContractError(f"unknown algorithm {algo!r}")
    rot_inv = algo == "ndri"
    trace = ExperimentTrace()

    def record(it, dictionary, _):
        row = evaluate(original, dictionary, rot_inv)
        if it == 0:
            trace.initial = row
        else:
            trace.rows.append(row)

    learner = dictlearn.ndri_dla if rot_inv else dictlearn.m_dla
    result = learner(signals, n_atoms, k=k, iters=iters, seed=seed, callback=record)
    trace.errors = result.errors
    trace.dictionary = result.dictionary
    return trace


def run_recovery_experiment(cfg, algo):
    """Generate data from ``cfg`` and trace the recovery of ``algo``."""
    original = gen_original_dictionary(cfg)
    signals, _ = gen_dataset(original, cfg)
    signals = add_noise(signals, cfg.snr_db, cfg.seed)
    seed = int(_rng(cfg.seed, _LEARN).integers(2**31))
    return learn_with_trace(signals, original, algo, cfg.n_atoms, cfg.sparsity, cfg.iters, seed)


@dataclass
class SweepRow:
    snr_db: Optional[float]
    algo: str
    dataset: str
    metrics: tuple


def _final_row(args):
    cfg, algo = args
    return run_recovery_experiment(cfg, algo).final


def default_jobs():
    try:
        return max(1, int(os.environ.get("GRASSDICT_THREADS", "1")))
    except ValueError:
        return 1


def run_noise_sweep(cfg, algo, levels=(10.0, 20.0, 30.0, None), n_jobs=None):
    """Final-pass metrics averaged over ``cfg.repeats`` seeds, per noise level.

    Repeat ``i`` uses seed ``cfg.seed + i`` for the dictionary, data, noise
    and learner, so every noise level sees the same dictionaries.
    """
    jobs = [
        (replace(cfg, snr_db=level, seed=cfg.seed + i), algo)
        for level in levels
        for i in range(cfg.repeats)
    ]
    n_jobs = default_jobs() if n_jobs is None else n_jobs
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            finals = list(pool.map(_final_row, jobs))
    else:
        finals = [_final_row(j) for j in jobs]
    dataset = "rotation" if cfg.rotate else "straight"
    out = []
    for li, level in enumerate(levels):
        block = np.array(finals[li * cfg.repeats : (li + 1) * cfg.repeats])
        out.append(SweepRow(level, algo, dataset, tuple(block.mean(axis=0))))
    return out
