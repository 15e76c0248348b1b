import numpy as np
import pytest

from grassdict import synthetic as S
from grassdict.errors import ContractError


SMALL = S.SynthConfig(n_atoms=8, length=6, channels=3, n_signals=60, iters=3, repeats=2)


def test_original_dictionary_normalized():
    d = S.gen_original_dictionary(SMALL)
    assert d.shape == (8, 6, 3)
    np.testing.assert_allclose(np.linalg.norm(d, axis=(1, 2)), 1.0)
    np.testing.assert_array_equal(d, S.gen_original_dictionary(SMALL))


def test_dataset_reconstructs_from_truth():
    d = S.gen_original_dictionary(SMALL)
    y, truth = S.gen_dataset(d, SMALL)
    assert y.shape == (60, 6, 3)
    assert all(len(set(row)) == 3 for row in truth.indices)
    mags = np.abs(truth.coeffs)
    assert mags.min() >= 0.5 and mags.max() <= 1.5
    np.testing.assert_allclose(y, np.einsum("qa,qanr->qnr", truth.coeffs, d[truth.indices]))


def test_rotated_dataset():
    cfg = S.SynthConfig(n_atoms=8, length=6, channels=3, n_signals=30, rotate=True)
    d = S.gen_original_dictionary(cfg)
    y, truth = S.gen_dataset(d, cfg)
    rots = truth.rotations
    assert rots.shape == (30, 3, 3, 3)
    np.testing.assert_allclose(np.einsum("qars,qats->qart", rots, rots), np.broadcast_to(np.eye(3), rots.shape), atol=1e-12)
    parts = np.einsum("qanr,qars->qans", d[truth.indices], rots)
    np.testing.assert_allclose(y, np.einsum("qa,qans->qns", truth.coeffs, parts))


def test_haar_orthogonal_determinant_signs():
    rng = np.random.default_rng(1)
    dets = [np.linalg.det(S.haar_orthogonal(3, rng)) for _ in range(200)]
    np.testing.assert_allclose(np.abs(dets), 1.0)
    assert 60 < sum(d > 0 for d in dets) < 140


@pytest.mark.parametrize("level", [10.0, 20.0, 30.0])
def test_noise_level_exact(level):
    y = np.random.default_rng(0).standard_normal((5, 6, 3))
    noisy = S.add_noise(y, level, seed=4)
    for a, b in zip(y, noisy):
        assert S.snr_db(a, b) == pytest.approx(level, abs=1e-9)


def test_noise_free_levels():
    y = np.ones((2, 3, 2))
    assert np.array_equal(S.add_noise(y, None, 0), y)
    assert np.array_equal(S.add_noise(y, np.inf, 0), y)
    with pytest.raises(ContractError):
        S.add_noise(y, np.nan, 0)


def test_config_contract():
    with pytest.raises(ContractError):
        S.SynthConfig(n_atoms=0)
    with pytest.raises(ContractError):
        S.SynthConfig(coeff_range=(0.0, 1.0))
    with pytest.raises(ContractError):
        S.gen_dataset(np.ones((2, 3, 1)), S.SynthConfig(atoms_per_signal=3))


def test_evaluate_identity():
    d = S.gen_original_dictionary(SMALL)
    row = S.evaluate(d, d)
    assert row[0] == 100 and row[1] == 100
    np.testing.assert_allclose(row[2:], 100.0, atol=1e-5)


def test_recovery_trace_shape():
    trace = S.run_recovery_experiment(SMALL, "mdla")
    assert len(trace) == 3
    assert len(trace.initial) == len(S.TRACE_COLUMNS)
    assert trace.column("t97").shape == (3,)
    assert trace.dictionary.shape == (8, 6, 3)
    with pytest.raises(ContractError):
        S.learn_with_trace(np.ones((3, 6, 3)), np.ones((2, 6, 3)), "ksvd", 2, 1, 1, 0)


def test_noise_sweep_rows():
    rows = S.run_noise_sweep(SMALL, "mdla", levels=(20.0, None), n_jobs=1)
    assert [r.snr_db for r in rows] == [20.0, None]
    assert all(r.dataset == "straight" and len(r.metrics) == 6 for r in rows)
    again = S.run_noise_sweep(SMALL, "mdla", levels=(20.0, None), n_jobs=1)
    assert [r.metrics for r in rows] == [r.metrics for r in again]
