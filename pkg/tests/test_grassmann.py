import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grassdict import grassmann as G
from grassdict.errors import ContractError, EmptySpanError, ShapeMismatchError

from conftest import random_basis

# arccos loses half the digits near 1, so angle-based values at coincidence
# are only good to about sqrt(eps)
ANGLE_ATOL = 1e-12


def span(*cols):
    return G.Subspace.from_span(np.column_stack(cols))


def e(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def line(phi):
    return span(np.array([np.cos(phi), np.sin(phi)]))


PHI = 0.3
L0 = line(0.0)
LPHI = line(PHI)
ORTHO = (line(0.0), line(np.pi / 2))
E12 = span(e(0, 4), e(1, 4))
E13 = span(e(0, 4), e(2, 4))
E34 = span(e(2, 4), e(3, 4))


def test_subspace_validates_basis():
    with pytest.raises(ContractError):
        G.Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        G.Subspace(np.ones((2, 3)) / np.sqrt(2))
    s = G.Subspace(np.eye(4)[:, :2])
    assert (s.ambient_dim, s.dim) == (4, 2)
    np.testing.assert_allclose(s.projector(), np.diag([1, 1, 0, 0]))


def test_principal_angles_examples(rng):
    u = G.Subspace(random_basis(rng, 6, 3))
    np.testing.assert_allclose(G.principal_angles(u, u), 0, atol=ANGLE_ATOL)
    np.testing.assert_allclose(G.principal_angles(L0, LPHI), [PHI], atol=1e-12)
    np.testing.assert_allclose(G.principal_angles(E12, E13), [0, np.pi / 2], atol=1e-12)


def test_principal_angles_mismatch():
    with pytest.raises(ShapeMismatchError):
        G.principal_angles(L0, E12)


def test_unequal_dims_use_smallest(rng):
    u = G.Subspace(random_basis(rng, 7, 2))
    w = G.Subspace(random_basis(rng, 7, 4))
    theta = G.principal_angles(u, w)
    assert theta.shape == (2,)
    assert np.all(np.diff(theta) >= 0)
    with pytest.raises(ShapeMismatchError):
        G.fubini_study(u, w)


def test_geodesic_examples():
    assert G.geodesic(E12, E12) == pytest.approx(0, abs=ANGLE_ATOL)
    assert G.geodesic(*ORTHO) == pytest.approx(np.pi / 2)
    assert G.geodesic(E12, E34) == pytest.approx(np.pi * np.sqrt(2) / 2)


def test_chordal_examples(rng):
    assert G.chordal(E12, E12) == pytest.approx(0, abs=1e-12)
    assert G.chordal(E12, E13) == pytest.approx(1)
    assert G.chordal(E12, E34) == pytest.approx(np.sqrt(2))
    b = random_basis(rng, 8, 6)
    assert G.chordal(G.Subspace(b[:, :3]), G.Subspace(b[:, 3:])) == pytest.approx(np.sqrt(3))


def test_chordal_forms_agree(rng):
    for _ in range(100):
        u, w = G.Subspace(random_basis(rng, 8, 3)), G.Subspace(random_basis(rng, 8, 3))
        d = G.chordal(u, w)
        assert abs(d - G.chordal_from_gram(u, w)) <= 1e-8
        assert abs(d - G.chordal_from_projectors(u, w)) <= 1e-8


def test_chordal_2norm_examples():
    assert G.chordal_2norm(E12, E12) == pytest.approx(0, abs=1e-12)
    assert G.chordal_2norm(span(e(0, 3), e(1, 3)), span(e(0, 3), e(2, 3))) == pytest.approx(1)
    assert G.chordal_2norm(L0, LPHI) == pytest.approx(np.sin(PHI))


@pytest.mark.parametrize("fn", [G.projection, G.projection_2norm])
def test_projection_examples(fn):
    assert fn(E12, E12) == pytest.approx(0, abs=ANGLE_ATOL)
    assert fn(*ORTHO) == pytest.approx(np.sqrt(2))
    assert fn(L0, LPHI) == pytest.approx(2 * np.sin(PHI / 2))


def test_fubini_study_examples():
    assert G.fubini_study(E12, E12) == pytest.approx(0, abs=ANGLE_ATOL)
    assert G.fubini_study(*ORTHO) == pytest.approx(np.pi / 2)
    assert G.fubini_study(L0, LPHI) == pytest.approx(PHI)


def test_fubini_study_ignores_basis_orientation(rng):
    b = random_basis(rng, 5, 2)
    flipped = b * np.array([1.0, -1.0])
    w = G.Subspace(random_basis(rng, 5, 2))
    assert G.fubini_study(G.Subspace(b), w) == pytest.approx(G.fubini_study(G.Subspace(flipped), w))


def test_spectral_examples():
    assert G.spectral(E12, E12) == pytest.approx(0, abs=1e-12)
    assert G.spectral(*ORTHO) == pytest.approx(1)
    assert G.spectral(E12, E13) == pytest.approx(0, abs=1e-12)


def test_binet_cauchy_examples():
    assert G.binet_cauchy(E12, E12) == pytest.approx(0, abs=1e-7)
    assert G.binet_cauchy(E12, E13) == pytest.approx(1)
    assert G.binet_cauchy(L0, LPHI) == pytest.approx(np.sin(PHI))


def test_atom_frobenius_distance(rng):
    a = rng.standard_normal((4, 3))
    a /= np.linalg.norm(a)
    assert G.atom_frobenius_distance(a, a) == pytest.approx(0, abs=1e-7)
    assert G.atom_frobenius_distance(a, -a) == pytest.approx(2)
    b = rng.standard_normal((4, 3))
    b -= np.sum(a * b) * a
    b /= np.linalg.norm(b)
    assert G.atom_frobenius_distance(a, b) == pytest.approx(np.sqrt(2))
    with pytest.raises(ShapeMismatchError):
        G.atom_frobenius_distance(a, np.eye(3) / np.sqrt(3))
    with pytest.raises(ContractError):
        G.atom_frobenius_distance(a, 2 * a)


def test_subspace_of(rng):
    q = random_basis(rng, 6, 3)
    np.testing.assert_allclose(G.subspace_of(q).projector(), q @ q.T, atol=1e-12)
    dup = np.column_stack([q, q[:, 0]])
    assert G.subspace_of(dup).dim == 3
    assert G.subspace_of(np.outer(rng.standard_normal(6), rng.standard_normal(3))).dim == 1
    with pytest.raises(EmptySpanError):
        G.subspace_of(np.zeros((4, 2)))


METRICS = [G.geodesic, G.chordal, G.fubini_study, G.binet_cauchy]


@pytest.mark.parametrize("fn", METRICS, ids=lambda f: f.__name__)
def test_metric_axioms_gr38(rng, fn):
    for _ in range(200):
        u, v, w = (G.Subspace(random_basis(rng, 8, 3)) for _ in range(3))
        assert abs(fn(u, v) - fn(v, u)) <= 1e-9
        assert fn(u, w) <= fn(u, v) + fn(v, w) + 1e-9
        assert fn(u, v) >= 0


def test_bounds_and_ordering(rng):
    k = 3
    for _ in range(50):
        u, w = G.Subspace(random_basis(rng, 8, k)), G.Subspace(random_basis(rng, 8, k))
        c, g = G.chordal(u, w), G.geodesic(u, w)
        assert c <= np.sqrt(k) + 1e-12
        assert g <= np.pi * np.sqrt(k) / 2 + 1e-12
        assert c <= g + 1e-12
        assert 0 <= G.binet_cauchy(u, w) <= 1
        assert 0 <= G.spectral(u, w) <= 1
        assert 0 <= G.fubini_study(u, w) <= np.pi / 2 + 1e-12


def test_right_invariance(rng):
    atom = rng.standard_normal((7, 3))
    mixed = atom @ rng.standard_normal((3, 3))
    u, w = G.subspace_of(atom), G.subspace_of(mixed)
    for name, fn in G.SUBSPACE_DISTANCES.items():
        assert fn(u, w) == pytest.approx(0, abs=ANGLE_ATOL), name


def test_stacked_matches_pairwise(rng):
    atoms_a = rng.standard_normal((4, 6, 2))
    atoms_b = rng.standard_normal((3, 6, 2))
    theta = G.stacked_angles(G.stacked_bases(atoms_a), G.stacked_bases(atoms_b))
    for kind, fn in G.SUBSPACE_DISTANCES.items():
        stacked = G.distance_from_angles(kind, theta)
        for i in range(4):
            for j in range(3):
                ref = fn(G.subspace_of(atoms_a[i]), G.subspace_of(atoms_b[j]))
                assert stacked[i, j] == pytest.approx(ref, abs=1e-10), kind
    assert G.stacked_bases(np.array([[[1.0, 2.0], [2.0, 4.0]]])) is None


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 9),
    data=st.data(),
)
def test_angles_in_range_and_sorted(seed, n, data):
    k = data.draw(st.integers(1, n))
    rng = np.random.default_rng(seed)
    u, w = G.Subspace(random_basis(rng, n, k)), G.Subspace(random_basis(rng, n, k))
    theta = G.principal_angles(u, w)
    assert np.all(theta >= 0) and np.all(theta <= np.pi / 2)
    assert np.all(np.diff(theta) >= 0)
    assert not np.any(np.isnan([fn(u, w) for fn in G.SUBSPACE_DISTANCES.values()]))
