"""
Distances between multivariate atoms
====================================

A multivariate atom is an N x rho matrix. Its columns span a point of the
Grassmannian, and the principal angles between two spans feed every ground
distance. Sets of atoms are then compared with Hausdorff or Wasserstein.
"""

import numpy as np

from grassdict import grassmann, setmetric

rng = np.random.default_rng(0)

# two random 3-channel atoms of length 8
a = rng.standard_normal((8, 3))
b = rng.standard_normal((8, 3))
u, w = grassmann.subspace_of(a), grassmann.subspace_of(b)
print("principal angles:", np.round(grassmann.principal_angles(u, w), 4))

# every ground distance from the same angles
for name, fn in grassmann.SUBSPACE_DISTANCES.items():
    print(f"{name:>12s}  {fn(u, w):.4f}")

# mixing the channels of an atom leaves its span, and the chordal distance, unchanged
mixed = a @ rng.standard_normal((3, 3))
print("chordal(a, a M) =", grassmann.chordal(u, grassmann.subspace_of(mixed)))
print("frobenius(a, a M) =", grassmann.atom_frobenius_distance(a / np.linalg.norm(a), mixed / np.linalg.norm(mixed)))

# sets of atoms: a dictionary against a shuffled, channel-mixed copy of itself
d = rng.standard_normal((10, 8, 3))
d /= np.linalg.norm(d.reshape(10, -1), axis=1)[:, None, None]
copy = np.einsum("mnr,mrs->mns", d[rng.permutation(10)], rng.standard_normal((10, 3, 3)))
copy /= np.linalg.norm(copy.reshape(10, -1), axis=1)[:, None, None]
for metric in ("hausdorff", "wasserstein"):
    for ground in ("chordal", "frobenius"):
        dist = setmetric.dictionary_distance(d, copy, ground=ground, set_metric=metric)
        print(f"{metric:>11s} / {ground:<9s} {dist:.3e}")

# a 0-100 score: 100 means the sets coincide
w1 = setmetric.dictionary_distance(d, copy[:5].tolist() + list(d[5:]), ground="chordal")
print("normalized score:", round(setmetric.normalized_score(w1, "chordal", 3), 2))
