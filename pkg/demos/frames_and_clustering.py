"""
Frames, coherence and clustering dictionaries
=============================================

Flattened atoms form a frame whose coherence is bounded below by the Welch
bound. Distances between several learned dictionaries are then clustered.
"""

import numpy as np

from grassdict import cluster, dictlearn, frames, setmetric, synthetic

# the Mercedes-Benz frame is an equiangular tight frame
angles = np.pi / 2 + 2 * np.pi / 3 * np.arange(3)
mb = np.vstack([np.cos(angles), np.sin(angles)])
rep = frames.is_equiangular_tight(mb)
print("Mercedes-Benz ETF:", rep.is_etf, "coherence", round(rep.coherence, 6), "Welch", round(rep.welch_bound, 6))

# a random unit frame sits well above the bound
f = frames.normalize_columns(np.random.default_rng(0).standard_normal((6, 20)))
print("random frame coherence", round(frames.coherence(f), 3), "Welch", round(frames.welch_bound(20, 6), 3))
print("RIP delta_2 exact", round(frames.rip_constant_exact(f, 2), 3), "Gershgorin", round(frames.rip_gershgorin_bound(f, 2), 3))

# two "sessions": datasets planted from two different dictionaries, three learners each
dicts, sessions = [], []
for session in (0, 1):
    cfg = synthetic.SynthConfig(n_atoms=12, length=10, channels=3, n_signals=250, seed=10 + session)
    original = synthetic.gen_original_dictionary(cfg)
    signals, _ = synthetic.gen_dataset(original, cfg)
    for seed in range(3):
        dicts.append(dictlearn.m_dla(signals, 12, k=2, iters=15, seed=seed).dictionary)
        sessions.append(session)

n = len(dicts)
d = np.zeros((n, n))
for i in range(n):
    for j in range(i + 1, n):
        d[i, j] = d[j, i] = setmetric.dictionary_distance(dicts[i], dicts[j], ground="chordal")
print(np.round(d, 2))

part = cluster.affinity_propagation(cluster.to_similarity(d, sigma=1.0))
print("affinity propagation labels:", part.labels, "purity", cluster.session_purity(part.labels, sessions))
print("Hausdorff-linkage merges:", [(a, b, round(h, 2)) for a, b, h in cluster.hierarchical_hausdorff(d)])
emb = cluster.laplacian_eigenmaps(d, neighbors=3, out_dim=2)
print("eigenmap x:", np.round(emb.coords[:, 0], 2))
