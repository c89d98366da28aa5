"""Walkthrough: are connected users more alike than chance predicts?

Plants a homophilic social graph whose linked users share spending
habits, then compares the observed inter-class spending distances with
a degree-preserving rewiring null model. Ratios below 1 on the diagonal
mean same-class neighbors are genuinely more similar than random
graphs with identical degrees would make them.

Run:  python3 demos/02_similarity_on_the_social_graph.py
"""

import numpy as np

from socioscope.nullmodel import RewirePlan, combined_null_matrices
from socioscope.synth import SynthSpec, synth_vector_scenario

# Planted scenario: 80% of links join users of one class, and linked
# near-class users pull each other's spending vectors together.
spec = SynthSpec(
    n_users=3000, n_edges=12_000, pareto_alpha=3.5,
    homophily_strength=0.8, tie_assimilation=1.0, tie_repulsion=1.0, seed=2,
)
sc = synth_vector_scenario(spec)
print(f"graph: {len(sc['users'])} users, {sc['graph'].number_of_edges()} edges")

# One rewiring ensemble feeds both measures: L on the 16-dimensional
# spending shares, Lambda on the weekly 7-day profiles.
plan = RewirePlan(ensemble_size=30, seed=3)
res = combined_null_matrices(
    sc["graph"], sc["partition"], plan,
    [("L", sc["share_vectors"], "k2-17", "absdiff"),
     ("Lam", sc["weekly_vectors"], "k2-17", "euclid")],
)

for name, label in (("L", "spending shares"), ("Lam", "weekly profiles")):
    ratio, sigma, counts = res[name]
    diag = np.diag(ratio)
    print(f"\n{label}: observed / null distance ratio")
    print("  diagonal (same class):", np.array2string(diag, precision=3))
    ii, jj = np.indices(ratio.shape)
    remote = ratio[np.abs(ii - jj) >= 6]
    remote = remote[np.isfinite(remote)]
    print(f"  mean over remote class pairs (|i-j| >= 6): {remote.mean():.3f}")
    margins = (1.0 - diag) / np.diag(sigma)
    print("  diagonal margins in ensemble sigmas:", np.array2string(margins, precision=1))

print("\nA diagonal below 1 with remote pairs above 1 is the homophily")
print("signature; rewiring the same graph destroys it by construction.")
