"""Walkthrough: from raw purchase records to spending classes.

Generates a small synthetic corpus, aggregates per-user profiles,
measures spending inequality (Lorenz curve, Gini, Pareto tail) and
partitions users into nine classes of equal total spending.

Run:  python3 demos/01_inequality_and_classes.py [outdir]
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from socioscope.ingest import (
    assemble_profiles,
    load_default_directory,
    parse_demographics,
    parse_transactions,
)
from socioscope.socio import compute_amp, estimate_pareto_alpha, lorenz_and_gini, partition_classes
from socioscope.synth import SynthSpec, generate

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="demo1-"))

# 1. A corpus with a heavy-tailed spending distribution.
spec = SynthSpec(n_users=3000, n_edges=9000, pareto_alpha=1.5, seed=1)
truth = generate(spec, out / "data")
print(f"synthetic corpus written to {out / 'data'} ({spec.n_users} users)")

# 2. Ingest: parse, validate, aggregate into per-user profiles.
directory = load_default_directory()
tx = parse_transactions(out / "data" / "transactions.csv", directory)
demo = parse_demographics(out / "data" / "demographics.csv")
profiles = assemble_profiles(tx, demo, directory)
print(f"{len(tx)} transactions -> {len(profiles)} active profiles")

# 3. Average monthly purchase per user, and how unequal it is.
amp = compute_amp(profiles)
summary = lorenz_and_gini(amp)
alpha = estimate_pareto_alpha(amp.amps, tail_fraction=0.1)
print(f"Gini coefficient:     {summary.gini:.3f}")
print(f"Pareto tail exponent: {alpha:.3f} (planted {spec.pareto_alpha})")

# 4. Nine classes of equal cumulative spending: few rich users at the
#    top, many low spenders at the bottom.
part = partition_classes(amp, n=9)
sizes = np.diff(part.boundaries)
print("\nclass  size  mean AMP")
for j in range(1, 10):
    lo, hi = part.boundaries[j - 1], part.boundaries[j]
    print(f"  {j}    {sizes[j - 1]:5d}  {amp.amps[lo:hi].mean():10.2f}")

# 5. The Lorenz curve is ready for the renderer:
#    figs render --kind lorenz --in <outdir>/lorenz.csv --out lorenz.png
lorenz_path = out / "lorenz.csv"
with open(lorenz_path, "w") as f:
    f.write("f,C\n")
    for frac, c in summary.lorenz:
        f.write(f"{frac!r},{c!r}\n")
print(f"\nLorenz curve points written to {lorenz_path}")
