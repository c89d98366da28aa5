"""Acceptance gate: one test (one pass/fail line under pytest -v) per
release criterion, with pinned tolerances and runtime budgets.

Criteria are property-based against independent oracles (tests/oracles.py)
plus recoveries of planted structure from the calibrated generator; the
measures themselves come from proprietary-style data and have no golden
numbers to compare against.
"""

import time

import numpy as np
import pytest
from sklearn.metrics import normalized_mutual_info_score

from oracles import correlation_two_pass, gini_mad, pareto_inverse_cdf
from socioscope.catnet import (
    CategorySpendTable,
    category_correlation,
    feature_correlations,
    kmeans_with_selection,
    louvain_communities,
)
from socioscope.dynamics import group_profiles, weekly_vectors
from socioscope.ingest import (
    SocialGraph,
    assemble_profiles,
    load_default_directory,
    parse_demographics,
    parse_transactions,
)
from socioscope.nullmodel import (
    RewirePlan,
    assortativity_profile,
    combined_null_matrices,
    rewire,
    robustness_by_removal,
)
from socioscope.socio import (
    AmpTable,
    ClassPartition,
    compute_amp,
    estimate_pareto_alpha,
    lorenz_and_gini,
    partition_classes,
)
from socioscope.synth import SynthSpec, generate, synth_afs_features, synth_vector_scenario

import networkx as nx


def _amp(values):
    vals = np.sort(np.asarray(values, dtype=float))
    return AmpTable(users=tuple(f"u{i:06d}" for i in range(len(vals))), amps=vals)


def _uniform_partition(users, labels, n):
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=n + 1)[1:]
    return ClassPartition(
        n_classes=n,
        assignment={u: int(c) for u, c in zip(users, labels)},
        boundaries=tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist()),
        class_sums=np.ones(n),
    )


def _random_graph(n, m, seed, prefix="u"):
    rng = np.random.default_rng(seed)
    edges = set()
    while len(edges) < m:
        a, b = rng.integers(n, size=2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return SocialGraph.from_edges(
        ((f"{prefix}{a:06d}", f"{prefix}{b:06d}") for a, b in edges),
        extra_nodes=[f"{prefix}{i:06d}" for i in range(n)],
    )


# ---------------------------------------------------------------------------
# 1. Gini oracle equivalence: trapezoid vs mean-absolute-difference within
#    1/n over 100 random n=1000 instances; exact degenerate values. < 5 s.

def test_gini_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    n = 1000
    worst = 0.0
    for _ in range(100):
        vals = rng.lognormal(3.0, rng.uniform(0.2, 1.8), size=n)
        g = lorenz_and_gini(_amp(vals)).gini
        worst = max(worst, abs(g - gini_mad(vals)))
    assert worst <= 1.0 / n, f"max |trapezoid - MAD| = {worst:.2e} > 1/n"
    assert lorenz_and_gini(_amp(np.full(n, 7.0))).gini == 0.0
    single = np.zeros(n)
    single[-1] = 123.0
    assert lorenz_and_gini(_amp(single)).gini == pytest.approx((n - 1) / n, abs=1e-12)
    assert time.monotonic() - t0 < 5.0


# ---------------------------------------------------------------------------
# 2. Pareto recovery: Hill on 1e5 inverse-CDF samples, +-0.05 for
#    alpha in {1.315, 1.5, 2.0}.

def test_pareto_exponent_recovery():
    rng = np.random.default_rng(202)
    for alpha in (1.315, 1.5, 2.0):
        samples = pareto_inverse_cdf(rng.uniform(size=100_000), alpha)
        est = estimate_pareto_alpha(samples, tail_fraction=1.0)
        assert abs(est - alpha) <= 0.05, f"alpha={alpha}: estimated {est:.4f}"


# ---------------------------------------------------------------------------
# 3. Partition exactness on 1e5 heavy-tailed AMPs, n=9: class sums within
#    max(P_u) of total/9, sizes non-increasing, means strictly increasing. < 5 s.

def test_partition_exactness_large():
    t0 = time.monotonic()
    rng = np.random.default_rng(303)
    amps = 50.0 * (1.0 + rng.pareto(1.5, size=100_000))
    table = _amp(amps)
    part = partition_classes(table, n=9)
    target = table.amps.sum() / 9
    assert np.all(np.abs(part.class_sums - target) <= table.amps.max())
    sizes = np.diff(part.boundaries)
    assert np.all(np.diff(sizes) <= 0), f"class sizes not non-increasing: {sizes}"
    means = part.class_sums / sizes
    assert np.all(np.diff(means) > 0), "per-class mean AMP not strictly increasing"
    assert time.monotonic() - t0 < 5.0


# ---------------------------------------------------------------------------
# 4. Rewire correctness: 100 members on a 1e4-edge graph preserve the exact
#    degree map and simplicity; same seed -> identical edge set. < 10 s.

def test_rewire_correctness_ensemble():
    t0 = time.monotonic()
    g = _random_graph(3000, 10_000, seed=404)
    deg = g.degree
    for member in range(100):
        rw = rewire(g, RewirePlan(ensemble_size=1, seed=member))
        assert rw.degree == deg
        # simplicity: edges are sorted canonical pairs, so uniqueness and
        # self-loop absence reduce to one pass
        edges = rw.edges
        assert len(set(edges)) == len(edges) == 10_000
        assert all(u != v for u, v in edges)
    again = rewire(g, RewirePlan(ensemble_size=1, seed=42))
    assert again.edges == rewire(g, RewirePlan(ensemble_size=1, seed=42)).edges
    assert time.monotonic() - t0 < 10.0


# ---------------------------------------------------------------------------
# 5. Null self-consistency: vectors independent of topology (5e3 users,
#    2e4 edges, 9 classes) -> >=95% of L entries within 3 sigma of 1. < 60 s.

def test_null_model_self_consistency():
    t0 = time.monotonic()
    rng = np.random.default_rng(505)
    g = _random_graph(5000, 20_000, seed=505)
    users = list(g.nodes)
    labels = rng.integers(1, 10, size=len(users))
    part = _uniform_partition(users, labels, 9)
    vecs = {u: rng.dirichlet(np.ones(16) * 4.0) for u in users}
    res = combined_null_matrices(
        g, part, RewirePlan(ensemble_size=50, seed=55),
        [("L", vecs, "k2-17", "absdiff")],
    )
    L, sigma, counts = res["L"]
    mask = np.isfinite(L) & np.isfinite(sigma)
    assert mask.sum() >= 45  # all unique class pairs measured
    within = np.abs(L[mask] - 1.0) <= 3.0 * sigma[mask]
    frac = within.mean()
    assert frac >= 0.95, f"only {frac:.1%} of L entries within 3 sigma of 1"
    assert time.monotonic() - t0 < 60.0


# ---------------------------------------------------------------------------
# 6 & 13. Homophily detection (L diagonal < 1 by > 3 sigma, remote mean > 1)
#    and weekly-dynamics structure (Lambda diagonal < 1 by > 3 sigma) on one
#    planted scenario with tie-level similarity. < 120 s for the L part.

@pytest.fixture(scope="module")
def homophily_run():
    spec = SynthSpec(
        n_users=8000, n_edges=32_000, homophily_strength=0.8,
        pareto_alpha=3.5, tie_assimilation=1.0, tie_repulsion=1.0, seed=7,
    )
    t0 = time.monotonic()
    sc = synth_vector_scenario(spec)
    res = combined_null_matrices(
        sc["graph"], sc["partition"], RewirePlan(ensemble_size=50, seed=11),
        [("L", sc["share_vectors"], "k2-17", "absdiff"),
         ("Lam", sc["weekly_vectors"], "k2-17", "euclid")],
    )
    return res, time.monotonic() - t0


def test_homophily_detection(homophily_run):
    res, elapsed = homophily_run
    L, sigma, _ = res["L"]
    diag = np.diag(L)
    diag_sigma = np.diag(sigma)
    margins = (1.0 - diag) / diag_sigma
    assert np.all(diag < 1.0), f"diagonal L not all < 1: {diag}"
    assert np.all(margins > 3.0), f"diagonal margins (sigma units): {margins}"
    ii, jj = np.indices(L.shape)
    remote = L[np.abs(ii - jj) >= 6]
    remote = remote[np.isfinite(remote)]
    assert remote.mean() > 1.0, f"remote-pair mean L = {remote.mean():.4f}"
    assert elapsed < 120.0


def test_weekly_null_structure(homophily_run):
    res, _ = homophily_run
    Lam, sigma, _ = res["Lam"]
    diag = np.diag(Lam)
    margins = (1.0 - diag) / np.diag(sigma)
    assert np.all(diag < 1.0), f"diagonal Lambda not all < 1: {diag}"
    assert np.all(margins > 3.0), f"Lambda diagonal margins: {margins}"


# ---------------------------------------------------------------------------
# 7. Assortativity: rho ~ 1 +- 0.05 on rewired graphs for every category;
#    a planted assortative category keeps rho > 1.5 within +-10% under
#    25/50/75% random link removal at 1e5 edges.

@pytest.fixture(scope="module")
def assortative_graph():
    rng = np.random.default_rng(707)
    n, m, club_n = 20_000, 100_000, 2000
    club_edges = int(0.3 * m)
    edges = set()
    while len(edges) < club_edges:
        a, b = rng.integers(club_n, size=2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    while len(edges) < m:
        a, b = rng.integers(n, size=2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    g = SocialGraph.from_edges(
        ((f"u{a:06d}", f"u{b:06d}") for a, b in edges),
        extra_nodes=[f"u{i:06d}" for i in range(n)],
    )
    r_club = {
        f"u{i:06d}": (0.5 if i < club_n else 0.05) for i in range(n)
    }
    r_table = {"planted": r_club}
    for c in range(1, 16):
        draws = rng.uniform(0.0, 0.1, size=n)
        r_table[f"flat{c:02d}"] = {f"u{i:06d}": float(draws[i]) for i in range(n)}
    return g, r_table


def test_assortativity_null_and_planted(assortative_graph):
    g, r_table = assortative_graph
    for member in range(3):
        rw = rewire(g, RewirePlan(ensemble_size=1, seed=700 + member))
        rho = assortativity_profile(rw, r_table)
        for c, v in rho.items():
            assert abs(v - 1.0) <= 0.05, f"rewired rho({c}) = {v:.4f}"
    order, curves = robustness_by_removal(
        g, {"planted": r_table["planted"]}, fractions=(0.25, 0.5, 0.75),
        repeats=3, seed=77,
    )
    base = curves[0.0]["planted"]
    assert base > 1.5, f"planted rho = {base:.3f} <= 1.5"
    for f in (0.25, 0.5, 0.75):
        v = curves[f]["planted"]
        assert abs(v - base) / base <= 0.10, f"rho drifted to {v:.3f} at removal {f}"


# ---------------------------------------------------------------------------
# 8. Category-correlation equivalence and independence calibration.

def test_category_correlation_oracle_and_independence():
    rng = np.random.default_rng(808)
    r = rng.dirichlet(np.ones(10), size=50)
    table = CategorySpendTable(
        users=[f"u{i}" for i in range(50)],
        categories=list(range(5000, 5010)),
        r=r,
        purchase_counts={c: 50 for c in range(5000, 5010)},
    )
    rho = category_correlation(table)
    assert np.nanmax(np.abs(rho - correlation_two_pass(r))) < 1e-9

    raw = rng.gamma(6.0, size=(10_000, 6))
    r_ind = raw / raw.sum(axis=1, keepdims=True)
    table = CategorySpendTable(
        users=[f"v{i}" for i in range(10_000)],
        categories=list(range(6)),
        r=r_ind,
        purchase_counts={c: 10_000 for c in range(6)},
    )
    rho = category_correlation(table)
    off = rho[~np.eye(6, dtype=bool)]
    assert np.all(np.abs(off - 1.0) < 0.1), f"independent rho range {off.min():.3f}..{off.max():.3f}"


# ---------------------------------------------------------------------------
# 9. Community recovery: Louvain NMI >= 0.9 vs 16 planted blocks
#    (160 nodes, p_in=0.9 weight 3, p_out=0.02 weight 1.5), 10 seeds. < 5 s.

def test_louvain_block_recovery():
    t0 = time.monotonic()
    rng = np.random.default_rng(909)
    truth = {i: i // 10 for i in range(160)}
    g = nx.Graph()
    g.add_nodes_from(range(160))
    for i in range(160):
        for j in range(i + 1, 160):
            same = truth[i] == truth[j]
            p, w = (0.9, 3.0) if same else (0.02, 1.5)
            if rng.uniform() < p:
                g.add_edge(i, j, weight=w)
    for seed in range(10):
        labels, _ = louvain_communities(g, seed=seed)
        nmi = normalized_mutual_info_score(
            [truth[i] for i in range(160)], [labels[i] for i in range(160)]
        )
        assert nmi >= 0.9, f"seed {seed}: NMI {nmi:.3f}"
    assert time.monotonic() - t0 < 5.0


# ---------------------------------------------------------------------------
# 10. Cluster-count criteria: 15 well-separated 3-D clusters -> all three
#     selection rules recommend k=15.

def test_cluster_count_criteria_agree():
    rng = np.random.default_rng(1010)
    centers = rng.uniform(-50, 50, size=(15, 3))
    pts = np.vstack([c + rng.normal(0, 0.5, size=(20, 3)) for c in centers])
    _, criteria = kmeans_with_selection(pts, k_range=range(2, 26), seed=0)
    rec = criteria["recommended"]
    assert rec == {"davies_bouldin": 15, "calinski_harabasz": 15, "gap": 15}, rec


# ---------------------------------------------------------------------------
# 11. Feature-correlation calibration: planted age-status Pearson 0.42
#     recovered +-0.05 over 271 synthetic categories.

def test_feature_correlation_calibration():
    afs = synth_afs_features(n_categories=271, target_age_seg_r=0.42, seed=0)
    r, p = feature_correlations(afs)[("age", "seg")]
    assert abs(r - 0.42) <= 0.05, f"recovered r = {r:.3f}"
    assert p < 1e-6


# ---------------------------------------------------------------------------
# 12. Weekly calibration: planted Friday-share gradient 21.7% -> 16.5%
#     across classes recovered +-0.5% at ~1e4 users per class; every
#     emitted 7-vector sums to 1 +- 1e-9.

def test_weekly_friday_gradient_recovery(tmp_path):
    # a flat AMP tail (high exponent) keeps all 9 class sizes near 1e4
    spec = SynthSpec(n_users=90_000, n_edges=90_000, pareto_alpha=8.0, seed=1212)
    out = tmp_path / "weekly"
    generate(spec, out)
    directory = load_default_directory()
    tx = parse_transactions(out / "transactions.csv", directory)
    demo = parse_demographics(out / "demographics.csv")
    profiles = assemble_profiles(tx, demo, directory, min_active_months=2)
    amp = compute_amp(profiles)
    part = partition_classes(amp, n=9)
    sizes = np.diff(part.boundaries)
    assert sizes.min() >= 5000, f"class sizes too uneven for calibration: {sizes}"
    wv = weekly_vectors(profiles, directory, scope="global")
    sums = np.array([v.sum() for v in wv.values()])
    assert np.all(np.abs(sums - 1.0) <= 1e-9)
    friday = {j: v[4] for j, v in group_profiles(wv, profiles, "class", part).items()}
    planted = spec.weekday_profiles[:, 4]
    for j in range(1, 10):
        assert abs(friday[j] - planted[j - 1]) <= 0.005, (
            f"class {j}: Friday share {friday[j]:.4f} vs planted {planted[j - 1]:.4f}"
        )


# ---------------------------------------------------------------------------
# 14. Performance: full pipeline (ensemble 20) on 1e5 users / 2e5 edges /
#     1e6 transactions completes in < 10 minutes.

def test_full_pipeline_performance(tmp_path):
    from socioscope.cli import main

    t0 = time.monotonic()
    rc = main([
        "run", "--synthetic",
        "--synth-users", "100000", "--synth-edges", "200000", "--synth-tx", "10",
        "--synth-homophily", "0.8", "--ensemble", "20",
        "--seed", "14", "--out", str(tmp_path / "perf"),
    ])
    elapsed = time.monotonic() - t0
    assert rc == 0
    assert elapsed < 600.0, f"pipeline took {elapsed:.0f} s"
