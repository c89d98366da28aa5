"""Degree-preserving configuration-model ensembles and every
network-vs-null ratio measure.

The null reference is obtained by double edge swaps: random edge pairs
are rewired, rejecting proposals that would create a self-loop or a
multi-edge. Each rejection still consumes an attempt, and the default
budget is 5x the edge count, repeated over an ensemble of independent
members. Ratios near 1 mean "indistinguishable from the degree-preserving
null"; below 1 on the diagonal means connected same-class users are more
similar than chance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from socioscope.ingest import SocialGraph
from socioscope.socio import ClassPartition

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewirePlan:
    swaps_factor: int = 5       # attempts = swaps_factor * |E|
    ensemble_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.swaps_factor < 1 or self.ensemble_size < 1:
            raise ValueError("swaps_factor and ensemble_size must be >= 1")


# ---------------------------------------------------------------------------
# indexed representation (internal; public API speaks SocialGraph + dicts)

class IndexedGraph:
    """Integer-indexed view of a SocialGraph for vectorized edge passes."""

    def __init__(self, g: SocialGraph):
        self.nodes = list(g.nodes)
        self.index = {u: i for i, u in enumerate(self.nodes)}
        self.n = len(self.nodes)
        if g.edges:
            eu = np.fromiter((self.index[u] for u, _ in g.edges), dtype=np.int64)
            ev = np.fromiter((self.index[v] for _, v in g.edges), dtype=np.int64)
        else:
            eu = ev = np.empty(0, dtype=np.int64)
        self.eu, self.ev = eu, ev

    def to_graph(self, eu, ev) -> SocialGraph:
        nodes = self.nodes
        edges = sorted(
            (nodes[u], nodes[v]) if nodes[u] <= nodes[v] else (nodes[v], nodes[u])
            for u, v in zip(eu.tolist(), ev.tolist())
        )
        return SocialGraph(nodes=sorted(nodes), edges=edges)


def _swap_edges(eu, ev, n, attempts, rng) -> tuple[np.ndarray, np.ndarray]:
    """Double edge swaps on copies of the edge arrays.

    Proposals creating self-loops or multi-edges are rejected but still
    consume an attempt. The degree multiset is preserved exactly.
    """
    m = len(eu)
    if m < 2:
        return eu.copy(), ev.copy()
    us = eu.tolist()
    vs = ev.tolist()
    present = {u * n + v if u < v else v * n + u for u, v in zip(us, vs)}
    # draw all randomness up front; much faster than per-attempt calls
    idx = rng.integers(0, m, size=(attempts, 2))
    flips = rng.integers(0, 2, size=attempts).tolist()
    iis = idx[:, 0].tolist()
    jjs = idx[:, 1].tolist()
    for i, j, flip in zip(iis, jjs, flips):
        if i == j:
            continue
        a, b = us[i], vs[i]
        c, d = us[j], vs[j]
        if flip:
            c, d = d, c
        # propose (a, d) and (c, b)
        if a == d or c == b:
            continue
        k1 = a * n + d if a < d else d * n + a
        k2 = c * n + b if c < b else b * n + c
        if k1 in present or k2 in present:
            continue
        old1 = a * n + b if a < b else b * n + a
        old2 = c * n + d if c < d else d * n + c
        present.discard(old1)
        present.discard(old2)
        present.add(k1)
        present.add(k2)
        us[i], vs[i] = a, d
        us[j], vs[j] = c, b
    return np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64)


def rewire(g: SocialGraph, plan: RewirePlan) -> SocialGraph:
    """Degree-preserving randomization of g; deterministic given the seed."""
    if g.number_of_edges() < 2:
        log.warning("graph has fewer than 2 edges; returned unchanged")
        return SocialGraph(nodes=list(g.nodes), edges=list(g.edges))
    ig = IndexedGraph(g)
    rng = np.random.default_rng(plan.seed)
    attempts = plan.swaps_factor * len(ig.eu)
    eu, ev = _swap_edges(ig.eu, ig.ev, ig.n, attempts, rng)
    return ig.to_graph(eu, ev)


# ---------------------------------------------------------------------------
# edge-level class distance matrices

def _vector_matrix(ig: IndexedGraph, vectors, subset: str) -> np.ndarray:
    """(n_nodes, K) array of per-user vectors; NaN rows mark missing users."""
    first = next(iter(vectors.values()))
    if subset == "k1":
        dim = 1
    else:
        dim = len(np.atleast_1d(first.values)) if hasattr(first, "values") else len(np.atleast_1d(first))
    X = np.full((ig.n, dim), np.nan)
    for uid, sv in vectors.items():
        i = ig.index.get(uid)
        if i is None:
            continue
        if subset == "k1":
            X[i, 0] = sv.cash_fraction
        elif hasattr(sv, "values"):
            X[i] = sv.values
        else:
            X[i] = np.atleast_1d(sv)
    return X


def _class_array(ig: IndexedGraph, partition: ClassPartition) -> np.ndarray:
    cls = np.zeros(ig.n, dtype=np.int64)  # 0 = unassigned
    for uid, j in partition.assignment.items():
        i = ig.index.get(uid)
        if i is not None:
            cls[i] = j
    return cls


def _pair_accumulate(eu, ev, cls, X, n_classes, mode):
    """Accumulate per-class-pair edge distances.

    mode "absdiff": per-dimension |x_u - x_v|, returns sums (n, n, K).
    mode "euclid":  ||x_u - x_v||_2 per edge,  returns sums (n, n, 1).
    Also returns the (n, n) symmetric edge-count matrix. Edges with a
    missing endpoint (class 0 or NaN vector) are skipped.
    """
    cu, cv = cls[eu], cls[ev]
    ok = (cu > 0) & (cv > 0) & ~np.isnan(X[eu]).any(axis=1) & ~np.isnan(X[ev]).any(axis=1)
    n_skip = int((~ok).sum())
    if n_skip:
        log.debug("skipped %d edges lacking class or vector", n_skip)
    eu, ev, cu, cv = eu[ok], ev[ok], cu[ok], cv[ok]
    diff = np.abs(X[eu] - X[ev])
    if mode == "euclid":
        diff = np.sqrt(np.sum(diff * diff, axis=1, keepdims=True))
    lo = np.minimum(cu, cv) - 1
    hi = np.maximum(cu, cv) - 1
    flat = lo * n_classes + hi
    k = diff.shape[1]
    sums = np.zeros((n_classes * n_classes, k))
    counts = np.zeros(n_classes * n_classes)
    np.add.at(sums, flat, diff)
    np.add.at(counts, flat, 1.0)
    sums = sums.reshape(n_classes, n_classes, k)
    counts = counts.reshape(n_classes, n_classes)
    # pool (i, j) with (j, i)
    sums = sums + np.transpose(sums, (1, 0, 2)) - np.where(
        np.eye(n_classes, dtype=bool)[:, :, None], sums, 0.0
    )
    counts = counts + counts.T - np.diag(np.diag(counts))
    return sums, counts


def _mean_matrices(sums, counts):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts[:, :, None] > 0, sums / np.maximum(counts, 1)[:, :, None], np.nan)


def edge_similarity(
    g: SocialGraph, vectors, partition: ClassPartition, subset: str = "k2-17"
) -> tuple[np.ndarray, np.ndarray]:
    """Mean absolute per-category difference over inter-class edges.

    Returns (d, counts): d has shape (n, n, K) with NaN for class pairs
    without edges; counts is the symmetric inter-class edge count.
    """
    ig = IndexedGraph(g)
    X = _vector_matrix(ig, vectors, subset)
    cls = _class_array(ig, partition)
    sums, counts = _pair_accumulate(ig.eu, ig.ev, cls, X, partition.n_classes, "absdiff")
    return _mean_matrices(sums, counts), counts


def _null_ratio(ig, cls, n_classes, plan, layers):
    """Shared ensemble pass for the L and Lambda ratio matrices.

    layers: list of (name, X, mode). Rewired members are generated once
    and every layer's distance matrices are evaluated on each member.
    Returns {name: (ratio, sigma, counts)} where sigma is the ensemble
    standard deviation of the member-wise ratio.
    """
    obs = {}
    for name, X, mode in layers:
        sums, counts = _pair_accumulate(ig.eu, ig.ev, cls, X, n_classes, mode)
        obs[name] = (_mean_matrices(sums, counts), counts)

    attempts = plan.swaps_factor * len(ig.eu)
    null_sum = {name: 0.0 for name, _, _ in layers}
    null_cnt = {name: 0.0 for name, _, _ in layers}
    ratio_sum = {name: 0.0 for name, _, _ in layers}
    ratio_sq = {name: 0.0 for name, _, _ in layers}
    ratio_cnt = {name: 0.0 for name, _, _ in layers}
    root = np.random.default_rng(plan.seed)
    member_seeds = root.integers(0, 2**63 - 1, size=plan.ensemble_size)
    for m in range(plan.ensemble_size):
        rng = np.random.default_rng(member_seeds[m])
        eu, ev = _swap_edges(ig.eu, ig.ev, ig.n, attempts, rng)
        for name, X, mode in layers:
            sums, counts = _pair_accumulate(eu, ev, cls, X, n_classes, mode)
            d_rn = _mean_matrices(sums, counts)
            null_sum[name] = null_sum[name] + np.nan_to_num(d_rn)
            null_cnt[name] = null_cnt[name] + (counts > 0)[:, :, None]
            d_obs, _ = obs[name]
            with np.errstate(invalid="ignore", divide="ignore"):
                per_k = d_obs / d_rn               # NaN/inf where d_rn is 0
                per_k = np.where(np.isfinite(per_k), per_k, np.nan)
                member_ratio = _nanmean_last(per_k)
            # members without edges in a class pair contribute nothing to
            # that entry's ensemble statistics
            finite = np.isfinite(member_ratio)
            ratio_sum[name] = ratio_sum[name] + np.where(finite, member_ratio, 0.0)
            ratio_sq[name] = ratio_sq[name] + np.where(finite, member_ratio**2, 0.0)
            ratio_cnt[name] = ratio_cnt[name] + finite

    out = {}
    for name, X, mode in layers:
        d_obs, counts = obs[name]
        with np.errstate(invalid="ignore", divide="ignore"):
            null_mean = np.where(null_cnt[name] > 0, null_sum[name] / np.maximum(null_cnt[name], 1), np.nan)
            per_k = d_obs / null_mean          # per-category ratios
            per_k = np.where(np.isfinite(per_k), per_k, np.nan)
            ratio = _nanmean_last(per_k)
            M = np.maximum(ratio_cnt[name], 1)
            mean_r = ratio_sum[name] / M
            var = np.maximum(ratio_sq[name] / M - mean_r**2, 0.0)
            sigma = np.where(ratio_cnt[name] > 1, np.sqrt(var), np.nan)
        ratio = np.where(counts > 0, ratio, np.nan)
        out[name] = (ratio, sigma, counts)
    return out


def _nanmean_last(a: np.ndarray) -> np.ndarray:
    """nanmean over the last axis; all-NaN cells give NaN without warning."""
    mask = np.isfinite(a)
    cnt = mask.sum(axis=-1)
    s = np.where(mask, a, 0.0).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, s / np.maximum(cnt, 1), np.nan)


def L_matrix(
    g: SocialGraph,
    vectors,
    partition: ClassPartition,
    subset: str = "k2-17",
    plan: RewirePlan = RewirePlan(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ratio of observed inter-class distances to the null-ensemble mean.

    Entries < 1 mean connected users in those classes are more similar
    than the degree-preserving null predicts. Returns (L, sigma, counts);
    sigma is the ensemble standard deviation of the member-wise ratio.
    """
    ig = IndexedGraph(g)
    X = _vector_matrix(ig, vectors, subset)
    cls = _class_array(ig, partition)
    res = _null_ratio(ig, cls, partition.n_classes, plan, [("L", X, "absdiff")])
    return res["L"]


def lambda_matrix(
    g: SocialGraph,
    weekly_vectors: dict[str, np.ndarray],
    partition: ClassPartition,
    plan: RewirePlan = RewirePlan(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Null ratio of weekly-dynamics distances between connected users.

    Distances are Euclidean over each user's normalized 7-day vector.
    Degenerate 0/0 cells (identical vectors everywhere) come back NaN.
    """
    ig = IndexedGraph(g)
    X = _vector_matrix(ig, weekly_vectors, "weekly")
    cls = _class_array(ig, partition)
    res = _null_ratio(ig, cls, partition.n_classes, plan, [("Lam", X, "euclid")])
    return res["Lam"]


def combined_null_matrices(g, partition, plan, layers):
    """Evaluate several ratio layers on one shared rewiring ensemble.

    layers: list of (name, vectors, subset, mode) with mode "absdiff"
    (L-style) or "euclid" (Lambda-style). Saves regenerating the ensemble
    per measure in the full pipeline.
    """
    ig = IndexedGraph(g)
    cls = _class_array(ig, partition)
    prepared = [
        (name, _vector_matrix(ig, vectors, subset), mode)
        for name, vectors, subset, mode in layers
    ]
    return _null_ratio(ig, cls, partition.n_classes, plan, prepared)


# ---------------------------------------------------------------------------
# edge assortativity (Eq.-10-style normalized product over edges)

def edge_assortativity(g: SocialGraph, r_values: dict[str, float]) -> float:
    """Normalized product of a per-user share over connected pairs.

    Both factors are normalized by the mean of the share over all edge
    endpoint incidences (each undirected edge contributes both
    orientations), so independence gives exactly 1. NaN when fewer than
    two connected users carry a positive share.
    """
    ig = IndexedGraph(g)
    return _assortativity_arrays(ig.eu, ig.ev, _share_array(ig, r_values))


def _share_array(ig: IndexedGraph, r_values) -> np.ndarray:
    r = np.zeros(ig.n)
    for uid, val in r_values.items():
        i = ig.index.get(uid)
        if i is not None:
            r[i] = val
    return r


def _assortativity_arrays(eu, ev, r) -> float:
    if len(eu) == 0:
        return math.nan
    ru, rv = r[eu], r[ev]
    spenders = set(eu[ru > 0].tolist()) | set(ev[rv > 0].tolist())
    if len(spenders) < 2:
        log.warning("category spent by <2 connected users; assortativity undefined")
        return math.nan
    mean_end = (ru.sum() + rv.sum()) / (2 * len(eu))
    if mean_end <= 0:
        return math.nan
    return float(np.mean(ru * rv) / mean_end**2)


def assortativity_profile(g: SocialGraph, r_table: dict[str, dict[str, float]]) -> dict[str, float]:
    """rho per category over the same graph; r_table: category -> user -> share."""
    ig = IndexedGraph(g)
    return {
        c: _assortativity_arrays(ig.eu, ig.ev, _share_array(ig, rv))
        for c, rv in r_table.items()
    }


def robustness_by_removal(
    g: SocialGraph,
    r_table: dict[str, dict[str, float]],
    fractions=(0.25, 0.5, 0.75),
    repeats: int = 1,
    seed: int = 0,
    min_edges: int = 100,
):
    """Assortativity recomputed after random link removal.

    Returns (order, curves): order is the category list sorted ascending
    by full-graph rho; curves maps fraction -> {category: mean rho over
    repeats}, with fraction 0.0 always included. Fractions leaving fewer
    than min_edges edges are skipped with a warning.
    """
    for f in fractions:
        if not 0 < f < 1:
            raise ValueError("fractions must be in (0, 1)")
    ig = IndexedGraph(g)
    shares = {c: _share_array(ig, rv) for c, rv in r_table.items()}
    full = {c: _assortativity_arrays(ig.eu, ig.ev, r) for c, r in shares.items()}
    order = sorted(full, key=lambda c: (math.isnan(full[c]), full[c]))
    curves = {0.0: full}
    rng = np.random.default_rng(seed)
    m = len(ig.eu)
    for f in fractions:
        keep_m = int(round((1 - f) * m))
        if keep_m < min_edges:
            log.warning("fraction %.2f leaves %d edges (<%d); skipped", f, keep_m, min_edges)
            continue
        acc = {c: 0.0 for c in shares}
        for _ in range(repeats):
            keep = rng.permutation(m)[:keep_m]
            eu, ev = ig.eu[keep], ig.ev[keep]
            for c, r in shares.items():
                acc[c] += _assortativity_arrays(eu, ev, r)
        curves[f] = {c: acc[c] / repeats for c in acc}
    return order, curves
