"""Merchant-category correlation network and demographic feature analysis.

Works at the level of single merchant categories (not PCGs): per-user
spend fraction vectors, a normalized-product correlation matrix whose
value 1 marks independence, a thresholded correlation graph with Louvain
communities, spend-weighted demographic feature sets per category, and
k-means clustering of those features with cluster-count criteria.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import stats
from sklearn.cluster import KMeans
from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score

from socioscope.ingest import CategoryDirectory, EgoProfile
from socioscope.socio import ClassPartition

log = logging.getLogger(__name__)


@dataclass
class CategorySpendTable:
    """Row-normalized per-user spend fractions over retained categories.

    Retained categories have at least min_purchases purchases and are not
    cash/transfer codes. rows: users x categories; every row sums to 1.
    """

    users: list[str]
    categories: list[int]                 # MCC codes, ascending
    r: np.ndarray                         # (n_users, n_categories)
    purchase_counts: dict[int, int]

    @property
    def purchasers(self) -> np.ndarray:
        """Boolean (n_users, n_categories) purchase indicator."""
        return self.r > 0


def build_category_table(
    profiles: dict[str, EgoProfile],
    directory: CategoryDirectory,
    min_purchases: int = 100,
) -> CategorySpendTable:
    """Assemble the user x category fraction matrix.

    Spend on dropped categories is excluded from each user's norm, so
    rows stay on the simplex over the retained set. Users with no spend
    on retained categories are dropped.
    """
    counts: dict[int, int] = {}
    for p in profiles.values():
        for mcc in p.category_spend:
            counts[mcc] = counts.get(mcc, 0) + 1
    retained = sorted(
        mcc for mcc, c in counts.items()
        if c >= min_purchases and mcc in directory.mcc_to_pcg and not directory.is_cash_mcc(mcc)
    )
    if len(retained) < 2:
        raise ValueError("fewer than 2 retained categories")
    col = {mcc: i for i, mcc in enumerate(retained)}
    users, rows = [], []
    for uid in sorted(profiles):
        p = profiles[uid]
        row = np.zeros(len(retained))
        for mcc, cents in p.category_spend.items():
            i = col.get(mcc)
            if i is not None:
                row[i] = cents
        total = row.sum()
        if total > 0:
            users.append(uid)
            rows.append(row / total)
    return CategorySpendTable(
        users=users,
        categories=retained,
        r=np.array(rows),
        purchase_counts={m: counts[m] for m in retained},
    )


def category_correlation(table: CategorySpendTable, purchasers_only: bool = False) -> np.ndarray:
    """Normalized-product correlation between category pairs.

    rho(i, j) = < (r_i(u)/<r_i>) * (r_j(u)/<r_j>) > over all users,
    including users with zero spend on either category. Independence
    gives 1; above 1 means commonly co-purchased. With purchasers_only
    each category's normalizer <r_i> averages over its purchasers only
    (alternative normalization, not the default reading).
    """
    r = table.r
    if purchasers_only:
        pos = r > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(pos.any(axis=0), r.sum(axis=0) / np.maximum(pos.sum(axis=0), 1), 0.0)
    else:
        means = r.mean(axis=0)
    zero = means == 0
    if zero.any():
        log.warning("%d categories have zero mean share; correlations undefined", zero.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        z = r / means
    rho = z.T @ z / r.shape[0]
    return rho


def copurchase_counts(table: CategorySpendTable) -> np.ndarray:
    """Number of users purchasing both categories of each pair."""
    b = table.purchasers.astype(np.float64)
    return (b.T @ b).astype(np.int64)


def threshold_graph(
    table: CategorySpendTable,
    rho: np.ndarray,
    rho_min: float = 1.5,
    support_min: int = 1000,
) -> nx.Graph:
    """Correlation graph keeping strong, well-supported positive edges.

    An edge (c_i, c_j) survives iff rho >= rho_min and at least
    support_min users purchased both categories. Isolated nodes are
    dropped; edge weights carry the rho values.
    """
    if rho_min <= 0 or support_min <= 0:
        raise ValueError("thresholds must be positive")
    support = copurchase_counts(table)
    g = nx.Graph()
    cats = table.categories
    n = len(cats)
    for i in range(n):
        for j in range(i + 1, n):
            if rho[i, j] >= rho_min and support[i, j] >= support_min:
                g.add_edge(cats[i], cats[j], weight=float(rho[i, j]))
    return g


def louvain_communities(graph: nx.Graph, seed: int = 0):
    """Louvain community detection on the weighted correlation graph.

    Returns (labels, modularity) with labels mapping category -> community
    index; deterministic given the seed. Empty graph gives ({}, 0.0).
    """
    if graph.number_of_nodes() == 0:
        return {}, 0.0
    comms = nx.community.louvain_communities(graph, weight="weight", seed=seed)
    comms = sorted(comms, key=lambda s: (-len(s), min(s)))
    labels = {c: i for i, comm in enumerate(comms) for c in comm}
    q = nx.community.modularity(graph, comms, weight="weight")
    return labels, float(q)


# ---------------------------------------------------------------------------
# average feature sets (spend-weighted demographics per category)

FEATURES = ("age", "gender", "seg")


def _user_features(profiles, partition: ClassPartition):
    feats = {}
    for uid, p in profiles.items():
        seg = partition.assignment.get(uid)
        feats[uid] = (p.age, p.gender, seg)
    return feats


def average_feature_set(
    table: CategorySpendTable, profiles, partition: ClassPartition
) -> dict[int, dict[str, float | None]]:
    """Weighted average age / gender / SEG per category.

    For each feature, users are grouped by feature value; a value's
    weight is the mean spend fraction on the category among its users,
    and the category average is the weight-weighted mean of the values.
    A feature is None when no purchaser has it known.
    """
    feats = _user_features(profiles, partition)
    out: dict[int, dict[str, float | None]] = {}
    r = table.r
    for ci, mcc in enumerate(table.categories):
        rows = np.nonzero(r[:, ci] > 0)[0]
        result: dict[str, float | None] = {}
        for fi, fname in enumerate(FEATURES):
            groups: dict[float, list[float]] = {}
            for u in rows:
                v = feats.get(table.users[u], (None, None, None))[fi]
                if v is None:
                    continue
                groups.setdefault(v, []).append(r[u, ci])
            if not groups:
                result[fname] = None
                continue
            num = den = 0.0
            for v, shares in groups.items():
                alpha = sum(shares) / len(shares)
                num += alpha * v
                den += alpha
            result[fname] = num / den if den > 0 else None
        out[mcc] = result
    return out


def community_feature_sets(
    table: CategorySpendTable, profiles, partition: ClassPartition, communities: dict[int, int]
) -> dict[int, dict[str, float | None]]:
    """Feature sets with the categories of each community pooled.

    A user's share for a community is the sum of their shares over its
    member categories; the Eq.-style per-value averaging then applies
    unchanged.
    """
    feats = _user_features(profiles, partition)
    by_comm: dict[int, list[int]] = {}
    col = {mcc: i for i, mcc in enumerate(table.categories)}
    for mcc, comm in communities.items():
        if mcc in col:
            by_comm.setdefault(comm, []).append(col[mcc])
    out = {}
    r = table.r
    for comm, cols in sorted(by_comm.items()):
        pooled = r[:, cols].sum(axis=1)
        rows = np.nonzero(pooled > 0)[0]
        result: dict[str, float | None] = {}
        for fi, fname in enumerate(FEATURES):
            groups: dict[float, list[float]] = {}
            for u in rows:
                v = feats.get(table.users[u], (None, None, None))[fi]
                if v is None:
                    continue
                groups.setdefault(v, []).append(pooled[u])
            if not groups:
                result[fname] = None
                continue
            num = den = 0.0
            for v, shares in groups.items():
                alpha = sum(shares) / len(shares)
                num += alpha * v
                den += alpha
            result[fname] = num / den if den > 0 else None
        out[comm] = result
    return out


# ---------------------------------------------------------------------------
# k-means with cluster-count selection criteria

def _gap_statistic(X, k, rng, n_refs=20, n_init=5):
    """Tibshirani gap: log(W_ref) - log(W_k), reference uniform on the box."""

    def within_dispersion(data, k):
        km = KMeans(n_clusters=k, n_init=n_init, random_state=rng.integers(2**31)).fit(data)
        return km.inertia_

    w = within_dispersion(X, k)
    lo, hi = X.min(axis=0), X.max(axis=0)
    ref_logs = []
    for _ in range(n_refs):
        ref = rng.uniform(lo, hi, size=X.shape)
        ref_logs.append(np.log(max(within_dispersion(ref, k), 1e-300)))
    gap = float(np.mean(ref_logs) - np.log(max(w, 1e-300)))
    s = float(np.std(ref_logs) * np.sqrt(1 + 1 / n_refs))
    return gap, s


def kmeans_with_selection(
    features: np.ndarray,
    k_range=range(2, 26),
    seed: int = 0,
    restarts: int = 10,
    standardize: bool = True,
):
    """k-means over a k range with Davies-Bouldin, Calinski-Harabasz and
    gap-statistic selection.

    Returns (labels, criteria) where labels are for the best k (gap rule:
    smallest k with gap(k) >= gap(k+1) - s(k+1)); criteria is a per-k dict
    with all three scores and each criterion's recommended k.
    """
    X = np.asarray(features, dtype=float)
    if standardize:
        std = X.std(axis=0)
        std[std == 0] = 1.0
        X = (X - X.mean(axis=0)) / std
    rng = np.random.default_rng(seed)
    rows: dict[int, dict[str, float]] = {}
    fits = {}
    for k in k_range:
        if k >= len(X):
            log.info("k=%d skipped (only %d points)", k, len(X))
            continue
        km = KMeans(n_clusters=k, n_init=restarts, random_state=seed).fit(X)
        labels = km.labels_
        if len(set(labels)) < 2:
            continue
        try:
            db = davies_bouldin_score(X, labels)
        except ValueError:
            db = float("nan")
        ch = calinski_harabasz_score(X, labels)
        gap, s = _gap_statistic(X, k, rng)
        rows[k] = {"davies_bouldin": db, "calinski_harabasz": ch, "gap": gap, "gap_se": s}
        fits[k] = labels

    if not rows:
        raise ValueError("no feasible k in range")
    ks = sorted(rows)
    best_db = min(ks, key=lambda k: rows[k]["davies_bouldin"])
    best_ch = max(ks, key=lambda k: rows[k]["calinski_harabasz"])
    best_gap = ks[-1]
    for a, b in zip(ks, ks[1:]):
        if rows[a]["gap"] >= rows[b]["gap"] - rows[b]["gap_se"]:
            best_gap = a
            break
    criteria = {
        "per_k": rows,
        "recommended": {"davies_bouldin": best_db, "calinski_harabasz": best_ch, "gap": best_gap},
    }
    return fits[best_gap], criteria


def feature_correlations(afs: dict[int, dict[str, float | None]]):
    """Pearson r and two-sided p for (age, seg), (gender, seg), (age, gender).

    Categories missing any feature are skipped; a zero-variance feature
    makes the pair undefined (NaN).
    """
    complete = [
        (v["age"], v["gender"], v["seg"])
        for v in afs.values()
        if all(v.get(f) is not None for f in FEATURES)
    ]
    if len(complete) < 3:
        raise ValueError("fewer than 3 categories with complete features")
    arr = np.array(complete)
    cols = {"age": 0, "gender": 1, "seg": 2}
    out = {}
    for a, b in (("age", "seg"), ("gender", "seg"), ("age", "gender")):
        x, y = arr[:, cols[a]], arr[:, cols[b]]
        if x.std() == 0 or y.std() == 0:
            log.warning("zero variance in %s/%s; correlation undefined", a, b)
            out[(a, b)] = (float("nan"), float("nan"))
            continue
        r, p = stats.pearsonr(x, y)
        out[(a, b)] = (float(r), float(p))
    return out
