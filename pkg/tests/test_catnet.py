import networkx as nx
import numpy as np
import pytest

from oracles import correlation_two_pass
from socioscope.catnet import (
    CategorySpendTable,
    average_feature_set,
    build_category_table,
    category_correlation,
    community_feature_sets,
    copurchase_counts,
    feature_correlations,
    kmeans_with_selection,
    louvain_communities,
    threshold_graph,
)
from socioscope.ingest import EgoProfile
from socioscope.socio import ClassPartition
from socioscope.synth import synth_afs_features


def partition_of(assignment):
    n = max(assignment.values())
    sizes = np.bincount(list(assignment.values()), minlength=n + 1)[1:]
    return ClassPartition(n_classes=n, assignment=assignment,
                          boundaries=tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist()),
                          class_sums=np.ones(n))


def table_from(r, users=None, cats=None):
    r = np.asarray(r, dtype=float)
    users = users or [f"u{i}" for i in range(r.shape[0])]
    cats = cats or list(range(5411, 5411 + r.shape[1]))
    return CategorySpendTable(users=users, categories=cats, r=r,
                              purchase_counts={c: 999 for c in cats})


# ---------------------------------------------------------------------------
# table assembly

def test_build_category_table_retains_and_normalizes(directory):
    popular, popular2, rare = 5411, 5812, 5999
    cash = 6011
    profiles = {}
    for i in range(5):
        spend = {popular: 100 + i, popular2: 40, cash: 500}
        if i == 0:
            spend[rare] = 50
        profiles[f"u{i}"] = EgoProfile(user_id=f"u{i}", category_spend=spend)
    table = build_category_table(profiles, directory, min_purchases=2)
    assert rare not in table.categories                    # below threshold
    assert cash not in table.categories                    # cash excluded
    assert popular in table.categories
    assert np.allclose(table.r.sum(axis=1), 1.0)


def test_build_category_table_too_few_raises(directory):
    profiles = {"u0": EgoProfile(user_id="u0", category_spend={5411: 100})}
    with pytest.raises(ValueError):
        build_category_table(profiles, directory, min_purchases=1)


# ---------------------------------------------------------------------------
# correlation matrix

def test_correlation_matches_two_pass_oracle():
    rng = np.random.default_rng(0)
    r = rng.dirichlet(np.ones(10), size=50)
    table = table_from(r)
    got = category_correlation(table)
    assert np.allclose(got, correlation_two_pass(r), atol=1e-9)
    assert np.allclose(got, got.T, atol=1e-12)


def test_correlation_independence_near_one():
    rng = np.random.default_rng(1)
    # independent positive shares, row-normalized afterwards
    raw = rng.gamma(20.0, size=(5000, 6))
    r = raw / raw.sum(axis=1, keepdims=True)
    rho = category_correlation(table_from(r))
    off = rho[~np.eye(6, dtype=bool)]
    assert np.all(np.abs(off - 1.0) < 0.1)


def test_correlation_purchasers_only_changes_normalizer():
    r = np.array([[0.5, 0.5], [0.0, 1.0]])
    rho_all = category_correlation(table_from(r))
    rho_p = category_correlation(table_from(r), purchasers_only=True)
    assert not np.allclose(rho_all, rho_p)


def test_copurchase_counts():
    r = np.array([[0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.4, 0.3, 0.3]])
    got = copurchase_counts(table_from(r))
    assert got[0, 0] == 3
    assert got[0, 1] == 2
    assert got[1, 2] == 1
    assert got[2, 2] == 1


# ---------------------------------------------------------------------------
# threshold graph and communities

def test_threshold_graph_requires_both_conditions():
    r = np.eye(3) * 0.5 + 0.25
    table = table_from(r)
    rho = np.array([[2.0, 1.8, 0.5], [1.8, 2.0, 1.7], [0.5, 1.7, 2.0]])
    support = copurchase_counts(table)
    g = threshold_graph(table, rho, rho_min=1.5, support_min=int(support.max()))
    for u, v in g.edges:
        i, j = table.categories.index(u), table.categories.index(v)
        assert rho[i, j] >= 1.5 and support[i, j] >= support.max()
    with pytest.raises(ValueError):
        threshold_graph(table, rho, rho_min=0.0)


def test_threshold_graph_drops_isolated():
    r = np.full((4, 3), 1 / 3)
    table = table_from(r)
    rho = np.ones((3, 3))
    rho[0, 1] = rho[1, 0] = 2.0
    g = threshold_graph(table, rho, rho_min=1.5, support_min=1)
    assert set(g.nodes) == {table.categories[0], table.categories[1]}


def test_louvain_separates_cliques():
    g = nx.Graph()
    for base in (0, 10):
        for i in range(base, base + 5):
            for j in range(i + 1, base + 5):
                g.add_edge(i, j, weight=3.0)
    g.add_edge(0, 10, weight=0.1)
    labels, q = louvain_communities(g, seed=0)
    assert len(set(labels.values())) == 2
    assert len({labels[i] for i in range(5)}) == 1
    assert q > 0.3


def test_louvain_empty_graph():
    assert louvain_communities(nx.Graph()) == ({}, 0.0)


# ---------------------------------------------------------------------------
# average feature sets

def test_average_feature_set_value_grouped_mean():
    # three purchasers, ages {20, 20, 40} with shares {0.1, 0.3, 0.2}:
    # value weights are mean shares per age value (20 -> 0.2, 40 -> 0.2),
    # so the average age is 30, not the share-weighted 28.3
    r = np.array([[0.1, 0.9], [0.3, 0.7], [0.2, 0.8]])
    table = table_from(r, users=["a", "b", "c"])
    profiles = {
        "a": EgoProfile(user_id="a", age=20, gender=0),
        "b": EgoProfile(user_id="b", age=20, gender=0),
        "c": EgoProfile(user_id="c", age=40, gender=1),
    }
    part = partition_of({"a": 1, "b": 1, "c": 2})
    afs = average_feature_set(table, profiles, part)
    first = table.categories[0]
    assert afs[first]["age"] == pytest.approx(30.0)


def test_average_feature_set_missing_feature_none():
    r = np.array([[1.0], [1.0]])
    table = CategorySpendTable(users=["a", "b"], categories=[5411], r=r,
                               purchase_counts={5411: 2})
    profiles = {
        "a": EgoProfile(user_id="a", age=None, gender=None),
        "b": EgoProfile(user_id="b", age=None, gender=None),
    }
    part = partition_of({"a": 1, "b": 1})
    afs = average_feature_set(table, profiles, part)
    assert afs[5411]["age"] is None and afs[5411]["gender"] is None
    assert afs[5411]["seg"] == pytest.approx(1.0)


def test_community_feature_sets_pooling():
    r = np.array([[0.5, 0.5], [0.2, 0.8]])
    table = table_from(r, users=["a", "b"])
    profiles = {
        "a": EgoProfile(user_id="a", age=20, gender=0),
        "b": EgoProfile(user_id="b", age=40, gender=1),
    }
    part = partition_of({"a": 1, "b": 2})
    communities = {table.categories[0]: 0, table.categories[1]: 0}
    out = community_feature_sets(table, profiles, part, communities)
    # both users' pooled shares are 1.0, so values average evenly
    assert out[0]["age"] == pytest.approx(30.0)


# ---------------------------------------------------------------------------
# clustering and feature correlations

def test_kmeans_criteria_agree_on_separated_clusters():
    rng = np.random.default_rng(2)
    centers = rng.uniform(-50, 50, size=(4, 3))
    X = np.vstack([c + rng.normal(scale=0.05, size=(30, 3)) for c in centers])
    labels, criteria = kmeans_with_selection(X, k_range=range(2, 9), seed=0)
    rec = criteria["recommended"]
    assert rec["davies_bouldin"] == 4
    assert rec["calinski_harabasz"] == 4
    assert rec["gap"] == 4
    assert len(set(labels)) == 4


def test_kmeans_no_feasible_k_raises():
    with pytest.raises(ValueError):
        kmeans_with_selection(np.zeros((3, 2)), k_range=range(5, 6))


def test_feature_correlations_recover_planted_target():
    afs = synth_afs_features(n_categories=271, target_age_seg_r=0.42, seed=0)
    corr = feature_correlations(afs)
    r, p = corr[("age", "seg")]
    assert r == pytest.approx(0.42, abs=0.05)
    assert p < 1e-6


def test_feature_correlations_edge_cases():
    with pytest.raises(ValueError):
        feature_correlations({1: {"age": 1.0, "gender": 0.5, "seg": 2.0}})
    afs = {
        i: {"age": 30.0, "gender": 0.5 + 0.01 * i, "seg": float(i)}
        for i in range(10)
    }
    corr = feature_correlations(afs)
    assert np.isnan(corr[("age", "seg")][0])               # zero age variance
    assert corr[("gender", "seg")][0] == pytest.approx(1.0)
