import numpy as np
import pytest

from socioscope.ingest import EgoProfile
from socioscope.socio import AmpTable, ClassPartition
from socioscope.spending import (
    SUBSET_CASH,
    SUBSET_NONCASH,
    amp_table_from_vectors,
    class_dispersion,
    class_distance_matrix,
    class_entropy,
    class_mean_vectors,
    class_share_distribution,
    shannon_entropy,
    spending_vectors,
)


def profile(uid, pcg_spend):
    return EgoProfile(user_id=uid, pcg_spend=pcg_spend, monthly_spend={0: sum(pcg_spend.values())})


def two_class_partition(users_by_class):
    assignment = {u: j for j, users in users_by_class.items() for u in users}
    n = max(users_by_class)
    sizes = [len(users_by_class.get(j, [])) for j in range(1, n + 1)]
    bounds = tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist())
    return ClassPartition(n_classes=n, assignment=assignment,
                          boundaries=bounds, class_sums=np.ones(n))


def test_spending_vectors_normalization(directory):
    cash = directory.cash_pcg
    k = directory.noncash_pcgs
    profiles = {
        "a": profile("a", {k[0]: 300, k[1]: 100, cash: 400}),
        "b": profile("b", {cash: 500}),                      # zero non-cash
    }
    vecs = spending_vectors(profiles, directory)
    assert set(vecs) == {"a"}
    sv = vecs["a"]
    assert sv.values.sum() == pytest.approx(1.0)
    assert sv.values[0] == pytest.approx(0.75)               # 300 / 400 non-cash
    assert sv.cash_fraction == pytest.approx(0.5)            # 400 / 800 total


def test_spending_vectors_scale_invariant(directory):
    k = directory.noncash_pcgs
    base = {k[0]: 300, k[1]: 100, directory.cash_pcg: 250}
    scaled = {pcg: 7 * cents for pcg, cents in base.items()}
    v1 = spending_vectors({"a": profile("a", base)}, directory)["a"]
    v2 = spending_vectors({"a": profile("a", scaled)}, directory)["a"]
    assert np.allclose(v1.values, v2.values, atol=1e-12)
    assert v1.cash_fraction == pytest.approx(v2.cash_fraction, abs=1e-12)


def test_class_share_distribution_columns_sum_to_one(directory):
    k = directory.noncash_pcgs
    profiles = {
        "a": profile("a", {k[0]: 100, k[1]: 200}),
        "b": profile("b", {k[0]: 300}),
    }
    part = two_class_partition({1: ["a"], 2: ["b"]})
    shares = class_share_distribution(profiles, part, directory)
    assert shares[k[0]].tolist() == pytest.approx([0.25, 0.75])
    assert shares[k[1]].tolist() == pytest.approx([1.0, 0.0])
    for row in shares.values():
        assert row.sum() == pytest.approx(1.0)


def test_class_mean_and_distance(directory):
    k = directory.noncash_pcgs
    profiles = {
        "a": profile("a", {k[0]: 100}),
        "b": profile("b", {k[1]: 100}),
    }
    vecs = spending_vectors(profiles, directory)
    part = two_class_partition({1: ["a"], 2: ["b"]})
    means = class_mean_vectors(vecs, part, SUBSET_NONCASH)
    assert means[0, 0] == 1.0 and means[1, 1] == 1.0
    d = class_distance_matrix(vecs, part, SUBSET_NONCASH)
    assert d.shape == (2, 2)
    assert d[0, 0] == 0.0 and d[1, 1] == 0.0                 # exact zero diagonal
    assert d[0, 1] == pytest.approx(np.sqrt(2))
    assert d[0, 1] == d[1, 0]


def test_class_mean_vectors_empty_class_raises(directory):
    k = directory.noncash_pcgs
    vecs = spending_vectors({"a": profile("a", {k[0]: 100})}, directory)
    part = two_class_partition({1: ["a"], 2: ["ghost"]})
    with pytest.raises(ValueError, match="class 2"):
        class_mean_vectors(vecs, part, SUBSET_NONCASH)


def test_dispersion_zero_for_identical_members(directory):
    k = directory.noncash_pcgs
    profiles = {u: profile(u, {k[0]: 100, k[1]: 300}) for u in ("a", "b", "c")}
    vecs = spending_vectors(profiles, directory)
    part = two_class_partition({1: ["a", "b"], 2: ["c"]})
    sigma, std = class_dispersion(vecs, part, SUBSET_NONCASH)
    assert sigma.tolist() == pytest.approx([0.0, 0.0], abs=1e-12)
    assert std.tolist() == pytest.approx([0.0, 0.0], abs=1e-12)


def test_dispersion_cash_subset(directory):
    k = directory.noncash_pcgs
    cash = directory.cash_pcg
    profiles = {
        "a": profile("a", {k[0]: 100, cash: 100}),   # cash fraction 0.5
        "b": profile("b", {k[0]: 100, cash: 300}),   # cash fraction 0.75
    }
    vecs = spending_vectors(profiles, directory)
    part = two_class_partition({1: ["a", "b"]})
    sigma, _ = class_dispersion(vecs, part, SUBSET_CASH)
    assert sigma[0] == pytest.approx(0.125)


def test_shannon_entropy_bounds():
    assert shannon_entropy(np.ones(16) / 16) == pytest.approx(np.log(16))
    one_hot = np.zeros(16)
    one_hot[3] = 1.0
    assert shannon_entropy(one_hot) == 0.0


def test_class_entropy_with_cash(directory):
    k = directory.noncash_pcgs
    cash = directory.cash_pcg
    profiles = {"a": profile("a", {k[0]: 100, cash: 100})}
    vecs = spending_vectors(profiles, directory)
    part = two_class_partition({1: ["a"]})
    ent = class_entropy(vecs, part, include_cash=False)
    assert ent[0] == 0.0                                     # single category
    ent_cash = class_entropy(vecs, part, include_cash=True)
    # 50/50 cash vs one category: entropy of a fair coin
    assert ent_cash[0] == pytest.approx(np.log(2))
    assert ent_cash[0] <= np.log(17) + 1e-12


def test_amp_table_restriction():
    amp = AmpTable(users=("a", "b", "c"), amps=np.array([1.0, 2.0, 3.0]))
    sub = amp_table_from_vectors({"a": None, "c": None}, amp)
    assert sub.users == ("a", "c")
    assert sub.amps.tolist() == [1.0, 3.0]
