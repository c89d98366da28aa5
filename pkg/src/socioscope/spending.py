"""Spending distributions over purchase category groups and the
class-level similarity / dispersion / entropy measures.

The 16-entry spending vector covers the non-cash groups K_{2-17} and is
normalized over non-cash spend only; the cash share SV_1 is computed
separately as the fraction of k_1 in the total including cash.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from socioscope.ingest import CategoryDirectory
from socioscope.socio import AmpTable, ClassPartition

log = logging.getLogger(__name__)

SUBSET_NONCASH = "k2-17"
SUBSET_CASH = "k1"


@dataclass(frozen=True)
class SpendingVector:
    user_id: str
    values: np.ndarray          # 16 fractions over K_{2-17}, sums to 1
    cash_fraction: float        # share of k_1 in total incl. cash


def spending_vectors(profiles, directory: CategoryDirectory) -> dict[str, SpendingVector]:
    """Per-user fraction vectors over the 16 non-cash PCGs.

    Users with zero non-cash spend have no well-defined vector and are
    excluded (with a diagnostic) rather than given a zero vector.
    """
    noncash = directory.noncash_pcgs
    cash = directory.cash_pcg
    out: dict[str, SpendingVector] = {}
    n_excluded = 0
    for uid, p in profiles.items():
        vec = np.array([p.pcg_spend.get(k, 0) for k in noncash], dtype=float)
        noncash_total = vec.sum()
        if noncash_total <= 0:
            n_excluded += 1
            continue
        cash_spend = p.pcg_spend.get(cash, 0)
        total = noncash_total + cash_spend
        out[uid] = SpendingVector(
            user_id=uid,
            values=vec / noncash_total,
            cash_fraction=cash_spend / total,
        )
    if n_excluded:
        log.info("excluded %d users with zero non-cash spend", n_excluded)
    return out


def class_share_distribution(
    profiles, partition: ClassPartition, directory: CategoryDirectory
) -> dict[str, np.ndarray]:
    """Fractional distribution of class spend per PCG.

    For each retained group k the n class shares sum to 1: entry j is the
    spend of class j on k over the spend of everyone on k. Groups with
    zero global spend are omitted.
    """
    n = partition.n_classes
    sums = {k: np.zeros(n) for k in directory.active_pcgs}
    for uid, j in partition.assignment.items():
        p = profiles.get(uid)
        if p is None:
            continue
        for k, cents in p.pcg_spend.items():
            if k in sums:
                sums[k][j - 1] += cents
    out = {}
    for k, row in sums.items():
        total = row.sum()
        if total > 0:
            out[k] = row / total
    return out


def class_mean_vectors(
    vectors: dict[str, SpendingVector], partition: ClassPartition, subset: str
) -> np.ndarray:
    """Average spending vector per class: (n, dim) array.

    subset "k2-17" uses the 16-vector; subset "k1" the scalar cash share
    (dim 1). Raises if a class has no user with a defined vector.
    """
    n = partition.n_classes
    dim = 1 if subset == SUBSET_CASH else 16
    acc = np.zeros((n, dim))
    counts = np.zeros(n, dtype=int)
    for uid, sv in vectors.items():
        j = partition.assignment.get(uid)
        if j is None:
            continue
        acc[j - 1] += sv.cash_fraction if subset == SUBSET_CASH else sv.values
        counts[j - 1] += 1
    empty = np.nonzero(counts == 0)[0]
    if empty.size:
        raise ValueError(f"class {empty[0] + 1} has no users with spending vectors")
    return acc / counts[:, None]


def class_distance_matrix(
    vectors: dict[str, SpendingVector], partition: ClassPartition, subset: str = SUBSET_NONCASH
) -> np.ndarray:
    """Euclidean distance between class-average spending vectors.

    Symmetric with an exactly zero diagonal.
    """
    if partition.n_classes < 2:
        raise ValueError("need at least 2 classes")
    means = class_mean_vectors(vectors, partition, subset)
    diff = means[:, None, :] - means[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(d, 0.0)
    return d


def class_dispersion(
    vectors: dict[str, SpendingVector], partition: ClassPartition, subset: str = SUBSET_NONCASH
) -> tuple[np.ndarray, np.ndarray]:
    """Mean distance of members from their class-average vector.

    Returns (sigma, std) per class, where std is the standard deviation
    of the per-member norm samples. Singleton classes yield sigma 0.
    """
    means = class_mean_vectors(vectors, partition, subset)
    samples: list[list[float]] = [[] for _ in range(partition.n_classes)]
    for uid, sv in vectors.items():
        j = partition.assignment.get(uid)
        if j is None:
            continue
        v = np.atleast_1d(sv.cash_fraction if subset == SUBSET_CASH else sv.values)
        samples[j - 1].append(float(np.linalg.norm(means[j - 1] - v)))
    sigma = np.array([np.mean(s) for s in samples])
    std = np.array([np.std(s) for s in samples])
    for j, s in enumerate(samples, start=1):
        if len(s) == 1:
            log.info("class %d is a singleton; dispersion is trivially 0", j)
    return sigma, std


def shannon_entropy(vec: np.ndarray) -> float:
    """S = sum(-v ln v) with 0 ln 0 := 0; natural log."""
    v = np.asarray(vec, dtype=float)
    nz = v[v > 0]
    return float(-np.sum(nz * np.log(nz)))


def class_entropy(
    vectors: dict[str, SpendingVector],
    partition: ClassPartition,
    include_cash: bool = False,
) -> np.ndarray:
    """Shannon entropy of each class-average spending vector.

    With include_cash the 16 non-cash fractions are rescaled by the class
    mean cash share and the cash share enters as a 17th component.
    """
    means = class_mean_vectors(vectors, partition, SUBSET_NONCASH)
    if include_cash:
        cash = class_mean_vectors(vectors, partition, SUBSET_CASH)
        means = np.hstack([cash, means * (1.0 - cash)])
    return np.array([shannon_entropy(row) for row in means])


def amp_table_from_vectors(vectors, amp: AmpTable) -> AmpTable:
    """Restrict an AmpTable to users that kept a spending vector."""
    keep = [i for i, u in enumerate(amp.users) if u in vectors]
    return AmpTable(
        users=tuple(amp.users[i] for i in keep),
        amps=amp.amps[keep],
    )
