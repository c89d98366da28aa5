"""Weekly purchase vectors and group-averaged weekday profiles.

Each user gets a 7-entry vector (Monday=0) of spend fractions per day,
normalized within a scope: all purchases, a single PCG, or a PCG subset.
Group profiles are unweighted means over members (one vote per user).
"""

from __future__ import annotations

import logging

import numpy as np

from socioscope.ingest import CategoryDirectory, EgoProfile
from socioscope.socio import ClassPartition, age_bracket

log = logging.getLogger(__name__)

SCOPE_GLOBAL = "global"


def _scope_pcgs(scope, directory: CategoryDirectory) -> tuple[str, ...]:
    if scope == SCOPE_GLOBAL:
        return directory.active_pcgs
    if scope == "k1":
        return (directory.cash_pcg,)
    if scope == "k2-17":
        return directory.noncash_pcgs
    if isinstance(scope, str):
        return (scope,)          # single PCG name
    return tuple(scope)


def weekly_vectors(
    profiles: dict[str, EgoProfile], directory: CategoryDirectory, scope=SCOPE_GLOBAL
) -> dict[str, np.ndarray]:
    """Per-user normalized 7-day spend vectors within a scope.

    scope: "global", "k1", "k2-17", a PCG name, or an iterable of PCGs.
    Users with no spend in scope are excluded from that scope.
    """
    pcgs = set(_scope_pcgs(scope, directory))
    out: dict[str, np.ndarray] = {}
    for uid, p in profiles.items():
        vec = np.zeros(7)
        for (k, day), cents in p.weekly_spend.items():
            if k in pcgs:
                vec[day] += cents
        total = vec.sum()
        if total > 0:
            out[uid] = vec / total
    return out


def group_profiles(
    vectors: dict[str, np.ndarray],
    profiles: dict[str, EgoProfile],
    grouping: str,
    partition: ClassPartition | None = None,
    spend_weighted: bool = False,
) -> dict:
    """Mean weekly vector per group; unweighted by default (one vote per
    user), optionally weighted by each user's total spend.

    grouping: "class" (needs partition), "age" (5-year brackets 15-70),
    or "gender". Empty groups are omitted with a warning; group keys are
    the class index, (lo, hi) bracket, or 0/1 gender code.
    """
    if grouping not in ("class", "age", "gender"):
        raise ValueError(f"unknown grouping {grouping!r}")
    sums: dict = {}
    counts: dict = {}
    for uid, vec in vectors.items():
        if grouping == "class":
            key = partition.assignment.get(uid) if partition else None
        elif grouping == "age":
            p = profiles.get(uid)
            key = age_bracket(p.age) if p and p.age is not None else None
        elif grouping == "gender":
            p = profiles.get(uid)
            key = p.gender if p else None
        else:
            raise ValueError(f"unknown grouping {grouping!r}")
        if key is None:
            continue
        w = 1.0
        if spend_weighted:
            p = profiles.get(uid)
            w = float(p.total_cents) if p else 0.0
            if w <= 0:
                continue
        sums[key] = sums.get(key, 0.0) + w * vec
        counts[key] = counts.get(key, 0.0) + w
    if not sums:
        log.warning("no groups produced for grouping=%s", grouping)
    return {key: sums[key] / counts[key] for key in sums}


def per_pcg_profiles(
    profiles: dict[str, EgoProfile],
    directory: CategoryDirectory,
    partition: ClassPartition,
) -> dict[tuple[str, int], np.ndarray]:
    """Class-average weekly vector per (PCG, class) pair.

    Cells with no spenders are omitted.
    """
    out: dict[tuple[str, int], np.ndarray] = {}
    for k in directory.active_pcgs:
        vectors = weekly_vectors(profiles, directory, scope=k)
        per_class = group_profiles(vectors, profiles, "class", partition)
        for j, vec in per_class.items():
            out[(k, j)] = vec
    return out
