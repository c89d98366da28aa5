"""Individual economic indicators, inequality statistics, and the
equal-cumulative-AMP partition into socioeconomic classes.

AMP (average monthly purchase) is a user's total spend divided by the
number of months in which they purchased at least once. Class 1 is the
poorest; class sums of AMP are equalised across the n classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AmpTable:
    """Users sorted ascending by AMP (ties broken by user id)."""

    users: tuple[str, ...]
    amps: np.ndarray            # dollars/month, aligned with users

    def __len__(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class ClassPartition:
    n_classes: int
    assignment: dict[str, int]          # user -> class index, 1..n
    boundaries: tuple[int, ...]         # n+1 cut positions in sorted order
    class_sums: np.ndarray              # per-class sum of AMP

    def members(self, j: int, table: AmpTable) -> tuple[str, ...]:
        lo, hi = self.boundaries[j - 1], self.boundaries[j]
        return table.users[lo:hi]


@dataclass(frozen=True)
class InequalitySummary:
    gini: float
    lorenz: np.ndarray          # (n+1, 2) array of (f, C(f)) points
    pareto_alpha: float | None = None


def compute_amp(profiles) -> AmpTable:
    """AMP per user: total spend over active months, in dollars/month.

    Users with no active month are excluded (their AMP is undefined).
    """
    rows = []
    for uid, p in profiles.items():
        months = p.active_months
        if months == 0:
            continue
        rows.append((p.total_cents / 100.0 / months, uid))
    rows.sort(key=lambda t: (t[0], t[1]))
    users = tuple(uid for _, uid in rows)
    amps = np.array([a for a, _ in rows], dtype=float)
    return AmpTable(users=users, amps=amps)


def lorenz_and_gini(amp: AmpTable) -> InequalitySummary:
    """Lorenz curve C(f) at every user rank and the trapezoidal Gini.

    G = 1 - 2 * (area under C(f)); equals 0 for perfect equality and
    (n-1)/n when a single user owns everything.
    """
    if len(amp) == 0:
        raise ValueError("empty AMP table")
    values = amp.amps
    total = values.sum()
    if total <= 0:
        raise ValueError("non-positive total AMP")
    n = len(values)
    cum = np.concatenate([[0.0], np.cumsum(values) / total])
    f = np.arange(n + 1) / n
    area = float(np.sum(cum[1:] + cum[:-1]) / (2 * n))
    lorenz = np.column_stack([f, cum])
    return InequalitySummary(gini=float(1.0 - 2.0 * area), lorenz=lorenz)


def estimate_pareto_alpha(values, tail_fraction: float = 0.1) -> float:
    """Hill maximum-likelihood tail exponent over the top tail fraction.

    For an exact Pareto sample with tail_fraction=1 this is the MLE of
    the exponent. Degenerate tails (all values equal) raise ValueError.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    x = np.sort(np.asarray(values, dtype=float))[::-1]
    k = int(np.ceil(tail_fraction * len(x)))
    if k < 10:
        raise ValueError(f"tail has only {k} samples (need >= 10)")
    tail = x[:k]
    x_min = tail[-1]
    if x_min <= 0:
        raise ValueError("tail contains non-positive values")
    logsum = float(np.sum(np.log(tail / x_min)))
    if logsum == 0.0:
        raise ValueError("degenerate tail: all values equal, estimator diverges")
    return k / logsum


def partition_classes(amp: AmpTable, n: int = 9) -> ClassPartition:
    """Split the AMP-sorted users into n classes of equal cumulative AMP.

    Boundary j sits at the first rank where cumulative AMP reaches
    j * total / n, so boundary users fall into the lower class. On
    heavy-tailed input this yields class sizes shrinking with status.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > len(amp):
        raise ValueError(f"n={n} exceeds number of users {len(amp)}")
    cum = np.cumsum(amp.amps)
    total = cum[-1]
    bounds = [0]
    for j in range(1, n + 1):
        target = j * total / n
        # first rank (1-based) with cumulative >= target
        pos = int(np.searchsorted(cum, target - 1e-9 * total)) + 1
        bounds.append(max(pos, bounds[-1]))
    bounds[-1] = len(amp)

    assignment: dict[str, int] = {}
    sums = np.zeros(n)
    for j in range(1, n + 1):
        lo, hi = bounds[j - 1], bounds[j]
        for uid in amp.users[lo:hi]:
            assignment[uid] = j
        sums[j - 1] = amp.amps[lo:hi].sum()
    return ClassPartition(
        n_classes=n, assignment=assignment, boundaries=tuple(bounds), class_sums=sums
    )


AGE_BRACKETS = [(lo, lo + 4) for lo in range(15, 70, 5)]


def age_bracket(age: int) -> tuple[int, int] | None:
    """5-year bracket within 15-70; None for ages outside."""
    if age is None or age < 15 or age >= 70:
        return None
    lo = 15 + 5 * ((age - 15) // 5)
    return (lo, lo + 4)


def demographics_pyramid(profiles, partition: ClassPartition):
    """Counts per (age bracket, gender, class); unknown rows skipped.

    Returns (table, n_skipped) where table maps
    ((lo, hi), gender, class) -> count.
    """
    table: dict[tuple[tuple[int, int], int, int], int] = {}
    skipped = 0
    for uid, j in partition.assignment.items():
        p = profiles.get(uid)
        if p is None or p.age is None or p.gender is None:
            skipped += 1
            continue
        br = age_bracket(p.age)
        if br is None:
            skipped += 1
            continue
        key = (br, p.gender, j)
        table[key] = table.get(key, 0) + 1
    return table, skipped
