"""Synthetic population / graph / transaction generator with planted,
parameterized ground truth.

Every quantitative claim of the pipeline is verified against data from
this generator (the original data being proprietary): planted Pareto
AMPs, class-graded spending mixtures, homophilic edge sampling, planted
co-purchase category blocks, and class-specific weekday profiles. The
same seed always produces byte-identical output files.
"""

from __future__ import annotations

import calendar
import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from socioscope.socio import AmpTable, partition_classes

log = logging.getLogger(__name__)


def default_class_means(n_classes: int, n_pcgs: int = 16) -> np.ndarray:
    """Smoothly interpolated per-class mean share vectors.

    Lower classes concentrate on the first (essential) groups, upper
    classes shift towards the later (discretionary) ones; neighbouring
    classes stay most similar, mimicking the observed class gradient.
    """
    poor = np.linspace(2.0, 0.2, n_pcgs)
    rich = np.linspace(0.2, 2.0, n_pcgs)
    out = []
    for j in range(n_classes):
        t = j / max(n_classes - 1, 1)
        v = (1 - t) * poor + t * rich
        out.append(v / v.sum())
    return np.array(out)


def default_weekday_profiles(
    n_classes: int, friday_lo: float = 0.165, friday_hi: float = 0.217
) -> np.ndarray:
    """Per-class 7-day profiles with a Friday peak shrinking with status.

    Class 1 peaks at friday_hi on Friday, the top class at friday_lo;
    the remaining mass is spread evenly over the other six days.
    """
    out = []
    for j in range(n_classes):
        t = j / max(n_classes - 1, 1)
        friday = friday_hi + t * (friday_lo - friday_hi)
        rest = (1.0 - friday) / 6.0
        v = np.full(7, rest)
        v[4] = friday
        out.append(v)
    return np.array(out)


@dataclass
class SynthSpec:
    n_users: int = 1000
    n_edges: int = 3000
    pareto_alpha: float = 1.5
    n_classes: int = 9
    homophily_strength: float = 0.0       # P(edge endpoints drawn from one class)
    class_spending_means: np.ndarray | None = None      # (n_classes, 16)
    dirichlet_concentration: float = 20.0
    cash_fraction_by_class: np.ndarray | None = None    # defaults 0.75 -> 0.40
    category_blocks: list[dict] = field(default_factory=list)
    weekday_profiles: np.ndarray | None = None          # (n_classes, 7)
    tie_assimilation: float = 0.0         # pull connected near-class users together
    tie_repulsion: float = 0.0            # push connected remote-class users apart
    gender_split: float = 0.5             # fraction of males
    age_range: tuple[int, int] = (15, 70)
    n_months: int = 8
    start_year_month: tuple[int, int] = (2024, 1)
    tx_per_user: int = 16
    amp_scale: float = 50.0               # Pareto lower bound, dollars/month
    mccs_per_pcg: int = 3
    seed: int = 0

    def resolve(self):
        if not 0 <= self.homophily_strength <= 1:
            raise ValueError("homophily_strength must be in [0, 1]")
        if not 0 <= self.gender_split <= 1:
            raise ValueError("gender_split must be in [0, 1]")
        if self.n_edges > self.n_users * (self.n_users - 1) // 2:
            raise ValueError("n_edges exceeds the simple-graph bound")
        if self.class_spending_means is None:
            self.class_spending_means = default_class_means(self.n_classes)
        means = np.asarray(self.class_spending_means, dtype=float)
        if not np.allclose(means.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("class mean vectors must lie on the simplex")
        if self.weekday_profiles is None:
            self.weekday_profiles = default_weekday_profiles(self.n_classes)
        if self.cash_fraction_by_class is None:
            self.cash_fraction_by_class = np.linspace(0.75, 0.40, self.n_classes)
        return self


def influence_blend(
    base: np.ndarray,
    edges: list[tuple[int, int]],
    cls: np.ndarray,
    n_classes: int,
    assimilation: float,
    repulsion: float,
    rng=None,
    rounds: int = 2,
) -> np.ndarray:
    """Tie-influence rounds over per-user share vectors.

    Each round picks a greedy matching over the (shuffled) edge list, so
    every user blends with at most one partner per round: matched
    endpoints move towards their midpoint with a weight interpolating
    from +assimilation (same class) to -repulsion (maximally remote
    classes). Connected near-class users end up more similar than random
    same-class pairs without collapsing a class onto a single point, and
    remote ties end up more different. Results are clipped back to the
    simplex.
    """
    if assimilation == 0.0 and repulsion == 0.0:
        return base
    if rng is None:
        rng = np.random.default_rng(0)
    out = base.copy()
    span = max(n_classes - 1, 1)
    edge_list = list(edges)
    for _ in range(rounds):
        used = np.zeros(len(base), dtype=bool)
        for idx in rng.permutation(len(edge_list)):
            a, b = edge_list[idx]
            if used[a] or used[b]:
                continue
            t = abs(int(cls[a]) - int(cls[b])) / span
            w = assimilation * (1 - t) - repulsion * t
            if w == 0.0:
                continue
            used[a] = used[b] = True
            delta = (out[b] - out[a]) * w / 2
            out[a] = out[a] + delta
            out[b] = out[b] - delta
    out = np.clip(out, 1e-12, None)
    return out / out.sum(axis=1, keepdims=True)


def _user_ids(n: int) -> list[str]:
    width = max(6, len(str(n)))
    return [f"u{i:0{width}d}" for i in range(n)]


def _plant_population(spec: SynthSpec, rng):
    """Planted Pareto AMPs and the induced equal-sum class labels."""
    users = _user_ids(spec.n_users)
    amps = spec.amp_scale * rng.uniform(size=spec.n_users) ** (-1.0 / spec.pareto_alpha)
    order = sorted(range(spec.n_users), key=lambda i: (amps[i], users[i]))
    table = AmpTable(
        users=tuple(users[i] for i in order),
        amps=np.array([amps[i] for i in order]),
    )
    if spec.n_users:
        partition = partition_classes(table, spec.n_classes)
        cls = np.array([partition.assignment[u] for u in users])
    else:
        partition = None
        cls = np.zeros(0, dtype=int)
    return users, amps, table, partition, cls


def _plant_vectors(spec: SynthSpec, rng, cls, edges):
    """Per-user non-cash share (16) and weekday (7) vectors: Dirichlet
    draws around the class means, then one tie-influence round."""
    means = np.asarray(spec.class_spending_means)
    weekp = np.asarray(spec.weekday_profiles)
    conc = spec.dirichlet_concentration
    shares = np.vstack([rng.dirichlet(conc * means[c - 1] + 1e-9) for c in cls]) \
        if len(cls) else np.zeros((0, means.shape[1]))
    weekly = np.vstack([rng.dirichlet(conc * weekp[c - 1] + 1e-9) for c in cls]) \
        if len(cls) else np.zeros((0, 7))
    shares = influence_blend(
        shares, edges, cls, spec.n_classes, spec.tie_assimilation, spec.tie_repulsion, rng
    )
    weekly = influence_blend(
        weekly, edges, cls, spec.n_classes, spec.tie_assimilation, spec.tie_repulsion, rng
    )
    return shares, weekly


def synth_vector_scenario(spec: SynthSpec) -> dict:
    """Planted graph, partition and per-user vectors without writing
    transaction files.

    Bypasses the multinomial purchase sampling so null-model tests can
    measure the planted tie-level structure directly. Returns a dict with
    users, graph, partition, class labels, share_vectors (user -> 16-vec)
    and weekly_vectors (user -> 7-vec).
    """
    from socioscope.ingest import SocialGraph

    spec.resolve()
    rng = np.random.default_rng(spec.seed)
    users, amps, table, partition, cls = _plant_population(spec, rng)
    edges = _sample_edges(spec, rng, cls)
    shares, weekly = _plant_vectors(spec, rng, cls, edges)
    graph = SocialGraph.from_edges(
        ((users[a], users[b]) for a, b in edges), extra_nodes=users
    )
    return {
        "users": users,
        "amps": {u: float(amps[i]) for i, u in enumerate(users)},
        "graph": graph,
        "partition": partition,
        "class": {u: int(cls[i]) for i, u in enumerate(users)},
        "share_vectors": {u: shares[i] for i, u in enumerate(users)},
        "weekly_vectors": {u: weekly[i] for i, u in enumerate(users)},
    }


def _month_timestamps(spec: SynthSpec) -> list[list[int]]:
    """timestamps[m][d]: noon UTC of the first weekday-d day of month m."""
    y, mo = spec.start_year_month
    out = []
    for m in range(spec.n_months):
        yy = y + (mo - 1 + m) // 12
        mm = (mo - 1 + m) % 12 + 1
        per_day = []
        for wd in range(7):
            first = datetime(yy, mm, 1, 12, tzinfo=timezone.utc)
            shift = (wd - first.weekday()) % 7
            day = 1 + shift
            day = min(day, calendar.monthrange(yy, mm)[1])
            per_day.append(int(datetime(yy, mm, day, 12, tzinfo=timezone.utc).timestamp()))
        out.append(per_day)
    return out


def generate(spec: SynthSpec, outdir) -> dict:
    """Write events.csv, transactions.csv, demographics.csv and
    ground_truth.json under outdir; returns the ground-truth dict.

    Deterministic given spec.seed.
    """
    spec.resolve()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    users, amps, table, partition, cls = _plant_population(spec, rng)

    # demographics
    ages = rng.integers(spec.age_range[0], spec.age_range[1], size=spec.n_users)
    genders = (rng.uniform(size=spec.n_users) < spec.gender_split).astype(int)
    with open(outdir / "demographics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["user_id", "age", "gender"])
        for i, u in enumerate(users):
            w.writerow([u, int(ages[i]), int(genders[i])])

    # homophilic simple graph
    edges = _sample_edges(spec, rng, cls)
    y0, m0 = spec.start_year_month
    t0 = int(datetime(y0, m0, 15, 9, tzinfo=timezone.utc).timestamp())
    with open(outdir / "events.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["caller", "callee", "timestamp", "kind", "duration"])
        for idx, (a, b) in enumerate(edges):
            # both directions so the active-core filter keeps everyone
            w.writerow([users[a], users[b], t0 + idx, "call", 60])
            w.writerow([users[b], users[a], t0 + idx + 1, "sms", 0])

    # transactions
    from socioscope.ingest import load_default_directory

    directory = load_default_directory()
    shares, weekly = _plant_vectors(spec, rng, cls, edges)
    _write_transactions(
        spec, rng, users, cls, amps, shares, weekly, directory, outdir / "transactions.csv"
    )

    same_class = (
        float(np.mean([cls[a] == cls[b] for a, b in edges])) if edges else float("nan")
    )
    truth = {
        "seed": spec.seed,
        "n_users": spec.n_users,
        "pareto_alpha": spec.pareto_alpha,
        "n_classes": spec.n_classes,
        "homophily_strength": spec.homophily_strength,
        "tie_assimilation": spec.tie_assimilation,
        "tie_repulsion": spec.tie_repulsion,
        "gender_split": spec.gender_split,
        "amp": {u: float(amps[i]) for i, u in enumerate(users)},
        "class": {u: int(cls[i]) for i, u in enumerate(users)},
        "class_sizes": [int((cls == j).sum()) for j in range(1, spec.n_classes + 1)] if spec.n_users else [],
        "same_class_edge_fraction": same_class,
        "expected_same_class_fraction_h0": (
            float(np.sum((np.bincount(cls, minlength=spec.n_classes + 1)[1:] / spec.n_users) ** 2))
            if spec.n_users else float("nan")
        ),
        "class_spending_means": np.asarray(spec.class_spending_means).tolist(),
        "weekday_profiles": np.asarray(spec.weekday_profiles).tolist(),
        "cash_fraction_by_class": np.asarray(spec.cash_fraction_by_class).tolist(),
        "category_blocks": spec.category_blocks,
        "n_edges": len(edges),
    }
    with open(outdir / "ground_truth.json", "w") as f:
        json.dump(truth, f, indent=1, sort_keys=True)
    return truth


def _sample_edges(spec: SynthSpec, rng, cls) -> list[tuple[int, int]]:
    """Homophilic edge sampling: with probability h the second endpoint
    is drawn from the first endpoint's class, else uniformly."""
    n = spec.n_users
    if n < 2 or spec.n_edges == 0:
        return []
    by_class = {j: np.nonzero(cls == j)[0] for j in set(cls.tolist())}
    edges: set[tuple[int, int]] = set()
    h = spec.homophily_strength
    max_iter = 100 * spec.n_edges + 1000
    it = 0
    while len(edges) < spec.n_edges and it < max_iter:
        it += 1
        a = int(rng.integers(n))
        if h > 0 and rng.uniform() < h:
            pool = by_class[cls[a]]
            b = int(pool[rng.integers(len(pool))])
        else:
            b = int(rng.integers(n))
        if a == b:
            continue
        e = (a, b) if a < b else (b, a)
        edges.add(e)
    if len(edges) < spec.n_edges:
        raise ValueError("could not place requested edges; spec infeasible")
    return sorted(edges)


def _write_transactions(spec, rng, users, cls, amps, share_vecs, weekly_vecs, directory, path) -> None:
    noncash = directory.noncash_pcgs
    cash_mccs = sorted(m for m, p in directory.mcc_to_pcg.items() if p == directory.cash_pcg)
    pcg_mccs = {
        k: sorted(m for m, p in directory.mcc_to_pcg.items() if p == k)[: spec.mccs_per_pcg]
        for k in noncash
    }
    stamps = _month_timestamps(spec)
    cashf = np.asarray(spec.cash_fraction_by_class)
    n_tx = max(spec.tx_per_user, spec.n_months)

    blocks = spec.category_blocks
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["user_id", "timestamp", "amount", "mcc"])
        for i, u in enumerate(users):
            j = cls[i] - 1
            shares = share_vecs[i]
            # expand PCG shares into category shares (few MCCs per PCG)
            cats, weights = [], []
            for ki, k in enumerate(noncash):
                mccs = pcg_mccs[k]
                if not mccs or shares[ki] <= 0:
                    continue
                split = rng.dirichlet(np.ones(len(mccs)))
                for mcc, s in zip(mccs, split):
                    cats.append(mcc)
                    weights.append(shares[ki] * s)
            # planted co-purchase blocks: members move a fixed share onto
            # every block category
            for blk in blocks:
                if rng.uniform() < blk.get("participation", 0.5):
                    share = blk.get("share", 0.2) / max(len(blk["mccs"]), 1)
                    for mcc in blk["mccs"]:
                        cats.append(int(mcc))
                        weights.append(share)
            weights = np.asarray(weights)
            weights = weights / weights.sum()
            cash = cashf[j]

            total_cents = int(round(amps[i] * spec.n_months * 100))
            per_tx = max(total_cents // n_tx, 1)
            # vectorized draws per user: one rng call per quantity
            months = np.arange(n_tx) % spec.n_months
            if n_tx > spec.n_months:
                months[spec.n_months:] = rng.integers(spec.n_months, size=n_tx - spec.n_months)
            days = rng.choice(7, size=n_tx, p=weekly_vecs[i])
            cash_mask = rng.uniform(size=n_tx) < cash
            cash_pick = rng.integers(len(cash_mccs), size=n_tx)
            cat_pick = rng.choice(len(cats), size=n_tx, p=weights)
            cats_arr = np.asarray(cats)
            cash_arr = np.asarray(cash_mccs)
            mccs = np.where(cash_mask, cash_arr[cash_pick], cats_arr[cat_pick])
            for t in range(n_tx):
                amount = per_tx if t < n_tx - 1 else total_cents - per_tx * (n_tx - 1)
                w.writerow([u, stamps[months[t]][days[t]], f"{amount / 100:.2f}", int(mccs[t])])


def synth_afs_features(
    n_categories: int = 271, target_age_seg_r: float = 0.42, seed: int = 0
) -> dict[int, dict[str, float]]:
    """Synthetic AFS triplets with a planted age-SEG correlation.

    Gaussian copula: (age, seg) latent normals correlated at the target,
    mapped to the observed ranges; gender independent in [0, 1]. Used to
    calibrate feature_correlations.
    """
    rng = np.random.default_rng(seed)
    cov = np.array([[1.0, target_age_seg_r], [target_age_seg_r, 1.0]])
    z = rng.multivariate_normal([0, 0], cov, size=n_categories)
    age = 40 + 10 * z[:, 0]
    seg = np.clip(5 + 2 * z[:, 1], 1, 9)
    gender = rng.uniform(0, 1, size=n_categories)
    return {
        1000 + i: {"age": float(age[i]), "gender": float(gender[i]), "seg": float(seg[i])}
        for i in range(n_categories)
    }


# ---------------------------------------------------------------------------
# oracle report

def oracle_report(ground_truth: dict, outputs: dict) -> list[dict]:
    """Machine-readable pass/fail verdicts of pipeline outputs against the
    generator's planted parameters.

    outputs may carry: seed, gini, class (user -> recovered class),
    L (ratio matrix as nested list with NaN for missing), same-seed runs
    only. Missing inputs produce failing verdicts, never crashes.
    """
    verdicts: list[dict] = []

    def add(name, ok, detail):
        verdicts.append({"check": name, "pass": bool(ok), "detail": detail})

    if outputs.get("seed") is not None and outputs["seed"] != ground_truth.get("seed"):
        raise ValueError("outputs come from a different seed than the ground truth")

    amp = ground_truth.get("amp")
    gini = outputs.get("gini")
    if amp and gini is not None:
        vals = np.array(list(amp.values()))
        mu = vals.mean()
        n = len(vals)
        srt = np.sort(vals)
        ranks = np.arange(1, n + 1)
        mad_gini = float((2 * np.sum(ranks * srt) - (n + 1) * srt.sum()) / (n**2 * mu))
        ok = abs(gini - mad_gini) <= 1.0 / n + 1e-9
        add("gini_oracle", ok, f"pipeline={gini:.4f} oracle={mad_gini:.4f}")
    else:
        add("gini_oracle", False, "missing AMP ground truth or pipeline gini")

    planted = ground_truth.get("class")
    recovered = outputs.get("class")
    if planted and recovered:
        common = [u for u in planted if u in recovered]
        if common:
            from sklearn.metrics import normalized_mutual_info_score

            nmi = normalized_mutual_info_score(
                [planted[u] for u in common], [recovered[u] for u in common]
            )
            add("class_recovery_nmi", nmi >= 0.9, f"NMI={nmi:.3f} over {len(common)} users")
        else:
            add("class_recovery_nmi", False, "no overlapping users")
    else:
        add("class_recovery_nmi", False, "missing class labels")

    L = outputs.get("L")
    h = ground_truth.get("homophily_strength", 0.0)
    if L is not None and h >= 0.5:
        L = np.asarray(L, dtype=float)
        diag = np.diag(L)
        ok = np.all(np.isfinite(diag)) and np.all(diag < 1.0)
        add("homophily_L_diagonal", ok, f"diag={np.round(diag, 3).tolist()}")
    elif h >= 0.5:
        add("homophily_L_diagonal", False, "missing L matrix output")

    return verdicts
