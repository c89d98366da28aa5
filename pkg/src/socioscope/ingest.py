"""Parsing of communication / transaction logs and social-graph construction.

Money amounts are parsed from decimal strings into integer cents so that
conservation checks (sum of per-category spend vs raw totals) stay exact.
Fractions are only formed downstream, in ratio computations.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources

log = logging.getLogger(__name__)

CASH_PCG = "Service Providers"


class ParseError(ValueError):
    """Malformed input row; message carries the file line number."""


def to_cents(text: str) -> int:
    """Parse a decimal currency string into integer cents.

    Accepts at most two fractional digits; more are rejected rather than
    rounded so that file totals stay auditable.
    """
    text = text.strip()
    neg = text.startswith("-")
    if neg:
        text = text[1:]
    whole, _, frac = text.partition(".")
    if len(frac) > 2 or not (whole or frac):
        raise ValueError(f"bad amount {text!r}")
    frac = (frac + "00")[:2]
    cents = int(whole or "0") * 100 + int(frac or "0")
    return -cents if neg else cents


@dataclass(frozen=True)
class TransactionRecord:
    user_id: str
    timestamp: int          # seconds since epoch, UTC
    amount_cents: int
    mcc: int
    mcc_valid: bool = True


@dataclass(frozen=True)
class CommEvent:
    caller_id: str
    callee_id: str
    timestamp: int
    kind: str = "call"      # call | sms
    duration: int = 0


@dataclass(frozen=True)
class CategoryDirectory:
    """MCC universe: display names, MCC -> PCG mapping, retained PCG list.

    ``active_pcgs`` is the ordered K_17 list; element 0 is the cash /
    money-transfer group k_1, analysed separately from the 16 others.
    """

    mcc_names: dict[int, str]
    mcc_to_pcg: dict[int, str]
    active_pcgs: tuple[str, ...]

    def __post_init__(self):
        if len(self.active_pcgs) != 17:
            raise ValueError(f"expected 17 active PCGs, got {len(self.active_pcgs)}")
        if self.active_pcgs[0] != CASH_PCG:
            raise ValueError("active_pcgs[0] must be the cash/transfers group")

    @property
    def cash_pcg(self) -> str:
        return self.active_pcgs[0]

    @property
    def noncash_pcgs(self) -> tuple[str, ...]:
        """The K_{2-17} set: 16 retained groups, cash excluded."""
        return self.active_pcgs[1:]

    def is_cash_mcc(self, mcc: int) -> bool:
        return self.mcc_to_pcg.get(mcc) == self.cash_pcg


# The 16 non-cash retained groups in a fixed display order; the remaining
# 11 groups in the directory carry <0.3% of spend and are dropped.
_NONCASH_ACTIVE = (
    "Retail Stores",
    "Food Stores",
    "High Risk Personal Retail",
    "Restaurants",
    "Gas Stations",
    "Telecom",
    "Mail Phone Order",
    "Automobiles",
    "Professional Services",
    "Wholesale Trade",
    "Clothing Stores",
    "Hotels",
    "Airlines",
    "Education",
    "Miscellaneous Stores",
    "Entertainment",
)


def load_directory(path) -> CategoryDirectory:
    """Load an ``mcc,name,pcg`` CSV into a CategoryDirectory."""
    names: dict[int, str] = {}
    pcgs: dict[int, str] = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            mcc = int(row["mcc"])
            names[mcc] = row["name"]
            pcgs[mcc] = row["pcg"]
    return CategoryDirectory(
        mcc_names=names, mcc_to_pcg=pcgs, active_pcgs=(CASH_PCG,) + _NONCASH_ACTIVE
    )


def load_default_directory() -> CategoryDirectory:
    """Load the packaged 276-MCC directory (271 purchase + 5 cash codes)."""
    ref = resources.files("socioscope.data").joinpath("mcc_directory.csv")
    with resources.as_file(ref) as path:
        return load_directory(path)


@dataclass
class SocialGraph:
    """Undirected simple graph over user ids.

    Edges are stored as sorted id pairs; construction guarantees no
    self-loops and no duplicates. Treat instances as immutable once built.
    """

    nodes: list[str] = field(default_factory=list)
    edges: list[tuple[str, str]] = field(default_factory=list)

    @classmethod
    def from_edges(cls, edges, extra_nodes=()) -> "SocialGraph":
        seen: set[tuple[str, str]] = set()
        nodes: set[str] = set(extra_nodes)
        for u, v in edges:
            if u == v:
                continue
            e = (u, v) if u <= v else (v, u)
            seen.add(e)
            nodes.add(u)
            nodes.add(v)
        return cls(nodes=sorted(nodes), edges=sorted(seen))

    @property
    def degree(self) -> dict[str, int]:
        d = {n: 0 for n in self.nodes}
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def number_of_nodes(self) -> int:
        return len(self.nodes)

    def number_of_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


@dataclass
class EgoProfile:
    """Per-user aggregates feeding every downstream measure.

    All money fields are integer cents. ``weekly_spend`` is keyed by
    (pcg, weekday) with Monday=0 .. Sunday=6.
    """

    user_id: str
    age: int | None = None
    gender: int | None = None   # 0 = female, 1 = male
    monthly_spend: dict[int, int] = field(default_factory=dict)
    category_spend: dict[int, int] = field(default_factory=dict)
    pcg_spend: dict[str, int] = field(default_factory=dict)
    weekly_spend: dict[tuple[str, int], int] = field(default_factory=dict)
    invalid_mcc_cents: int = 0

    @property
    def active_months(self) -> int:
        return sum(1 for v in self.monthly_spend.values() if v > 0)

    @property
    def total_cents(self) -> int:
        return sum(self.monthly_spend.values())


def parse_events(path) -> list[CommEvent]:
    """Parse a ``caller,callee,timestamp,kind,duration`` CSV."""
    events = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for lineno, row in enumerate(reader, start=2):
            try:
                events.append(CommEvent(
                    caller_id=row["caller"],
                    callee_id=row["callee"],
                    timestamp=int(row["timestamp"]),
                    kind=row.get("kind", "call") or "call",
                    duration=int(row.get("duration") or 0),
                ))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad event row ({exc})") from exc
    return events


def parse_transactions(path, directory: CategoryDirectory) -> list[TransactionRecord]:
    """Parse a ``user_id,timestamp,amount,mcc`` CSV.

    Rows with an MCC missing from the directory are kept but flagged
    invalid: they count towards monthly totals, never towards category
    spend. Negative amounts are rejected row-wise with a diagnostic.
    """
    records = []
    n_invalid = n_rejected = 0
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for lineno, row in enumerate(reader, start=2):
            try:
                amount = to_cents(row["amount"])
                mcc = int(row["mcc"])
                ts = int(row["timestamp"])
                user = row["user_id"]
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: malformed row ({exc})") from exc
            if amount < 0:
                n_rejected += 1
                log.warning("%s:%d: negative amount rejected", path, lineno)
                continue
            valid = mcc in directory.mcc_to_pcg
            if not valid:
                n_invalid += 1
            records.append(TransactionRecord(user, ts, amount, mcc, valid))
    if n_invalid:
        log.info("%s: %d rows with invalid MCC (kept in totals only)", path, n_invalid)
    if n_rejected:
        log.warning("%s: %d rows rejected (negative amount)", path, n_rejected)
    return records


def build_graph(events) -> SocialGraph:
    """Undirected simple graph: one edge per interacting pair."""
    n_self = sum(1 for e in events if e.caller_id == e.callee_id)
    if n_self:
        log.info("dropped %d self-interactions", n_self)
    return SocialGraph.from_edges((e.caller_id, e.callee_id) for e in events)


def filter_active_core(events) -> SocialGraph:
    """Recursively drop users lacking in- or out-activity, then undirect.

    A surviving user must have sent at least one event to a survivor and
    received at least one from a survivor; removal cascades to a fixed
    point (this filters out call services and other one-way actors).
    """
    out_nbrs: dict[str, set[str]] = defaultdict(set)
    in_nbrs: dict[str, set[str]] = defaultdict(set)
    for e in events:
        if e.caller_id == e.callee_id:
            continue
        out_nbrs[e.caller_id].add(e.callee_id)
        in_nbrs[e.callee_id].add(e.caller_id)

    alive = set(out_nbrs) | set(in_nbrs)
    queue = [n for n in alive if not (out_nbrs[n] & alive) or not (in_nbrs[n] & alive)]
    dead: set[str] = set()
    while queue:
        n = queue.pop()
        if n in dead:
            continue
        dead.add(n)
        alive.discard(n)
        for m in (out_nbrs[n] | in_nbrs[n]) & alive:
            if not (out_nbrs[m] & alive) or not (in_nbrs[m] & alive):
                queue.append(m)

    kept = [
        (u, v)
        for u, nbrs in out_nbrs.items() if u in alive
        for v in nbrs if v in alive
    ]
    return SocialGraph.from_edges(kept)


def largest_component(g: SocialGraph) -> SocialGraph:
    """Induced subgraph on the largest connected component.

    Size ties are broken by the smallest minimum node id, so the result
    is deterministic.
    """
    if not g.nodes:
        return SocialGraph()
    adj = g.adjacency()
    unvisited = set(g.nodes)
    best: set[str] | None = None
    while unvisited:
        start = unvisited.pop()
        comp = {start}
        stack = [start]
        while stack:
            for m in adj[stack.pop()]:
                if m not in comp:
                    comp.add(m)
                    stack.append(m)
        unvisited -= comp
        if (
            best is None
            or len(comp) > len(best)
            or (len(comp) == len(best) and min(comp) < min(best))
        ):
            best = comp
    edges = [(u, v) for u, v in g.edges if u in best]
    return SocialGraph(nodes=sorted(best), edges=edges)


def _month_index(ts: int, utc_offset_hours: float = 0.0) -> int:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc) + timedelta(hours=utc_offset_hours)
    return dt.year * 12 + (dt.month - 1)


def _weekday(ts: int, utc_offset_hours: float = 0.0) -> int:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc) + timedelta(hours=utc_offset_hours)
    return dt.weekday()  # Monday=0


def parse_demographics(path) -> dict[str, tuple[int | None, int | None]]:
    """Parse a ``user_id,age,gender`` CSV; blank fields mean unknown."""
    demo = {}
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.DictReader(f), start=2):
            try:
                age = int(row["age"]) if row.get("age") else None
                gender = int(row["gender"]) if row.get("gender") not in (None, "") else None
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad demographics row ({exc})") from exc
            demo[row["user_id"]] = (age, gender)
    return demo


def assemble_profiles(
    transactions,
    demographics: dict[str, tuple[int | None, int | None]],
    directory: CategoryDirectory,
    min_active_months: int = 2,
    utc_offset_hours: float = 0.0,
) -> dict[str, EgoProfile]:
    """Aggregate transactions into per-user EgoProfiles.

    Users active in fewer than ``min_active_months`` distinct months are
    excluded. Users missing from ``demographics`` keep unknown age/gender
    and are skipped only by demographic analyses.
    """
    if min_active_months < 1:
        raise ValueError("min_active_months must be >= 1")
    profiles: dict[str, EgoProfile] = {}
    for rec in transactions:
        p = profiles.get(rec.user_id)
        if p is None:
            age, gender = demographics.get(rec.user_id, (None, None))
            p = profiles[rec.user_id] = EgoProfile(rec.user_id, age=age, gender=gender)
        month = _month_index(rec.timestamp, utc_offset_hours)
        p.monthly_spend[month] = p.monthly_spend.get(month, 0) + rec.amount_cents
        if not rec.mcc_valid:
            p.invalid_mcc_cents += rec.amount_cents
            continue
        p.category_spend[rec.mcc] = p.category_spend.get(rec.mcc, 0) + rec.amount_cents
        pcg = directory.mcc_to_pcg[rec.mcc]
        p.pcg_spend[pcg] = p.pcg_spend.get(pcg, 0) + rec.amount_cents
        key = (pcg, _weekday(rec.timestamp, utc_offset_hours))
        p.weekly_spend[key] = p.weekly_spend.get(key, 0) + rec.amount_cents

    kept = {u: p for u, p in profiles.items() if p.active_months >= min_active_months}
    dropped = len(profiles) - len(kept)
    if dropped:
        log.info("dropped %d users below %d active months", dropped, min_active_months)
    return kept


# ---------------------------------------------------------------------------
# serialization (documented external formats)

def write_graph_csv(g: SocialGraph, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["u", "v"])
        w.writerows(g.edges)


def read_graph_csv(path) -> SocialGraph:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        return SocialGraph.from_edges((row["u"], row["v"]) for row in reader)


def write_profiles_jsonl(profiles: dict[str, EgoProfile], path) -> None:
    with open(path, "w") as f:
        for uid in sorted(profiles):
            p = profiles[uid]
            f.write(json.dumps({
                "user_id": p.user_id,
                "age": p.age,
                "gender": p.gender,
                "monthly_spend": {str(k): v for k, v in p.monthly_spend.items()},
                "category_spend": {str(k): v for k, v in p.category_spend.items()},
                "pcg_spend": p.pcg_spend,
                "weekly_spend": {f"{k}|{d}": v for (k, d), v in p.weekly_spend.items()},
                "invalid_mcc_cents": p.invalid_mcc_cents,
            }) + "\n")


def read_profiles_jsonl(path) -> dict[str, EgoProfile]:
    profiles = {}
    with open(path) as f:
        for line in f:
            d = json.loads(line)
            profiles[d["user_id"]] = EgoProfile(
                user_id=d["user_id"],
                age=d["age"],
                gender=d["gender"],
                monthly_spend={int(k): v for k, v in d["monthly_spend"].items()},
                category_spend={int(k): v for k, v in d["category_spend"].items()},
                pcg_spend=d["pcg_spend"],
                weekly_spend={
                    (k.rsplit("|", 1)[0], int(k.rsplit("|", 1)[1])): v
                    for k, v in d["weekly_spend"].items()
                },
                invalid_mcc_cents=d["invalid_mcc_cents"],
            )
    return profiles
