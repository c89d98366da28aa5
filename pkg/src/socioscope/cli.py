"""Command-line pipeline orchestration.

Subcommands: synth, ingest, classes, spending, nullmodel, catnet,
dynamics, run, report. `run` executes the full pipeline with a manifest
recording every output file, its producing stage, the config hash, and
the stage seed; unchanged stages are skipped on rerun.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from socioscope import catnet, dynamics, ingest, matio, nullmodel, socio, spending, synth

log = logging.getLogger("socioscope")

STAGES = ("ingest", "classes", "spending", "nullmodel", "catnet", "dynamics")


def stage_seed(root_seed: int, stage: str, index: int = 0) -> int:
    """Derive a stage RNG seed from the root seed: hash of seed+name+index."""
    digest = hashlib.sha256(f"{root_seed}:{stage}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def _file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_hash(parts: dict) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True).encode()).hexdigest()[:16]


def n_workers(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("SOCIOSCOPE_THREADS")
    return int(env) if env else 1


# ---------------------------------------------------------------------------
# stage implementations (each writes files under an output directory)

def run_ingest(events_path, tx_path, demo_path, outdir: Path, min_active_months=2, utc_offset=0.0):
    outdir.mkdir(parents=True, exist_ok=True)
    directory = ingest.load_default_directory()
    events = ingest.parse_events(events_path)
    graph = ingest.largest_component(ingest.filter_active_core(events))
    tx = ingest.parse_transactions(tx_path, directory)
    demo = ingest.parse_demographics(demo_path)
    profiles = ingest.assemble_profiles(
        tx, demo, directory, min_active_months=min_active_months, utc_offset_hours=utc_offset
    )
    ingest.write_graph_csv(graph, outdir / "graph.csv")
    ingest.write_profiles_jsonl(profiles, outdir / "profiles.jsonl")
    return ["graph.csv", "profiles.jsonl"]


def run_classes(profiles_path, outdir: Path, n_classes=9, tail_fraction=0.1):
    outdir.mkdir(parents=True, exist_ok=True)
    profiles = ingest.read_profiles_jsonl(profiles_path)
    amp = socio.compute_amp(profiles)
    summary = socio.lorenz_and_gini(amp)
    try:
        alpha = socio.estimate_pareto_alpha(amp.amps, tail_fraction)
    except ValueError as exc:
        log.warning("pareto alpha unavailable: %s", exc)
        alpha = math.nan
    partition = socio.partition_classes(amp, n_classes)
    matio.write_table_csv(
        outdir / "partition.csv",
        ["user_id", "class", "amp"],
        [(u, partition.assignment[u], repr(float(a))) for u, a in zip(amp.users, amp.amps)],
    )
    matio.write_table_csv(outdir / "lorenz.csv", ["f", "C"], summary.lorenz.tolist())
    pyramid, skipped = socio.demographics_pyramid(profiles, partition)
    matio.write_table_csv(
        outdir / "pyramid.csv",
        ["age_lo", "age_hi", "gender", "class", "count"],
        [(lo, hi, g, j, c) for ((lo, hi), g, j), c in sorted(pyramid.items())],
    )
    with open(outdir / "inequality.json", "w") as f:
        json.dump({
            "gini": summary.gini,
            "pareto_alpha": None if math.isnan(alpha) else alpha,
            "n_users": len(amp),
            "class_sums": partition.class_sums.tolist(),
            "class_sizes": [
                partition.boundaries[j] - partition.boundaries[j - 1]
                for j in range(1, n_classes + 1)
            ],
            "pyramid_skipped": skipped,
        }, f, indent=1)
    return ["partition.csv", "lorenz.csv", "pyramid.csv", "inequality.json"]


def _load_partition(path) -> socio.ClassPartition:
    import csv as _csv

    rows = []
    with open(path, newline="") as f:
        for row in _csv.DictReader(f):
            rows.append((row["user_id"], int(row["class"]), float(row["amp"])))
    n = max(j for _, j, _ in rows)
    assignment = {u: j for u, j, _ in rows}
    sums = np.zeros(n)
    counts = np.zeros(n, dtype=int)
    for _, j, a in rows:
        sums[j - 1] += a
        counts[j - 1] += 1
    bounds = tuple(np.concatenate([[0], np.cumsum(counts)]).tolist())
    return socio.ClassPartition(n_classes=n, assignment=assignment,
                                boundaries=bounds, class_sums=sums)


def run_spending(profiles_path, partition_path, outdir: Path, per_capita=False):
    outdir.mkdir(parents=True, exist_ok=True)
    directory = ingest.load_default_directory()
    profiles = ingest.read_profiles_jsonl(profiles_path)
    partition = _load_partition(partition_path)
    vectors = spending.spending_vectors(profiles, directory)
    files = []

    r_table = spending.class_share_distribution(profiles, partition, directory)
    if per_capita:
        # per-capita variant: class spend divided by class size (config
        # option only; dominated by the richest class, not used downstream)
        sizes = np.zeros(partition.n_classes)
        for j in partition.assignment.values():
            sizes[j - 1] += 1
        r_table = {
            k: (v / np.maximum(sizes, 1)) / (v / np.maximum(sizes, 1)).sum()
            for k, v in r_table.items()
        }
    matio.write_table_csv(
        outdir / "class_shares.csv",
        ["pcg"] + [str(j) for j in range(1, partition.n_classes + 1)],
        [[k] + [repr(float(x)) for x in v] for k, v in sorted(r_table.items())],
    )
    files.append("class_shares.csv")

    for subset, tag in (("k2-17", "sv"), ("k1", "k1")):
        d = spending.class_distance_matrix(vectors, partition, subset)
        matio.write_matrix_csv(outdir / f"distance_{tag}.csv", d)
        sigma, std = spending.class_dispersion(vectors, partition, subset)
        matio.write_table_csv(
            outdir / f"dispersion_{tag}.csv",
            ["class", "sigma", "std"],
            [(j + 1, repr(float(s)), repr(float(t))) for j, (s, t) in enumerate(zip(sigma, std))],
        )
        files += [f"distance_{tag}.csv", f"dispersion_{tag}.csv"]
    for flag, tag in ((False, "sv"), (True, "k1")):
        ent = spending.class_entropy(vectors, partition, include_cash=flag)
        matio.write_table_csv(
            outdir / f"entropy_{tag}.csv", ["class", "entropy"],
            [(j + 1, repr(float(e))) for j, e in enumerate(ent)],
        )
        files.append(f"entropy_{tag}.csv")
    return files


def run_nullmodel(graph_path, profiles_path, partition_path, outdir: Path,
                  swaps_factor=5, ensemble=100, seed=0, subsets=("k2-17", "k1"),
                  removal_fractions=(0.25, 0.5, 0.75), with_lambda=True):
    outdir.mkdir(parents=True, exist_ok=True)
    directory = ingest.load_default_directory()
    graph = ingest.read_graph_csv(graph_path)
    profiles = ingest.read_profiles_jsonl(profiles_path)
    partition = _load_partition(partition_path)
    vectors = spending.spending_vectors(profiles, directory)
    plan = nullmodel.RewirePlan(swaps_factor=swaps_factor, ensemble_size=ensemble, seed=seed)

    layers = [(f"L_{s}", vectors, s, "absdiff") for s in subsets]
    if with_lambda:
        for s in subsets:
            wv = dynamics.weekly_vectors(profiles, directory, scope=s)
            layers.append((f"Lam_{s}", wv, "weekly", "euclid"))
    results = nullmodel.combined_null_matrices(graph, partition, plan, layers)
    files = []
    for name, (ratio, sigma, counts) in results.items():
        matio.write_matrix_csv(outdir / f"{name}.csv", ratio)
        matio.write_matrix_csv(outdir / f"{name}_sigma.csv", sigma)
        files += [f"{name}.csv", f"{name}_sigma.csv"]

    # per-PCG assortativity and link-removal robustness
    r_table = _pcg_share_table(profiles, directory)
    order, curves = nullmodel.robustness_by_removal(
        graph, r_table, fractions=removal_fractions, repeats=3, seed=stage_seed(seed, "removal")
    )
    rows = []
    for frac in sorted(curves):
        for c in order:
            rows.append((repr(float(frac)), c, repr(float(curves[frac][c]))))
    matio.write_table_csv(outdir / "assortativity.csv", ["removed_fraction", "pcg", "rho"], rows)
    files.append("assortativity.csv")
    return files


def _pcg_share_table(profiles, directory):
    """Per-PCG share of each user's total spend (cash included in norm)."""
    table: dict[str, dict[str, float]] = {k: {} for k in directory.active_pcgs}
    for uid, p in profiles.items():
        total = sum(p.pcg_spend.get(k, 0) for k in directory.active_pcgs)
        if total <= 0:
            continue
        for k in directory.active_pcgs:
            cents = p.pcg_spend.get(k, 0)
            if cents:
                table[k][uid] = cents / total
    return {k: v for k, v in table.items() if v}


def run_catnet(profiles_path, partition_path, outdir: Path, rho_min=1.5,
               support_min=1000, min_purchases=100, k_range=range(2, 26),
               seed=0, standardize=True, purchasers_only=False):
    outdir.mkdir(parents=True, exist_ok=True)
    directory = ingest.load_default_directory()
    profiles = ingest.read_profiles_jsonl(profiles_path)
    partition = _load_partition(partition_path)
    table = catnet.build_category_table(profiles, directory, min_purchases=min_purchases)
    rho = catnet.category_correlation(table, purchasers_only=purchasers_only)
    matio.write_matrix_csv(outdir / "rho_matrix.csv", rho, labels=table.categories, corner="mcc")

    graph = catnet.threshold_graph(table, rho, rho_min=rho_min, support_min=support_min)
    matio.write_table_csv(
        outdir / "rho_edges.csv", ["c_i", "c_j", "rho"],
        [(u, v, repr(float(d["weight"]))) for u, v, d in graph.edges(data=True)],
    )
    labels, modularity = catnet.louvain_communities(graph, seed=stage_seed(seed, "louvain"))
    matio.write_table_csv(
        outdir / "communities.csv", ["mcc", "community"],
        sorted(labels.items()),
    )

    afs = catnet.average_feature_set(table, profiles, partition)
    comm_afs = catnet.community_feature_sets(table, profiles, partition, labels)
    feats = {m: v for m, v in afs.items() if all(v[f] is not None for f in catnet.FEATURES)}
    files = ["rho_matrix.csv", "rho_edges.csv", "communities.csv", "afs.csv"]
    matio.write_table_csv(
        outdir / "afs.csv", ["mcc", "age", "gender", "seg"],
        [(m, *[("" if v[f] is None else repr(float(v[f]))) for f in catnet.FEATURES])
         for m, v in sorted(afs.items())],
    )
    matio.write_table_csv(
        outdir / "community_afs.csv", ["community", "age", "gender", "seg"],
        [(c, *[("" if v[f] is None else repr(float(v[f]))) for f in catnet.FEATURES])
         for c, v in sorted(comm_afs.items())],
    )
    files.append("community_afs.csv")

    summary = {"n_categories": len(table.categories),
               "graph_nodes": graph.number_of_nodes(),
               "graph_edges": graph.number_of_edges(),
               "n_communities": len(set(labels.values())),
               "modularity": modularity}
    if len(feats) >= 3:
        X = np.array([[feats[m][f] for f in catnet.FEATURES] for m in sorted(feats)])
        try:
            klabels, criteria = catnet.kmeans_with_selection(
                X, k_range=k_range, seed=stage_seed(seed, "kmeans"), standardize=standardize
            )
            matio.write_table_csv(
                outdir / "cluster_criteria.csv",
                ["k", "davies_bouldin", "calinski_harabasz", "gap", "gap_se"],
                [(k, *[repr(float(r[c])) for c in
                       ("davies_bouldin", "calinski_harabasz", "gap", "gap_se")])
                 for k, r in sorted(criteria["per_k"].items())],
            )
            files.append("cluster_criteria.csv")
            summary["recommended_k"] = criteria["recommended"]
        except ValueError as exc:
            log.warning("k-means selection skipped: %s", exc)
        corr = catnet.feature_correlations(afs)
        summary["pearson"] = {f"{a}-{b}": r for (a, b), (r, p) in corr.items()}
        summary["pearson_p"] = {f"{a}-{b}": p for (a, b), (r, p) in corr.items()}
    with open(outdir / "catnet_summary.json", "w") as f:
        json.dump(summary, f, indent=1)
    files.append("catnet_summary.json")
    return files


def run_dynamics(profiles_path, partition_path, outdir: Path, per_pcg=True,
                 spend_weighted=False):
    outdir.mkdir(parents=True, exist_ok=True)
    directory = ingest.load_default_directory()
    profiles = ingest.read_profiles_jsonl(profiles_path)
    partition = _load_partition(partition_path)
    vectors = dynamics.weekly_vectors(profiles, directory)
    files = []
    for grouping in ("class", "age", "gender"):
        prof = dynamics.group_profiles(vectors, profiles, grouping, partition,
                                       spend_weighted=spend_weighted)
        rows = []
        for key in sorted(prof):
            label = f"{key[0]}-{key[1]}" if isinstance(key, tuple) else key
            rows.append([label] + [repr(float(x)) for x in prof[key]])
        matio.write_table_csv(
            outdir / f"weekly_{grouping}.csv",
            ["group"] + [f"d{i}" for i in range(7)], rows,
        )
        files.append(f"weekly_{grouping}.csv")
    if per_pcg:
        per = dynamics.per_pcg_profiles(profiles, directory, partition)
        rows = [
            [k, j] + [repr(float(x)) for x in vec]
            for (k, j), vec in sorted(per.items())
        ]
        matio.write_table_csv(
            outdir / "weekly_per_pcg.csv",
            ["pcg", "class"] + [f"d{i}" for i in range(7)], rows,
        )
        files.append("weekly_per_pcg.csv")
    return files


# ---------------------------------------------------------------------------
# full pipeline with manifest + caching

def _stage_state(manifest_path: Path) -> dict:
    if manifest_path.exists():
        with open(manifest_path) as f:
            return json.load(f)
    return {"stages": {}}


def run_pipeline(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / "manifest.json"
    manifest = _stage_state(manifest_path)
    root_seed = args.seed

    inputs = {}
    if args.synthetic:
        spec = synth.SynthSpec(
            n_users=args.synth_users, n_edges=args.synth_edges,
            homophily_strength=args.synth_homophily,
            tie_assimilation=args.synth_assimilation,
            tie_repulsion=args.synth_repulsion,
            tx_per_user=args.synth_tx,
            pareto_alpha=args.synth_alpha,
            seed=stage_seed(root_seed, "synth"),
        )
        sdir = outdir / "synth"
        cfg = _config_hash({"users": spec.n_users, "edges": spec.n_edges,
                            "h": spec.homophily_strength,
                            "assim": spec.tie_assimilation,
                            "tx": spec.tx_per_user,
                            "alpha": spec.pareto_alpha,
                            "rep": spec.tie_repulsion, "seed": spec.seed})
        entry = manifest["stages"].get("synth")
        if entry and entry["config"] == cfg and all((sdir / f).exists() for f in entry["files"]):
            entry["cached"] = True
        else:
            synth.generate(spec, sdir)
            manifest["stages"]["synth"] = {
                "config": cfg, "seed": spec.seed, "cached": False,
                "files": ["events.csv", "transactions.csv", "demographics.csv",
                          "ground_truth.json"],
            }
        inputs = {"events": sdir / "events.csv", "transactions": sdir / "transactions.csv",
                  "demographics": sdir / "demographics.csv"}
    else:
        inputs = {"events": Path(args.events), "transactions": Path(args.transactions),
                  "demographics": Path(args.demographics)}
    for name, p in inputs.items():
        if not p.exists():
            log.error("missing input file for %s: %s", name, p)
            return 2

    input_hashes = {k: _file_hash(p) for k, p in inputs.items()}

    def run_stage(name, config, fn):
        sdir = outdir / name
        cfg = _config_hash(config)
        entry = manifest["stages"].get(name)
        if entry and entry["config"] == cfg and all((sdir / f).exists() for f in entry["files"]):
            entry["cached"] = True
            log.info("stage %s: cached", name)
            return True
        try:
            files = fn(sdir)
        except Exception as exc:
            log.error("stage %s failed: %s", name, exc)
            manifest["stages"][name] = {"config": cfg, "cached": False, "files": [],
                                        "failed": str(exc)}
            _write_manifest(manifest, manifest_path, root_seed)
            return False
        manifest["stages"][name] = {"config": cfg, "seed": stage_seed(root_seed, name),
                                    "cached": False, "files": files}
        _write_manifest(manifest, manifest_path, root_seed)
        return True

    ing = outdir / "ingest"
    ok = run_stage(
        "ingest",
        {"inputs": input_hashes, "min_months": args.min_active_months},
        lambda d: run_ingest(inputs["events"], inputs["transactions"],
                             inputs["demographics"], d,
                             min_active_months=args.min_active_months),
    )
    cls_dir = outdir / "classes"
    ok = ok and run_stage(
        "classes",
        {"upstream": manifest["stages"]["ingest"]["config"], "n": args.n_classes},
        lambda d: run_classes(ing / "profiles.jsonl", d, n_classes=args.n_classes),
    )
    ok = ok and run_stage(
        "spending",
        {"upstream": manifest["stages"]["classes"]["config"]},
        lambda d: run_spending(ing / "profiles.jsonl", cls_dir / "partition.csv", d),
    )
    if ok and not args.skip_nullmodel:
        ok = run_stage(
            "nullmodel",
            {"upstream": manifest["stages"]["classes"]["config"],
             "swaps": args.swaps_factor, "ensemble": args.ensemble,
             "seed": stage_seed(root_seed, "nullmodel")},
            lambda d: run_nullmodel(ing / "graph.csv", ing / "profiles.jsonl",
                                    cls_dir / "partition.csv", d,
                                    swaps_factor=args.swaps_factor,
                                    ensemble=args.ensemble,
                                    seed=stage_seed(root_seed, "nullmodel")),
        )
    ok = ok and run_stage(
        "catnet",
        {"upstream": manifest["stages"]["classes"]["config"],
         "rho_min": args.rho_min, "support": args.support_min,
         "min_purchases": args.min_purchases, "seed": stage_seed(root_seed, "catnet")},
        lambda d: run_catnet(ing / "profiles.jsonl", cls_dir / "partition.csv", d,
                             rho_min=args.rho_min, support_min=args.support_min,
                             min_purchases=args.min_purchases,
                             seed=stage_seed(root_seed, "catnet")),
    )
    ok = ok and run_stage(
        "dynamics",
        {"upstream": manifest["stages"]["classes"]["config"]},
        lambda d: run_dynamics(ing / "profiles.jsonl", cls_dir / "partition.csv", d),
    )
    _write_manifest(manifest, manifest_path, root_seed)
    return 0 if ok else 1


def _write_manifest(manifest, path, seed):
    manifest["root_seed"] = seed
    with open(path, "w") as f:
        json.dump(manifest, f, indent=1)


def run_report(manifest_path, json_out=None) -> int:
    manifest_path = Path(manifest_path)
    outdir = manifest_path.parent
    manifest = _stage_state(manifest_path)
    stages = manifest.get("stages", {})
    summary: dict = {"stages": {s: {"cached": e.get("cached", False),
                                    "failed": e.get("failed")}
                                for s, e in stages.items()}}
    incomplete = [s for s in STAGES if s not in stages or stages[s].get("failed")]
    lines = ["socioscope pipeline report", "=" * 26]
    if incomplete:
        lines.append(f"PARTIAL: missing/failed stages: {', '.join(incomplete)}")
        summary["partial"] = incomplete

    ineq = outdir / "classes" / "inequality.json"
    if ineq.exists():
        with open(ineq) as f:
            d = json.load(f)
        summary["inequality"] = d
        lines.append(f"Gini: {d['gini']:.4f}   Pareto alpha: {d['pareto_alpha']}")
        lines.append(f"Class sizes: {d['class_sizes']}")
    cat = outdir / "catnet" / "catnet_summary.json"
    if cat.exists():
        with open(cat) as f:
            d = json.load(f)
        summary["catnet"] = d
        lines.append(
            f"Category graph: {d['graph_nodes']} nodes / {d['graph_edges']} edges, "
            f"{d['n_communities']} communities (Q={d['modularity']:.3f})"
        )
        if "recommended_k" in d:
            lines.append(f"Cluster-count recommendations: {d['recommended_k']}")
        if "pearson" in d:
            lines.append(f"Feature Pearson r: {d['pearson']}")
    for name in ("L_k2-17", "L_k1", "Lam_k2-17", "Lam_k1"):
        p = outdir / "nullmodel" / f"{name}.csv"
        if p.exists():
            mat, _ = matio.read_matrix_csv(p)
            diag = np.diag(mat)
            finite = diag[np.isfinite(diag)]
            mean_diag = float(np.mean(finite)) if finite.size else math.nan
            summary.setdefault("null_ratios", {})[name] = {"diag_mean": mean_diag}
            lines.append(f"{name}: mean diagonal ratio {mean_diag:.3f}")

    truth_path = outdir / "synth" / "ground_truth.json"
    if truth_path.exists() and ineq.exists():
        with open(truth_path) as f:
            truth = json.load(f)
        outputs = {"gini": summary.get("inequality", {}).get("gini")}
        part = outdir / "classes" / "partition.csv"
        if part.exists():
            outputs["class"] = {u: j for u, j in
                                ((r["user_id"], int(r["class"]))
                                 for r in _iter_csv(part))}
        lp = outdir / "nullmodel" / "L_k2-17.csv"
        if lp.exists():
            outputs["L"] = matio.read_matrix_csv(lp)[0].tolist()
        verdicts = synth.oracle_report(truth, outputs)
        summary["oracle"] = verdicts
        for v in verdicts:
            lines.append(f"[{'PASS' if v['pass'] else 'FAIL'}] {v['check']}: {v['detail']}")

    text = "\n".join(lines)
    print(text)
    if json_out:
        with open(json_out, "w") as f:
            json.dump(summary, f, indent=1)
    return 0 if not incomplete else 1


def _iter_csv(path):
    import csv as _csv

    with open(path, newline="") as f:
        yield from _csv.DictReader(f)


# ---------------------------------------------------------------------------
# argument parsing

def _parse_krange(text: str) -> range:
    lo, _, hi = text.partition("..")
    return range(int(lo), int(hi) + 1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="socioscope")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker cap (fallback: SOCIOSCOPE_THREADS)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic data with ground truth")
    p.add_argument("--spec", help="JSON file of SynthSpec overrides")
    p.add_argument("--out", required=True)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--edges", type=int, default=3000)
    p.add_argument("--homophily", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="parse inputs, build graph and profiles")
    p.add_argument("--events", required=True)
    p.add_argument("--transactions", required=True)
    p.add_argument("--demographics", required=True)
    p.add_argument("--min-active-months", type=int, default=2)
    p.add_argument("--utc-offset", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classes", help="AMP, inequality, class partition")
    p.add_argument("--input", required=True, help="profiles.jsonl")
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--tail-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("spending", help="class spending measures")
    p.add_argument("--profiles", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--per-capita", action="store_true")
    p.add_argument("--out-matrices", required=True)

    p = sub.add_parser("nullmodel", help="configuration-model ratio matrices")
    p.add_argument("--graph", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--swaps-factor", type=int, default=5)
    p.add_argument("--ensemble", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--subset", choices=["k2-17", "k1", "both"], default="both")
    p.add_argument("--out", required=True)

    p = sub.add_parser("catnet", help="category correlation network")
    p.add_argument("--profiles", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--rho-min", type=float, default=1.5)
    p.add_argument("--support-min", type=int, default=1000)
    p.add_argument("--min-purchases", type=int, default=100)
    p.add_argument("--kmeans", type=_parse_krange, default=range(2, 26),
                   help="k range, e.g. 2..25")
    p.add_argument("--purchasers-only", action="store_true",
                   help="normalize rho by purchaser means instead of all users")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dynamics", help="weekly purchase profiles")
    p.add_argument("--profiles", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--group", choices=["class", "age", "gender", "all"], default="all")
    p.add_argument("--per-pcg", action="store_true", default=True)
    p.add_argument("--spend-weighted", action="store_true",
                   help="weight group means by user spend instead of one vote per user")
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="full pipeline with manifest caching")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--events")
    p.add_argument("--transactions")
    p.add_argument("--demographics")
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--synth-users", type=int, default=1000)
    p.add_argument("--synth-edges", type=int, default=3000)
    p.add_argument("--synth-homophily", type=float, default=0.8)
    p.add_argument("--synth-assimilation", type=float, default=0.8,
                   help="tie-level spending assimilation planted by the generator")
    p.add_argument("--synth-repulsion", type=float, default=0.8,
                   help="tie-level divergence planted on remote-class links")
    p.add_argument("--synth-tx", type=int, default=16,
                   help="transactions per user in the synthetic generator")
    p.add_argument("--synth-alpha", type=float, default=1.5,
                   help="Pareto exponent of the synthetic spending tail; "
                   "larger values flatten the tail and even out class sizes")
    p.add_argument("--n-classes", type=int, default=9)
    p.add_argument("--swaps-factor", type=int, default=5)
    p.add_argument("--ensemble", type=int, default=100)
    p.add_argument("--rho-min", type=float, default=1.5)
    p.add_argument("--support-min", type=int, default=1000)
    p.add_argument("--min-purchases", type=int, default=100)
    p.add_argument("--min-active-months", type=int, default=2)
    p.add_argument("--skip-nullmodel", action="store_true")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="summarize a pipeline run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json-out")
    return ap


def _apply_config_file(args):
    """Flat key=value config file; CLI flags win over file values."""
    if not getattr(args, "config", None):
        return args
    with open(args.config) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if hasattr(args, key):
                cur = getattr(args, key)
                typ = type(cur) if cur is not None else str
                if typ is bool:
                    setattr(args, key, val.strip().lower() in ("1", "true", "yes"))
                else:
                    setattr(args, key, typ(val.strip()))
    return args


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "synth":
        overrides = {}
        if args.spec:
            with open(args.spec) as f:
                overrides = json.load(f)
        spec = synth.SynthSpec(
            n_users=overrides.get("n_users", args.users),
            n_edges=overrides.get("n_edges", args.edges),
            homophily_strength=overrides.get("homophily_strength", args.homophily),
            seed=overrides.get("seed", args.seed),
            **{k: v for k, v in overrides.items()
               if k not in ("n_users", "n_edges", "homophily_strength", "seed")},
        )
        synth.generate(spec, args.out)
        return 0
    if args.command == "ingest":
        run_ingest(args.events, args.transactions, args.demographics, Path(args.out),
                   args.min_active_months, args.utc_offset)
        return 0
    if args.command == "classes":
        run_classes(args.input, Path(args.out), args.n, args.tail_fraction)
        return 0
    if args.command == "spending":
        run_spending(args.profiles, args.partition, Path(args.out_matrices),
                     per_capita=args.per_capita)
        return 0
    if args.command == "nullmodel":
        subsets = ("k2-17", "k1") if args.subset == "both" else (args.subset,)
        run_nullmodel(args.graph, args.profiles, args.partition, Path(args.out),
                      args.swaps_factor, args.ensemble, args.seed, subsets)
        return 0
    if args.command == "catnet":
        run_catnet(args.profiles, args.partition, Path(args.out), args.rho_min,
                   args.support_min, args.min_purchases, args.kmeans,
                   seed=args.seed, standardize=not args.no_standardize,
                   purchasers_only=args.purchasers_only)
        return 0
    if args.command == "dynamics":
        run_dynamics(args.profiles, args.partition, Path(args.out), per_pcg=args.per_pcg,
                     spend_weighted=args.spend_weighted)
        return 0
    if args.command == "run":
        return run_pipeline(_apply_config_file(args))
    if args.command == "report":
        return run_report(args.manifest, args.json_out)
    return 2


if __name__ == "__main__":
    sys.exit(main())
