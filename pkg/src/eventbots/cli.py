"""Command-line entry point: ``eventbots <subcommand> [options]``.

Every subcommand writes its tables (tab-separated, with a header row) under
the output directory together with ``manifest-<subcommand>.json``, which
records inputs with their SHA-256, seed, versions and timings. Only the
manifest carries wall-clock data, so reruns with identical flags produce
byte-identical tables.

Exit codes: 0 success, 1 validation error (bad flags, missing or invalid
input), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from . import classifier as clf
from . import content, diffusion, provenance, simulator
from .corpus import (
    BOT,
    NONBOT,
    UNLABELED,
    CorpusError,
    EventSpec,
    TweetRecord,
    aggregate_annotations,
    corpus_stats,
    dump_corpus,
    latest_snapshots,
    load_annotations,
    load_corpus,
    load_event_spec,
    load_labels,
    save_labels,
    tweets_by_author,
)
from .features import COLUMNS, F1, F2, DesignMatrix, build_design_matrix, extract_features

log = logging.getLogger("eventbots")

OUT_ENV = "EVENTBOTS_OUT"
DEFAULT_OUT = "eventbots-out"


class UsageError(Exception):
    """Invalid flags or inputs; maps to exit code 1."""


VALIDATION_ERRORS = (
    UsageError,
    CorpusError,
    diffusion.GraphError,
    simulator.SimulationConfigError,
    clf.TrainingError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class Run:
    """Output directory, manifest bookkeeping and table writers for one command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        self.inputs: dict[str, dict] = {}
        self.outputs: list[str] = []
        self.started = time.time()

    def input(self, name: str, path: str | None, required: bool = True) -> Path | None:
        if path is None:
            if required:
                raise UsageError(f"--{name.replace('_', '-')} is required")
            return None
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"{name} file not found: {path}")
        self.inputs[name] = {"path": str(p), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
        return p

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        if name not in self.outputs:
            self.outputs.append(name)
        return self.out / name

    def table(self, name: str, header: Sequence[str], rows) -> Path:
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        return p

    def text(self, name: str, body: str) -> Path:
        p = self.path(name)
        p.write_text(body, encoding="utf-8")
        return p

    def manifest(self) -> None:
        seed = getattr(self.args, "seed", None)
        doc = {
            "subcommand": self.args.command,
            "argv": self.args.argv,
            "inputs": self.inputs,
            "seed": seed,
            "outputs": self.outputs,
            "versions": {"eventbots": __version__, "python": platform.python_version()},
            "timings": {
                "started_utc": datetime.fromtimestamp(self.started, tz=timezone.utc).isoformat(),
                "elapsed_s": round(time.time() - self.started, 4),
            },
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / f"manifest-{self.args.command}.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(x: float | None, digits: int = 6) -> str:
    return "" if x is None else f"{x:.{digits}f}"


# --- shared loaders --------------------------------------------------------------

def _event(run: Run, required: bool = False) -> EventSpec | None:
    p = run.input("event", run.args.event, required)
    return load_event_spec(p) if p else None


def _records(run: Run, spec: EventSpec | None) -> list[TweetRecord]:
    if not run.args.corpus:
        raise UsageError("--corpus is required")
    paths = [run.input(f"corpus{i or ''}", c) for i, c in enumerate(run.args.corpus)]
    result = load_corpus(paths, spec, strict=getattr(run.args, "strict", False))
    if result.errors:
        log.warning("%d malformed record(s) skipped", len(result.errors))
    return result.records


def _labels(run: Run, required: bool = True) -> dict[str, str]:
    p = run.input("labels", run.args.labels, required)
    return load_labels(p) if p else {}


def _matrix(run: Run) -> DesignMatrix:
    a = run.args
    if a.matrix:
        m = DesignMatrix.read_csv(run.input("matrix", a.matrix))
        want = COLUMNS[a.features]
        if m.columns != want:
            if m.columns[: len(want)] != want:
                raise UsageError(f"matrix columns do not match feature set {a.features}")
            k = len(want)
            m = DesignMatrix(want, m.user_ids, [r[:k] for r in m.rows], m.labels, m.skipped)
        return m
    spec = _event(run, required=True)
    return build_design_matrix(_labels(run), _records(run, spec), spec, a.features, _automation(run))


def _automation(run: Run):
    table = _category_table(run)
    return table.sources_in(provenance.AUTOMATION)


def _category_table(run: Run) -> provenance.SourceCategoryTable:
    p = run.input("table", getattr(run.args, "table", None), required=False)
    return provenance.SourceCategoryTable.load(p) if p else provenance.SourceCategoryTable.default()


def _resolver(run: Run):
    a = run.args
    if getattr(a, "remote_resolver", False):
        return content.HttpResolver()
    p = run.input("resolver", getattr(a, "resolver", None), required=False)
    return content.OfflineResolver.load(p) if p else content.OfflineResolver({})


def _shorteners(run: Run):
    p = run.input("shorteners", getattr(run.args, "shorteners", None), required=False)
    if not p:
        return None
    return {ln.strip().casefold() for ln in p.read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")}


def _bots_from(run: Run, labels: dict[str, str]) -> set[str]:
    p = run.input("bots", getattr(run.args, "bots", None), required=False)
    if p:
        return diffusion.read_id_set(p)
    return {u for u, l in labels.items() if l == BOT}


# --- subcommands -----------------------------------------------------------------

def cmd_ingest(run: Run) -> None:
    spec = _event(run)
    paths = [run.input(f"corpus{i or ''}", c) for i, c in enumerate(run.args.corpus or [])]
    if not paths:
        raise UsageError("--corpus is required")
    result = load_corpus(paths, spec, strict=run.args.strict)
    dump_corpus(result.records, run.path("corpus.jsonl"))
    run.table("ingest_errors.tsv", ["line", "message"], [[e.line_no, str(e)] for e in result.errors])
    run.table("ingest_summary.tsv", ["metric", "value"], [
        ["records", len(result.records)],
        ["malformed", len(result.errors)],
        ["duplicates_dropped", result.duplicates_dropped],
        ["filtered_out", result.filtered_out],
        ["date_warnings", len(result.warnings)],
    ])


def cmd_stats(run: Run) -> None:
    stats = corpus_stats(_records(run, _event(run)))
    run.table("stats.tsv", ["metric", "value"], list(stats.items()))


def cmd_annotate(run: Run) -> None:
    labels = aggregate_annotations(load_annotations(run.input("annotations", run.args.annotations)))
    save_labels(labels, run.path("labels.csv"))
    counts = {c: 0 for c in (BOT, NONBOT, UNLABELED)}
    for a in labels:
        counts[a.label] += 1
    run.table("label_counts.tsv", ["label", "accounts"], list(counts.items()))


def cmd_features(run: Run) -> None:
    m = _matrix(run)
    m.write_csv(run.path("design_matrix.csv"))
    run.text("skipped_accounts.txt", "".join(f"{u}\n" for u in m.skipped))


def _params(a) -> clf.TrainParams:
    return clf.TrainParams(max_depth=a.max_depth, min_leaf=a.min_leaf, seed=a.seed)


def cmd_train(run: Run) -> None:
    m = _matrix(run)
    tree = clf.train(m.rows, m.labels, _params(run.args), m.columns)
    tree.save(run.path("tree.txt"))


def _report_rows(rep: clf.EvalReport):
    return [[k, repr(v)] for k, v in rep.as_dict().items()]


def cmd_crossval(run: Run) -> None:
    a = run.args
    if a.seed is None:
        raise UsageError("--seed is required for cross-validation")
    m = _matrix(run)
    preds = clf.cross_validate_predictions(m.rows, m.labels, a.k, a.seed, _params(a))
    rep = clf.evaluate(preds)
    run.text("eval_report.txt", rep.to_lines())
    run.table("eval_report.tsv", ["metric", "value"], _report_rows(rep))
    run.table("predictions.tsv", ["user_id", "true_label", "predicted", "bot_score", "fold"],
              [[m.user_ids[p.row], p.true_label, p.predicted, repr(p.bot_score), p.fold] for p in preds])


def cmd_rank_features(run: Run) -> None:
    m = _matrix(run)
    ranking = clf.rank_features_by_gain(m.rows, m.labels)
    run.table("feature_ranking.tsv", ["rank", "feature", "info_gain"],
              [[i + 1, m.columns[f], repr(g)] for i, (f, g) in enumerate(ranking)])


def cmd_classify(run: Run) -> None:
    tree = clf.DecisionTree.load(run.input("tree", run.args.tree))
    spec = _event(run, required=True)
    records = _records(run, spec)
    fs = F2 if tree.n_features == len(COLUMNS[F2]) else F1
    if tree.n_features != len(COLUMNS[fs]):
        raise UsageError(f"tree expects {tree.n_features} features; no feature set matches")
    snaps = latest_snapshots(records)
    auto = _automation(run)
    rows = []
    for uid, tweets in sorted(tweets_by_author(records).items()):
        x = extract_features(snaps[uid], tweets, spec, auto).values(fs)
        cls, prob = tree.predict(x)
        rows.append([uid, cls, repr(prob), repr(tree.bot_probability(x))])
    run.table("classifications.tsv", ["user_id", "predicted", "probability", "bot_probability"], rows)


def cmd_sources(run: Run) -> None:
    a = run.args
    records = _records(run, _event(run))
    labels = _labels(run)
    authors = {u for u, l in labels.items() if l == a.label_class}
    tallies = provenance.top_sources(records, a.top_k, authors=authors, snapshots=latest_snapshots(records))
    run.table("top_sources.tsv", ["rank", "handle", "count", "verified"],
              [[i + 1, t.mentioned_handle, t.count, "" if t.verified is None else str(t.verified).lower()]
               for i, t in enumerate(tallies)])


def _snapshots_with_accounts(run: Run, records):
    snaps = dict(latest_snapshots(records))
    p = run.input("accounts", getattr(run.args, "accounts", None), required=False)
    if p:
        from .corpus import _snapshot_from

        with open(p, encoding="utf-8") as fh:
            for ln in fh:
                if ln.strip():
                    s = _snapshot_from(json.loads(ln))
                    snaps.setdefault(s.user_id, s)
    return snaps


def cmd_verified(run: Run) -> None:
    a = run.args
    records = _records(run, _event(run))
    labels = _labels(run)
    authors = {u for u, l in labels.items() if l == a.label_class}
    tallies = provenance.tally_mentions([r for r in records if r.author_id in authors])
    vr = provenance.verified_ratio(tallies, _snapshots_with_accounts(run, records))
    run.table("verified.tsv", ["verified_count", "total_count", "ratio", "unresolved_count"],
              [[vr.verified_count, vr.total_count, _fmt(vr.ratio), len(vr.unresolved)]])
    run.text("unresolved_handles.txt", "".join(f"{h}\n" for h in vr.unresolved))


def cmd_source_categories(run: Run) -> None:
    a = run.args
    records = _records(run, _event(run))
    labels = _labels(run)
    bd = provenance.categorize_sources(records, labels, _category_table(run))
    bots, humans = bd.ranking(BOT, a.top_k), bd.ranking(NONBOT, a.top_k)
    rows = []
    for i in range(max(len(bots), len(humans))):
        b = bots[i] if i < len(bots) else ("", "")
        h = humans[i] if i < len(humans) else ("", "")
        rows.append([i + 1, b[0], b[1], h[0], h[1]])
    run.table("source_ranking.tsv", ["rank", "bot_source", "bot_count", "nonbot_source", "nonbot_count"], rows)
    cats = []
    for label in (BOT, NONBOT, UNLABELED):
        for cat in (provenance.AUTOMATION, provenance.INTERACTIVE, provenance.OTHER):
            n = bd.by_category.get(label, {}).get(cat, 0)
            cats.append([label, cat, n, _fmt(n / bd.total(label) if bd.total(label) else 0.0)])
    run.table("source_categories.tsv", ["class", "category", "tweets", "share"], cats)


def cmd_brokerage(run: Run) -> None:
    edges = diffusion.FollowEdgeSet.load(run.input("edges", run.args.edges))
    bots = diffusion.read_id_set(run.input("bots", run.args.bots))
    if not bots:
        raise diffusion.GraphError("bot list is empty")
    fp = run.input("friends", run.args.friends, required=False)
    friends = diffusion.read_id_set(fp) if fp else diffusion.friends_of(bots, edges)
    res = diffusion.brokerage_reach(bots, friends, edges)
    run.table("brokerage.tsv", ["bots", "bot_friends", "bot_followers", "exclusive_followers", "exclusive_fraction"],
              [[len(bots), len(friends), res.bot_follower_count, res.exclusive_follower_count,
                _fmt(res.exclusive_fraction)]])


def cmd_degree(run: Run) -> None:
    a = run.args
    edges = diffusion.FollowEdgeSet.load(run.input("edges", a.edges))
    nodes = None
    np_ = run.input("nodes", a.nodes, required=False)
    if np_:
        nodes = diffusion.read_id_set(np_)
    elif a.sample_followers is not None:
        bots = diffusion.read_id_set(run.input("bots", a.bots))
        if a.seed is None:
            raise UsageError("--seed is required when sampling followers")
        nodes = diffusion.sample_followers(bots, edges, a.sample_followers, a.seed)
    ds = diffusion.degree_stats(edges, nodes)
    run.table("degree.tsv", ["node_count", "edge_count", "average_degree", "undirected_average_degree"],
              [[ds.node_count, ds.edge_count, _fmt(ds.average_degree), _fmt(ds.undirected_average_degree)]])


def _rumor_rows(records, labels, rumors, spec):
    rows = []
    for rz in rumors:
        res = content.rumor_pickup(records, labels, rz, spec)
        for label in (BOT, NONBOT, UNLABELED):
            cp = res.get(label)
            if cp is None:
                rows.append([rz.name, label, 0, "", "", 0])
            else:
                rows.append([rz.name, label, cp.count_distinct_users,
                             "" if cp.first_pickup_time is None else cp.first_pickup_time,
                             "" if cp.latency_s is None else cp.latency_s, cp.pre_origin_matches])
    return rows


RUMOR_HEADER = ["rumor", "class", "distinct_users", "first_pickup_time", "latency_s", "pre_origin_matches"]


def cmd_rumors(run: Run) -> None:
    spec = _event(run)
    records = _records(run, spec)
    rumors = content.load_rumors(run.input("rumors", run.args.rumors))
    run.table("rumors.tsv", RUMOR_HEADER, _rumor_rows(records, _labels(run), rumors, spec))


def _url_tables(run: Run, records, labels, k):
    urls = content.expand_urls(content.url_records(records), _resolver(run), _shorteners(run),
                               max_in_flight=run.args.max_in_flight)
    rows = []
    for label in (BOT, NONBOT):
        for expanded in (False, True):
            for i, (host, n) in enumerate(content.hostname_rank(urls, labels, label, k, expanded=expanded)):
                rows.append([label, "expanded" if expanded else "raw", i + 1, host, n])
    return urls, rows


URL_HEADER = ["class", "view", "rank", "hostname", "count"]


def cmd_urls(run: Run) -> None:
    records = _records(run, _event(run))
    urls, rows = _url_tables(run, records, _labels(run), run.args.top_k)
    run.table("url_hosts.tsv", URL_HEADER, rows)
    run.table("unresolved_urls.tsv", ["raw_url"], sorted({(u.raw_url,) for u in urls if u.unresolved}))


def _screen_rows(rep: content.ScreenReport):
    return [[label, rep.totals[label], rep.flagged[label], _fmt(rep.fraction(label)),
             rep.distinct_totals[label], rep.distinct_flagged[label]] for label in (BOT, NONBOT, UNLABELED)]


SCREEN_HEADER = ["class", "urls", "flagged", "flagged_fraction", "distinct_urls", "distinct_flagged"]


def cmd_screen(run: Run) -> None:
    records = _records(run, _event(run))
    labels = _labels(run)
    blocklist = content.OfflineBlocklist.load(run.input("blocklist", run.args.blocklist))
    urls = content.expand_urls(content.url_records(records), _resolver(run), _shorteners(run),
                               max_in_flight=run.args.max_in_flight)
    rep = content.blocklist_screen(urls, labels, blocklist)
    run.table("screen.tsv", SCREEN_HEADER, _screen_rows(rep))


def _sim_config(run: Run) -> simulator.SimConfig:
    a = run.args
    raw = {}
    p = run.input("config", a.config, required=False)
    if p:
        raw = json.loads(p.read_text(encoding="utf-8"))
    if a.seed is not None:
        raw["seed"] = a.seed
    if "seed" not in raw:
        raise UsageError("a seed is required (--seed or config)")
    if a.bots_per_archetype is not None:
        raw["n_bots"] = {k: a.bots_per_archetype for k in simulator.ARCHETYPES}
    if a.humans is not None:
        raw["n_humans"] = a.humans
    if a.days is not None:
        start = simulator.SimConfig.window_start if "window_start" not in raw else raw["window_start"]
        from .corpus import parse_time

        raw["window_start"] = parse_time(start)
        raw["window_end"] = raw["window_start"] + int(a.days * simulator.DAY)
    for key in ("temporal", "source_profile"):
        if getattr(a, key) is not None:
            raw[key] = getattr(a, key)
    if a.rumors and "rumors" not in raw:
        raw["rumors"] = [dict(r.__dict__, carried_by=list(r.carried_by)) for r in simulator.boston_rumors()]
    return simulator.config_from_dict(raw)


def cmd_simulate(run: Run) -> None:
    result = simulator.simulate(_sim_config(run))
    paths = simulator.write_simulation(result, run.out)
    for p in paths.values():
        run.outputs.append(p.name)


def cmd_audit(run: Run) -> None:
    records = _records(run, _event(run))
    violations = simulator.audit_rate_limits(records)
    run.table("violations.tsv", ["rule", "account_id", "start_time", "count", "detail"],
              [[v.rule, v.account_id or "", v.start_time, v.count, v.detail] for v in violations])
    print(f"{len(violations)} violation(s)")


def _sim_input(run: Run, flag: str, default_name: str, required: bool = True) -> Path | None:
    value = getattr(run.args, flag)
    if value is None and run.args.sim_dir:
        cand = Path(run.args.sim_dir) / default_name
        if cand.is_file() or required:
            value = str(cand)
    return run.input(flag, value, required)


def cmd_report(run: Run) -> None:
    """One markdown document holding every analysis table."""
    a = run.args
    spec = load_event_spec(_sim_input(run, "event", "event.json"))
    corpus_path = _sim_input(run, "corpus_file", "corpus.jsonl")
    records = load_corpus(corpus_path, spec).records
    labels = load_labels(_sim_input(run, "labels", "labels.csv"))
    edges = diffusion.FollowEdgeSet.load(_sim_input(run, "edges", "edges.csv"))
    rumors_p = _sim_input(run, "rumors", "rumors.json", required=False)
    resolver_p = _sim_input(run, "resolver", "resolver.tsv", required=False)
    blocklist_p = _sim_input(run, "blocklist", "blocklist.txt", required=False)
    k = a.top_k
    snaps = latest_snapshots(records)
    bots = {u for u, l in labels.items() if l == BOT}
    out: list[str] = [f"# Event report: {spec.name}", ""]

    def table(title, header, rows):
        out.append(f"## {title}")
        out.append("")
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))
        for r in rows:
            out.append("| " + " | ".join(str(c) for c in r) + " |")
        out.append("")

    table("Corpus", ["metric", "value"], list(corpus_stats(records).items()))
    tallies = provenance.top_sources(records, k, authors=bots, snapshots=snaps)
    table("Top sources cited by bots", ["rank", "handle", "count", "verified"],
          [[i + 1, t.mentioned_handle, t.count, "" if t.verified is None else str(t.verified).lower()]
           for i, t in enumerate(tallies)])
    vr = provenance.verified_ratio(provenance.tally_mentions([r for r in records if r.author_id in bots]), snaps)
    table("Verified share of sources", ["verified", "distinct_handles", "ratio", "unresolved"],
          [[vr.verified_count, vr.total_count, _fmt(vr.ratio, 4), len(vr.unresolved)]])
    table("Profile description words (bots)", ["rank", "word", "count"],
          [[i + 1, w, n] for i, (w, n) in enumerate(
              provenance.description_word_frequency([snaps[u] for u in sorted(bots) if u in snaps])[:k])])

    bd = provenance.categorize_sources(records, labels, provenance.SourceCategoryTable.default())
    b_rank, h_rank = bd.ranking(BOT, k), bd.ranking(NONBOT, k)
    table("Tweet sources", ["rank", "bot_source", "bot_count", "nonbot_source", "nonbot_count"],
          [[i + 1, *(b_rank[i] if i < len(b_rank) else ("", "")), *(h_rank[i] if i < len(h_rank) else ("", ""))]
           for i in range(max(len(b_rank), len(h_rank)))])
    table("Source categories", ["class", "automation_platform", "interactive_client", "other"],
          [[label, *(_fmt(bd.by_category.get(label, {}).get(c, 0) / bd.total(label), 4) if bd.total(label) else _fmt(0.0, 4)
                     for c in (provenance.AUTOMATION, provenance.INTERACTIVE, provenance.OTHER))]
           for label in (BOT, NONBOT)])

    resolver = content.OfflineResolver.load(resolver_p) if resolver_p else content.OfflineResolver({})
    urls = content.expand_urls(content.url_records(records), resolver, max_in_flight=1)
    url_rows = []
    for label in (BOT, NONBOT):
        for expanded in (False, True):
            for i, (host, n) in enumerate(content.hostname_rank(urls, labels, label, k, expanded=expanded)):
                url_rows.append([label, "expanded" if expanded else "raw", i + 1, host, n])
    table("URL hostnames", URL_HEADER, url_rows)
    if blocklist_p:
        rep = content.blocklist_screen(urls, labels, content.OfflineBlocklist.load(blocklist_p))
        table("Blocklist screening", SCREEN_HEADER, _screen_rows(rep))

    if bots:
        friends = diffusion.friends_of(bots, edges)
        br = diffusion.brokerage_reach(bots, friends, edges)
        table("Brokerage", ["bots", "bot_friends", "bot_followers", "exclusive_followers", "exclusive_fraction"],
              [[len(bots), len(friends), br.bot_follower_count, br.exclusive_follower_count,
                _fmt(br.exclusive_fraction, 4)]])
        sample = diffusion.sample_followers(bots, edges, a.sample_followers, a.seed)
        ds = diffusion.degree_stats(edges, sample)
        table("Follower-graph degree (sampled followers plus bots)",
              ["node_count", "edge_count", "average_degree", "undirected_average_degree"],
              [[ds.node_count, ds.edge_count, _fmt(ds.average_degree, 5), _fmt(ds.undirected_average_degree, 5)]])

    if rumors_p:
        table("Rumor pickup", RUMOR_HEADER, _rumor_rows(records, labels, content.load_rumors(rumors_p), spec))

    cv_rows = []
    rank_rows = []
    for fs in (F1, F2):
        m = build_design_matrix(labels, records, spec, fs)
        rep = clf.cross_validate(m.rows, m.labels, a.k, a.seed)
        cv_rows.append([fs, *(_fmt(v, 4) for k_, v in rep.as_dict().items() if k_ != "n"), rep.n])
        if fs == F1:
            rank_rows = [[i + 1, m.columns[f], _fmt(g, 4)]
                         for i, (f, g) in enumerate(clf.rank_features_by_gain(m.rows, m.labels))]
    table(f"Classification ({a.k}-fold cross-validation, weighted averages)",
          ["features", "accuracy", "tp_rate", "fp_rate", "precision", "recall", "f_measure", "roc_auc", "n"],
          cv_rows)
    table("Feature ranking by information gain (F1)", ["rank", "feature", "info_gain"], rank_rows)
    violations = simulator.audit_rate_limits(records)
    table("Posting-rule audit", ["rule", "violations"],
          [[rule, sum(1 for v in violations if v.rule == rule)]
           for rule in ("daily_cap", "semi_hour_cap", "duplicate_content")])
    run.text("report.md", "\n".join(out))


# --- parser ----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, corpus=True, event=True, labels=False, seed=False):
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    if corpus:
        p.add_argument("--corpus", action="append", help="line-delimited corpus file (repeatable)")
        p.add_argument("--strict", action="store_true", help="fail on the first malformed record")
    if event:
        p.add_argument("--event", help="event spec JSON")
    if labels:
        p.add_argument("--labels", help="user_id,label file")
    if seed:
        p.add_argument("--seed", type=int)


def _model_flags(p: argparse.ArgumentParser, k: bool = False):
    p.add_argument("--matrix", help="design matrix CSV instead of corpus/labels")
    p.add_argument("--features", choices=(F1, F2), default=F1)
    p.add_argument("--table", help="source category table")
    p.add_argument("--max-depth", type=int, default=clf.TrainParams.max_depth)
    p.add_argument("--min-leaf", type=int, default=clf.TrainParams.min_leaf)
    if k:
        p.add_argument("--k", type=int, default=10)


def _url_flags(p: argparse.ArgumentParser):
    p.add_argument("--resolver", help="offline short_url<TAB>expanded_url table")
    p.add_argument("--shorteners", help="shortener host list (one per line)")
    p.add_argument("--remote-resolver", action="store_true", help="follow redirects over the network")
    p.add_argument("--max-in-flight", type=int, default=8)


COMMANDS: dict[str, Callable[[Run], None]] = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "annotate": cmd_annotate,
    "features": cmd_features,
    "train": cmd_train,
    "crossval": cmd_crossval,
    "rank-features": cmd_rank_features,
    "classify": cmd_classify,
    "sources": cmd_sources,
    "verified": cmd_verified,
    "source-categories": cmd_source_categories,
    "brokerage": cmd_brokerage,
    "degree": cmd_degree,
    "rumors": cmd_rumors,
    "urls": cmd_urls,
    "screen": cmd_screen,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eventbots", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _common(sub.add_parser("ingest", help="filter, validate and normalize a corpus"))
    _common(sub.add_parser("stats", help="corpus counts"))
    p = sub.add_parser("annotate", help="unanimous-vote labels from annotations")
    _common(p, corpus=False, event=False)
    p.add_argument("--annotations", required=True)

    for name, helptext, k in (("features", "design matrix", False), ("train", "fit a decision tree", False),
                              ("crossval", "stratified k-fold evaluation", True),
                              ("rank-features", "features by information gain", False)):
        p = sub.add_parser(name, help=helptext)
        _common(p, labels=True, seed=name in ("train", "crossval"))
        _model_flags(p, k)
    p = sub.add_parser("classify", help="label every author with a saved tree")
    _common(p)
    p.add_argument("--tree", required=True)
    p.add_argument("--table")

    for name, helptext in (("sources", "most-cited handles"), ("verified", "verified share of cited handles")):
        p = sub.add_parser(name, help=helptext)
        _common(p, labels=True)
        p.add_argument("--class", dest="label_class", choices=(BOT, NONBOT), default=BOT)
        if name == "sources":
            p.add_argument("--top-k", type=int, default=15)
        else:
            p.add_argument("--accounts", help="extra account snapshots (line-delimited JSON)")
    p = sub.add_parser("source-categories", help="client sources per class and category")
    _common(p, labels=True)
    p.add_argument("--table")
    p.add_argument("--top-k", type=int, default=10)

    p = sub.add_parser("brokerage", help="exclusive reach of bots over their friends")
    _common(p, corpus=False, event=False)
    p.add_argument("--edges", required=True)
    p.add_argument("--bots", required=True, help="bot ids, one per line")
    p.add_argument("--friends", help="bot friend ids; default: everyone the bots follow")
    p = sub.add_parser("degree", help="average degree of the follower graph")
    _common(p, corpus=False, event=False, seed=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--nodes", help="restrict to these ids")
    p.add_argument("--bots", help="bot ids (for --sample-followers)")
    p.add_argument("--sample-followers", type=int)

    p = sub.add_parser("rumors", help="rumor pickup per class")
    _common(p, labels=True)
    p.add_argument("--rumors", required=True)
    p = sub.add_parser("urls", help="hostname rankings with shortener expansion")
    _common(p, labels=True)
    _url_flags(p)
    p.add_argument("--top-k", type=int, default=10)
    p = sub.add_parser("screen", help="blocklist screening of posted URLs")
    _common(p, labels=True)
    _url_flags(p)
    p.add_argument("--blocklist", required=True)

    p = sub.add_parser("simulate", help="generate a labelled synthetic corpus")
    _common(p, corpus=False, event=False, seed=True)
    p.add_argument("--config", help="JSON simulator config")
    p.add_argument("--bots-per-archetype", type=int)
    p.add_argument("--humans", type=int)
    p.add_argument("--days", type=float)
    p.add_argument("--temporal", choices=("baseline", "event"))
    p.add_argument("--source-profile", choices=tuple(simulator.SOURCE_PROFILES))
    p.add_argument("--rumors", action="store_true", help="inject the three Boston rumor cases")
    p = sub.add_parser("audit", help="check posting-rule compliance")
    _common(p)

    p = sub.add_parser("report", help="every analysis table in one markdown document")
    _common(p, corpus=False, event=True, labels=True, seed=True)
    p.add_argument("--sim-dir", help="directory written by `simulate`")
    p.add_argument("--corpus", dest="corpus_file")
    p.add_argument("--edges")
    p.add_argument("--rumors")
    p.add_argument("--resolver")
    p.add_argument("--blocklist")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--sample-followers", type=int, default=20000)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "report" and args.seed is None:
        print("eventbots report: error: --seed is required", file=sys.stderr)
        return 1
    r = Run(args)
    try:
        COMMANDS[args.command](r)
    except VALIDATION_ERRORS as exc:
        print(f"eventbots {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"eventbots {args.command}: failed: {exc}", file=sys.stderr)
        return 2
    r.manifest()
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
