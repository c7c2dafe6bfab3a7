"""Command-line interface.

One subcommand per pipeline stage; see README for a worked end-to-end run.
Experiment subcommands write a TSV of results and render the matching figure
next to it.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import baselines, experiments, global_rank, plots
from .coldstart import predict_cold_pair
from .features import ReferenceCorpus, compute_cache, load_cache, save_cache
from .ingest import load_dataset, load_dataset_from_dumps, save_dataset
from .model import (
    ColdStartRequired,
    TrainConfig,
    load_model,
    make_training_set,
    predict_pair,
    save_model,
    train,
)
from .network import build_network, load_network, save_network
from .service import PredictionService, restore_snapshot, serve_forever
from .synthetic import make_benchmark

log = logging.getLogger(__name__)


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(",")
        return int(a), int(b)
    except ValueError:
        raise SystemExit(f"--pair must be 'id1,id2', got {text!r}")


def _times(ds) -> dict[int, float]:
    return {qid: q.created_at for qid, q in ds.questions.items()}


def _load_pipeline(args, need_dataset=True):
    """Dataset, network and cache from CLI flags, recomputing what is absent."""
    ds = load_dataset(args.dataset) if need_dataset else None
    if getattr(args, "network", None):
        net = load_network(args.network)
    else:
        delta_t = getattr(args, "delta_t", None) or 1
        log.info("no --network given; rebuilding from the dataset (delta_t=%d)", delta_t)
        net = build_network(ds, delta_t=delta_t)
    if getattr(args, "cache", None):
        cache = load_cache(args.cache)
    else:
        corpus = ReferenceCorpus.from_file(args.corpus) if getattr(args, "corpus", None) else None
        log.info("no --cache given; computing node scores")
        cache = compute_cache(net, ds, corpus)
    return ds, net, cache


def cmd_ingest(args) -> int:
    tags = [t for chunk in args.tags for t in chunk.split(",") if t]
    ds = load_dataset_from_dumps(
        args.posts, args.users, tags,
        bucket_width_weeks=args.bucket_weeks, strict=args.strict,
    )
    save_dataset(ds, args.out)
    print(f"{len(ds.questions)} questions, {len(ds.answers)} answers, "
          f"{len(ds.users)} users -> {args.out}")
    if ds.stats.skipped_rows or ds.stats.dropped_answers:
        print(f"skipped {ds.stats.skipped_rows} malformed rows, "
              f"dropped {ds.stats.dropped_answers} dangling answers")
    return 0


def cmd_build_graph(args) -> int:
    ds = load_dataset(args.dataset)
    net = build_network(ds, delta_t=args.delta_t)
    save_network(net, args.out)
    from .network import type_counts
    counts = {t.name: n for t, n in type_counts(net).items() if n}
    print(f"{len(net.nodes)} nodes, {net.n_edges} edges {counts} -> {args.out}")
    return 0


def cmd_features(args) -> int:
    ds = load_dataset(args.dataset)
    net = load_network(args.network)
    corpus = ReferenceCorpus.from_file(args.corpus) if args.corpus else None
    cache = compute_cache(net, ds, corpus)
    save_cache(cache, args.out)
    print(f"node scores for {len(cache.lf_rank)} questions -> {args.out}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset) if args.dataset else None
    net = load_network(args.network)
    cache = load_cache(args.cache)
    config = TrainConfig(seed=args.seed, epochs=args.epochs,
                         l2=args.l2, learning_rate=args.learning_rate)
    model = train(make_training_set(net, cache), config)
    save_model(model, args.out)
    print(f"trained on {net.n_edges} edges (2x entries) -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.dataset) if args.dataset else None
    cache = load_cache(args.cache)
    a, b = _parse_pair(args.pair)
    times = _times(ds) if ds else None
    try:
        verdict = predict_pair(model, cache, a, b, times)
    except ColdStartRequired as exc:
        print(f"question {exc.question_id} has no features; "
              f"use coldstart-predict", file=sys.stderr)
        return 2
    print(json.dumps({"harder": verdict.harder, "confidence": verdict.confidence,
                      "margin": verdict.margin}))
    return 0


def cmd_baseline(args) -> int:
    ds = load_dataset(args.dataset) if args.dataset else None
    if args.method == "pagerank":
        if ds is None:
            raise SystemExit("--method pagerank needs --dataset (acceptance graph)")
        edges = baselines.build_acceptance_graph(ds)
        table = baselines.pagerank_scores(sorted(ds.questions), sorted(edges))
    elif args.method == "hits":
        if not args.network:
            raise SystemExit("--method hits needs --network")
        net = load_network(args.network)
        table = baselines.hits_on_network(net)
    elif args.method == "elo":
        if ds is None:
            raise SystemExit("--method elo needs --dataset (competition extraction)")
        table = baselines.elo_question_scores(ds)
    elif args.method == "rcm":
        if not args.network:
            raise SystemExit("--method rcm needs --network")
        net = load_network(args.network)
        texts = baselines.question_term_sets(ds) if ds else None
        result = baselines.rcm_train(
            sorted(net.edges), texts, k_neighbors=args.rcm_neighbors,
            delta=args.rcm_delta, gamma=args.rcm_gamma, iters=args.rcm_iters,
        )
        scores = {n: result.theta.get(n, 0.0) for n in net.nodes}
        table = baselines.ScoreTable(scores=scores, source="RCM")
    else:
        raise SystemExit(f"unknown method {args.method}")
    with open(args.out, "w", encoding="utf-8") as fh:
        for qid in sorted(table.scores):
            fh.write(f"{qid}\t{table.scores[qid]!r}\n")
    print(f"{table.source} scores for {len(table.scores)} questions -> {args.out}")
    return 0


def cmd_coldstart_predict(args) -> int:
    model = load_model(args.model)
    args.network = getattr(args, "network", None)
    args.cache = getattr(args, "cache", None)
    ds, net, cache = _load_pipeline(args)
    a, b = _parse_pair(args.pair)
    verdict = predict_cold_pair(model, cache, a, b, args.k,
                                net=net, ds=ds, times=_times(ds))
    print(json.dumps({"harder": verdict.harder, "confidence": verdict.confidence}))
    return 0


def cmd_global_rank(args) -> int:
    model = load_model(args.model)
    ds, net, cache = _load_pipeline(args)
    times = _times(ds)
    predictor = lambda a, b: predict_pair(model, cache, a, b, times)
    nodes = sorted(net.nodes)
    tournament = global_rank.sample_tournament(predictor, nodes, args.samples, args.seed)
    table = global_rank.global_scores(nodes, tournament)
    if args.levels_train:
        labeled = []
        with open(args.levels_train, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    qid, level = line.split()
                    labeled.append((int(qid), level))
        result = global_rank.threshold_levels(table.scores, labeled)
        with open(args.out, "w", encoding="utf-8") as fh:
            for qid in sorted(result.levels):
                fh.write(f"{qid}\t{result.levels[qid]}\n")
        print(f"levels (cuts {result.cut_low:.3g}/{result.cut_high:.3g}, "
              f"train macro-F1 {result.train_macro_f1:.3f}) -> {args.out}")
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            for qid in sorted(table.scores):
                fh.write(f"{qid}\t{table.scores[qid]!r}\n")
        print(f"tournament scores ({len(tournament)} edges) -> {args.out}")
    return 0


def _read_config(path: str | None) -> dict:
    """Flat key=value file; '#' starts a comment."""
    config: dict[str, str] = {}
    if not path:
        return config
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        if not _:
            raise SystemExit(f"bad config line (need key=value): {line!r}")
        config[key.strip()] = value.strip()
    return config


def _benchmark_from_config(cfg: dict):
    return make_benchmark(
        n_questions=int(cfg.get("questions", 600)),
        n_users=int(cfg.get("users", 40)),
        n_answers=int(cfg.get("answers", 3000)),
        target_consistency=float(cfg.get("target_consistency", 0.9)),
        seed=int(cfg.get("seed", 7)),
    )


def cmd_experiment(args) -> int:
    cfg = _read_config(args.config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.kind == "noise":
        bench = _benchmark_from_config(cfg)
        levels = [float(x) for x in cfg.get("levels", "0,5,10,15,20").split(",")]
        kinds = [k.strip() for k in cfg.get("kinds", "Noise1,Noise2").split(",")]
        results = experiments.noise_experiment(
            bench.dataset, bench.network, bench.test_pairs,
            kinds=kinds, levels=levels, seed=int(cfg.get("noise_seed", 0)),
            times=bench.times,
        )
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("kind\tx_percent\tn_edges\tf1\tauc\tprecision\trecall\n")
            for r in results:
                fh.write(f"{r.kind}\t{r.x_percent:g}\t{r.n_edges}\t{r.report.f1:.4f}"
                         f"\t{r.report.auc:.4f}\t{r.report.precision:.4f}"
                         f"\t{r.report.recall:.4f}\n")
        fig = plots.save_noise_curves(results, out.with_suffix(".png"))
        print(f"noise grid -> {out}, figure -> {fig}")
    elif args.kind == "ablate":
        bench = _benchmark_from_config(cfg)
        base = experiments.ablate(bench.dataset, bench.network, bench.test_pairs,
                                  None, times=bench.times)
        drops = cfg.get("drops")
        targets = ([d.strip() for d in drops.split(",")] if drops else
                   list(experiments.FEATURE_PAIR_NAMES) + list(experiments.HYPOTHESIS_DROPS))
        results = [base]
        for drop in targets:
            results.append(experiments.ablate(
                bench.dataset, bench.network, bench.test_pairs, drop,
                baseline=base.report, times=bench.times))
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("dropped\tf1\tdelta_f1\tauc\n")
            for r in results:
                fh.write(f"{r.dropped}\t{r.report.f1:.4f}\t{r.delta_f1:+.4f}"
                         f"\t{r.report.auc:.4f}\n")
        fig = plots.save_ablation_bars(results, out.with_suffix(".png"))
        print(f"ablation grid -> {out}, figure -> {fig}")
    elif args.kind == "domain":
        seeds = [int(s) for s in cfg.get("domain_seeds", "7,8").split(",")]
        benches = {f"domain{s}": make_benchmark(seed=s) for s in seeds}
        grid = {}
        for train_name, train_bench in benches.items():
            for test_name, test_bench in benches.items():
                grid[(train_name, test_name)] = experiments.domain_adapt(
                    train_bench.dataset, test_bench.dataset, test_bench.test_pairs)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("train\ttest\tf1\tauc\n")
            for (tr, te), rep in sorted(grid.items()):
                fh.write(f"{tr}\t{te}\t{rep.f1:.4f}\t{rep.auc:.4f}\n")
        fig = plots.save_domain_heatmap(grid, out.with_suffix(".png"))
        print(f"domain grid -> {out}, figure -> {fig}")
    else:
        raise SystemExit(f"unknown experiment kind {args.kind}")
    return 0


def cmd_serve(args) -> int:
    if not args.model and not args.snapshot:
        raise SystemExit("serve needs --model or --snapshot")
    if args.snapshot and not args.model:
        model, net, cache, _manifest = restore_snapshot(args.snapshot)
        ds = load_dataset(args.dataset)
    else:
        model = load_model(args.model)
        ds, net, cache = _load_pipeline(args)
    threshold = float(os.environ.get("CQADIFF_CONFIDENCE_THRESHOLD",
                                     args.confidence_threshold))
    service = PredictionService(model, ds, net, cache,
                                confidence_threshold=threshold,
                                k_neighbors=args.k)
    port = int(os.environ.get("CQADIFF_PORT", args.port))
    snapshot_dir = os.environ.get("CQADIFF_SNAPSHOT_DIR", args.snapshot_dir)
    serve_forever(service, port, snapshot_dir=snapshot_dir,
                  snapshot_interval=args.snapshot_interval,
                  static_dir=args.webui, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqadiff",
        description="Relative difficulty estimation for community Q&A question pairs",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse dump files into a dataset snapshot")
    p.add_argument("--posts", required=True)
    p.add_argument("--users")
    p.add_argument("--tags", action="append", default=[],
                   help="topic filter; repeatable or comma-separated")
    p.add_argument("--bucket-weeks", type=int, default=2)
    p.add_argument("--strict", action="store_true",
                   help="abort on malformed rows instead of skipping")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-graph", help="build the difficulty network")
    p.add_argument("--dataset", required=True)
    p.add_argument("--delta-t", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("features", help="compute per-question node scores")
    p.add_argument("--network", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--corpus", help="reference text for the passage-similarity score")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit the pair classifier")
    p.add_argument("--network", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--dataset")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict which of two questions is harder")
    p.add_argument("--model", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--dataset")
    p.add_argument("--pair", required=True, metavar="ID1,ID2")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("baseline", help="compute baseline difficulty scores")
    p.add_argument("--method", required=True,
                   choices=["rcm", "pagerank", "hits", "elo"])
    p.add_argument("--network")
    p.add_argument("--dataset")
    p.add_argument("--rcm-neighbors", type=int, default=10)
    p.add_argument("--rcm-delta", type=float, default=1.0)
    p.add_argument("--rcm-gamma", type=float, default=0.001)
    p.add_argument("--rcm-iters", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("coldstart-predict",
                       help="predict a pair involving brand-new questions")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--network")
    p.add_argument("--cache")
    p.add_argument("--pair", required=True, metavar="ID1,ID2")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_coldstart_predict)

    p = sub.add_parser("global-rank",
                       help="sampled tournament scores and difficulty levels")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--network")
    p.add_argument("--cache")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--levels-train", help="TSV of qid<TAB>level training labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_global_rank)

    p = sub.add_parser("experiment", help="robustness and ablation harness")
    p.add_argument("kind", choices=["noise", "ablate", "domain"])
    p.add_argument("--config", help="key=value file; see README for keys")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="run the prediction + feedback HTTP service")
    p.add_argument("--model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--network")
    p.add_argument("--cache")
    p.add_argument("--corpus")
    p.add_argument("--snapshot", help="restore model/network/cache from a snapshot dir")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--confidence-threshold", type=float, default=0.75)
    p.add_argument("--snapshot-dir")
    p.add_argument("--snapshot-interval", type=float, default=300.0)
    p.add_argument("--webui", help="directory of static UI files to serve")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
