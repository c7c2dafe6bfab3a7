"""Robustness, ablation and domain-adaptation harness runs.

Each experiment retrains the pipeline under a perturbed configuration and
reports the evaluation delta against the unperturbed run. Results are plain
rows ready for TSV output; figure rendering lives in :mod:`cqadiff.plots`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .features import NodeScoreCache, ReferenceCorpus, compute_cache
from .ingest import Dataset
from .model import (
    EvalReport,
    PairClassifier,
    TrainConfig,
    evaluate,
    make_training_set,
    train,
)
from .network import DifficultyNetwork, EdgeType, build_network

NOISE_KINDS = ("Noise1", "Noise2")

FEATURE_PAIR_NAMES = (
    "lf_rank", "pagerank", "degree", "time_decay", "accepted_count", "text_sim",
)

HYPOTHESIS_DROPS = {
    "H1": EdgeType.TYPE1,
    "H2": EdgeType.TYPE2,
    "H3": EdgeType.TYPE3,
}


def inject_noise(
    net: DifficultyNetwork,
    kind: str,
    x_percent: float,
    seed: int = 0,
) -> DifficultyNetwork:
    """Perturb the edge set by x% of its size.

    Noise1 inserts that many new random directed edges on top; Noise2 first
    deletes that many existing edges and then inserts the same number, keeping
    the edge count exactly unchanged. Inserted edges carry the noise type tag.
    """
    if kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}")
    if x_percent < 0:
        raise ValueError(f"noise percentage must be >= 0, got {x_percent}")
    count = int(len(net.edges) * x_percent / 100.0)
    out = net.copy()
    if count == 0:
        return out
    rng = np.random.default_rng(seed)
    nodes = sorted(out.nodes)
    if len(nodes) < 2:
        raise ValueError("need at least two nodes to inject noise")

    if kind == "Noise2":
        existing = sorted(out.edges)
        doomed = rng.choice(len(existing), size=count, replace=False)
        for idx in doomed:
            del out.edges[existing[idx]]

    max_new = len(nodes) * (len(nodes) - 1) - len(out.edges)
    if count > max_new:
        raise ValueError(f"cannot insert {count} new edges; only {max_new} slots free")
    added = 0
    while added < count:
        i, j = rng.integers(0, len(nodes), size=2)
        if i == j:
            continue
        pair = (nodes[i], nodes[j])
        if pair in out.edges:
            continue
        out.edges[pair] = frozenset({EdgeType.NOISE})
        added += 1
    out.invalidate_adjacency()
    return out


@dataclass
class PipelineRun:
    """One full train+evaluate pass over a (possibly perturbed) network."""

    network: DifficultyNetwork
    cache: NodeScoreCache
    model: PairClassifier
    report: EvalReport


def run_pipeline(
    ds: Dataset,
    net: DifficultyNetwork,
    test_pairs: Sequence[tuple[tuple[int, int], int]],
    corpus: Optional[ReferenceCorpus] = None,
    config: Optional[TrainConfig] = None,
    times: Optional[dict[int, float]] = None,
) -> PipelineRun:
    cache = compute_cache(net, ds, corpus)
    model = train(make_training_set(net, cache), config)
    report = evaluate(model, cache, test_pairs, times)
    return PipelineRun(network=net, cache=cache, model=model, report=report)


@dataclass
class NoiseResult:
    kind: str
    x_percent: float
    n_edges: int
    report: EvalReport


def noise_experiment(
    ds: Dataset,
    net: DifficultyNetwork,
    test_pairs: Sequence[tuple[tuple[int, int], int]],
    kinds: Sequence[str] = NOISE_KINDS,
    levels: Sequence[float] = (0, 5, 10, 15, 20),
    seed: int = 0,
    corpus: Optional[ReferenceCorpus] = None,
    config: Optional[TrainConfig] = None,
    times: Optional[dict[int, float]] = None,
) -> list[NoiseResult]:
    results = []
    for kind in kinds:
        for x in levels:
            noisy = inject_noise(net, kind, x, seed=seed)
            run = run_pipeline(ds, noisy, test_pairs, corpus, config, times)
            results.append(NoiseResult(kind=kind, x_percent=x,
                                       n_edges=noisy.n_edges, report=run.report))
    return results


@dataclass
class AblationResult:
    dropped: str
    report: EvalReport
    delta_f1: float


def ablate(
    ds: Dataset,
    net: DifficultyNetwork,
    test_pairs: Sequence[tuple[tuple[int, int], int]],
    drop: Optional[str],
    baseline: Optional[EvalReport] = None,
    corpus: Optional[ReferenceCorpus] = None,
    config: Optional[TrainConfig] = None,
    times: Optional[dict[int, float]] = None,
) -> AblationResult:
    """Retrain with one feature pair or one hypothesis removed.

    ``drop`` is a feature-pair name (both pair slots of that node score are
    removed), an "H1"/"H2"/"H3" hypothesis tag (the network is rebuilt without
    that edge type), or None for the unablated reference run.
    """
    config = config or TrainConfig()
    if drop is None:
        run = run_pipeline(ds, net, test_pairs, corpus, config, times)
    elif drop in FEATURE_PAIR_NAMES:
        slot = FEATURE_PAIR_NAMES.index(drop)
        run = run_pipeline(ds, net, test_pairs, corpus,
                           replace(config, dropped_slot_pair=slot), times)
    elif drop in HYPOTHESIS_DROPS:
        enabled = [t for t in (EdgeType.TYPE1, EdgeType.TYPE2, EdgeType.TYPE3)
                   if t is not HYPOTHESIS_DROPS[drop]]
        rebuilt = build_network(ds, delta_t=net.delta_t, enabled_types=enabled)
        run = run_pipeline(ds, rebuilt, test_pairs, corpus, config, times)
    else:
        raise ValueError(f"unknown ablation target {drop!r}")
    delta = run.report.f1 - baseline.f1 if baseline is not None else 0.0
    return AblationResult(dropped=drop or "none", report=run.report, delta_f1=delta)


def common_user_pairs(
    train_ds: Dataset,
    test_ds: Dataset,
    pairs: Sequence[tuple[tuple[int, int], int]],
) -> list[tuple[tuple[int, int], int]]:
    """Restrict test pairs to questions asked by users present in both
    datasets; identity matches on account id when available, else user id."""
    def keys(ds: Dataset) -> set:
        out = set()
        for u in ds.users.values():
            out.add(("acct", u.account_id) if u.account_id is not None else ("uid", u.user_id))
        return out

    shared = keys(train_ds) & keys(test_ds)

    def asker_known(ds: Dataset, qid: int) -> bool:
        owner = ds.questions[qid].owner
        if owner is None or owner not in ds.users:
            return False
        u = ds.users[owner]
        key = ("acct", u.account_id) if u.account_id is not None else ("uid", u.user_id)
        return key in shared

    return [((a, b), h) for (a, b), h in pairs
            if asker_known(test_ds, a) and asker_known(test_ds, b)]


def domain_adapt(
    train_ds: Dataset,
    test_ds: Dataset,
    test_pairs: Sequence[tuple[tuple[int, int], int]],
    delta_t: int = 1,
    corpus: Optional[ReferenceCorpus] = None,
    config: Optional[TrainConfig] = None,
    restrict_common_users: bool = False,
) -> EvalReport:
    """Train on one dataset, evaluate on another.

    The classifier weights transfer; the test dataset contributes its own
    network and feature cache. Optionally keeps only test pairs whose askers
    exist in both datasets (account-id linkage across sites).
    """
    train_net = build_network(train_ds, delta_t=delta_t)
    train_cache = compute_cache(train_net, train_ds, corpus)
    model = train(make_training_set(train_net, train_cache), config)

    test_net = build_network(test_ds, delta_t=delta_t)
    test_cache = compute_cache(test_net, test_ds, corpus)
    pairs = list(test_pairs)
    if restrict_common_users:
        pairs = common_user_pairs(train_ds, test_ds, pairs)
    times = {qid: q.created_at for qid, q in test_ds.questions.items()}
    return evaluate(model, test_cache, pairs, times)
