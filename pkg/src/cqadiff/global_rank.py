"""Absolute difficulty levels via a sampled pairwise tournament.

Random question pairs are oriented by the pair predictor to approximate the
complete comparison network; standard PageRank over the resulting tournament
gives a global difficulty score, which labeled examples then cut into
easy/medium/hard. Also hosts the transitivity audit used to check how often
pairwise verdicts produce cycles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baselines import ScoreTable, pagerank_scores
from .model import Verdict

LEVELS = ("easy", "medium", "hard")

PairPredictor = Callable[[int, int], Verdict]


def sample_tournament(
    predict: PairPredictor,
    nodes: Sequence[int],
    n_samples: int,
    seed: int = 0,
) -> set[tuple[int, int]]:
    """Orient ``n_samples`` uniformly random question pairs easy -> hard.

    Pairs repeating across draws collapse to one edge (the predictor is
    deterministic, so both draws orient identically).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    nodes = sorted(nodes)
    if len(nodes) < 2:
        raise ValueError("need at least two questions to sample pairs")
    rng = np.random.default_rng(seed)
    edges: set[tuple[int, int]] = set()
    seen: set[tuple[int, int]] = set()
    for _ in range(n_samples):
        i, j = rng.choice(len(nodes), size=2, replace=False)
        a, b = nodes[i], nodes[j]
        key = (a, b) if a < b else (b, a)
        if key in seen:
            continue
        seen.add(key)
        verdict = predict(a, b)
        easier = a if verdict.harder == b else b
        edges.add((easier, verdict.harder))
    return edges


def complete_tournament(predict: PairPredictor, nodes: Sequence[int]) -> set[tuple[int, int]]:
    """Exhaustive pairwise orientation (small node sets only)."""
    nodes = sorted(nodes)
    edges = set()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            verdict = predict(a, b)
            easier = a if verdict.harder == b else b
            edges.add((easier, verdict.harder))
    return edges


def global_scores(
    nodes: Sequence[int],
    tournament: set[tuple[int, int]],
    d: float = 0.85,
) -> ScoreTable:
    """Standard PageRank over the tournament; higher score means harder."""
    table = pagerank_scores(nodes, sorted(tournament), d=d)
    return ScoreTable(scores=table.scores, source="TournamentPR",
                      degenerate=table.degenerate)


@dataclass
class ThresholdResult:
    levels: dict[int, str]
    cut_low: float
    cut_high: float
    train_macro_f1: float
    degenerate: bool = False


def _macro_f1(actual: Sequence[str], predicted: Sequence[str]) -> float:
    classes = sorted(set(actual))
    scores = []
    for cls in classes:
        tp = sum(1 for a, p in zip(actual, predicted) if a == cls and p == cls)
        fp = sum(1 for a, p in zip(actual, predicted) if a != cls and p == cls)
        fn = sum(1 for a, p in zip(actual, predicted) if a == cls and p != cls)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return sum(scores) / len(scores) if scores else 0.0


def _classify(score: float, cut_low: float, cut_high: float) -> str:
    if score <= cut_low:
        return "easy"
    if score <= cut_high:
        return "medium"
    return "hard"


def threshold_levels(
    scores: dict[int, float],
    labeled_training: Sequence[tuple[int, str]],
) -> ThresholdResult:
    """Two cut points maximizing training macro-F1, applied to every score.

    Candidate cuts are midpoints between consecutive distinct training scores
    (plus open ends); the exhaustive grid keeps the search deterministic.
    """
    if not labeled_training:
        raise ValueError("no labeled examples for thresholding")
    for _, level in labeled_training:
        if level not in LEVELS:
            raise ValueError(f"unknown difficulty level {level!r}")
    train_scores = [scores[qid] for qid, _ in labeled_training]
    labels = [level for _, level in labeled_training]
    distinct = sorted(set(train_scores))
    degenerate = len(set(labels)) < 2
    candidates = [distinct[0] - 1.0]
    candidates += [(x + y) / 2.0 for x, y in zip(distinct, distinct[1:])]
    candidates += [distinct[-1] + 1.0]

    best = (-1.0, candidates[0], candidates[0])
    for i, cut_low in enumerate(candidates):
        for cut_high in candidates[i:]:
            predicted = [_classify(s, cut_low, cut_high) for s in train_scores]
            f1 = _macro_f1(labels, predicted)
            if f1 > best[0]:
                best = (f1, cut_low, cut_high)
    f1, cut_low, cut_high = best
    levels = {qid: _classify(s, cut_low, cut_high) for qid, s in scores.items()}
    return ThresholdResult(levels=levels, cut_low=cut_low, cut_high=cut_high,
                           train_macro_f1=f1, degenerate=degenerate)


def has_cycle(nodes: Sequence[int], edges: set[tuple[int, int]]) -> bool:
    """A complete tournament is acyclic iff its out-degrees are 0..n-1."""
    outdeg = {n: 0 for n in nodes}
    for a, _ in edges:
        outdeg[a] += 1
    return sorted(outdeg.values()) != list(range(len(nodes)))


def cycle_rate(
    predict: PairPredictor,
    nodes: Sequence[int],
    n: int,
    trials: int = 10_000,
    seed: int = 0,
) -> float:
    """Fraction of sampled n-node sets whose pairwise verdicts contain a cycle."""
    if n < 2:
        raise ValueError(f"cycle length must be >= 2, got {n}")
    nodes = sorted(nodes)
    if len(nodes) < n:
        raise ValueError(f"need at least {n} questions, have {len(nodes)}")
    rng = np.random.default_rng(seed)
    cyclic = 0
    for _ in range(trials):
        chosen = [nodes[i] for i in rng.choice(len(nodes), size=n, replace=False)]
        tournament = complete_tournament(predict, chosen)
        if has_cycle(chosen, tournament):
            cyclic += 1
    return cyclic / trials
