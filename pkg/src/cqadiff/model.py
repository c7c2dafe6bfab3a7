"""Edge-directionality classifier over ordered question pairs.

Every network edge (a, b) contributes two training entries: the pair read in
edge order labelled +1 and the swapped pair labelled -1, so both classes have
exactly one entry per edge. The model is a linear max-margin classifier
(hinge loss, L2 penalty) fitted by seeded per-sample subgradient descent;
prediction scores both orders of a pair and compares them, which makes the
verdict independent of argument order by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .features import N_FEATURES, NodeScoreCache, assemble_pair
from .network import DifficultyNetwork

MODEL_FORMAT = "cqadiff-model"
MODEL_VERSION = 1

CONFIDENCE_THRESHOLD = 0.75


class ColdStartRequired(LookupError):
    """Raised when a pair involves a question with no cached features."""

    def __init__(self, question_id):
        super().__init__(f"question {question_id} requires the cold-start path")
        self.question_id = question_id


class DegenerateTrainingError(ValueError):
    """Training set cannot support a model (single class or constant features)."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.1      # step size at update t is learning_rate / sqrt(t)
    l2: float = 1e-4
    epochs: int = 30
    seed: int = 13
    calibration_fraction: float = 0.1
    online_rate: float = 0.05
    dropped_slot_pair: Optional[int] = None  # 0..5 drops feature slots (2i, 2i+1)

    def feature_indices(self) -> np.ndarray:
        idx = np.arange(N_FEATURES)
        if self.dropped_slot_pair is not None:
            i = self.dropped_slot_pair
            if not 0 <= i < N_FEATURES // 2:
                raise ValueError(f"dropped_slot_pair out of range: {i}")
            idx = np.delete(idx, [2 * i, 2 * i + 1])
        return idx


@dataclass
class TrainingSet:
    features: np.ndarray                  # (2E, 12)
    labels: np.ndarray                    # (2E,) values +1 / -1
    provenance: list[tuple[int, int]]     # source edge per entry

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class Verdict:
    harder: int
    confidence: float
    margin: float


@dataclass
class EvalReport:
    f1: float
    auc: float
    precision: float
    recall: float
    n: int


@dataclass
class PairClassifier:
    weights: np.ndarray
    bias: float
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    calibration_k: float
    config: TrainConfig = field(default_factory=TrainConfig)

    def _transform(self, vec: np.ndarray) -> np.ndarray:
        x = vec[self.config.feature_indices()]
        return (x - self.scaler_mean) / self.scaler_std

    def score(self, vec: np.ndarray) -> float:
        return float(self.weights @ self._transform(vec) + self.bias)

    def copy(self) -> "PairClassifier":
        return PairClassifier(
            weights=self.weights.copy(),
            bias=self.bias,
            scaler_mean=self.scaler_mean,
            scaler_std=self.scaler_std,
            calibration_k=self.calibration_k,
            config=replace(self.config),
        )


def make_training_set(net: DifficultyNetwork, cache: NodeScoreCache) -> TrainingSet:
    """Both orders of every edge, edge order labelled +1 and swapped -1."""
    edges = sorted(net.edges)
    rows = np.empty((2 * len(edges), N_FEATURES))
    labels = np.empty(2 * len(edges))
    provenance: list[tuple[int, int]] = []
    for i, (a, b) in enumerate(edges):
        rows[2 * i] = assemble_pair(cache, a, b)
        rows[2 * i + 1] = assemble_pair(cache, b, a)
        labels[2 * i] = 1.0
        labels[2 * i + 1] = -1.0
        provenance.extend(((a, b), (a, b)))
    return TrainingSet(features=rows, labels=labels, provenance=provenance)


def _fit_scaler(rows: np.ndarray, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension standardizer with paired slots sharing identical statistics.

    Slots 2i and 2i+1 hold the same underlying node quantity (for the two pair
    members), so their statistics are computed over the stacked pair of
    columns; this keeps the fitted decision function exactly antisymmetric.
    Zero-variance dimensions pass through untouched.
    """
    x = rows[:, indices]
    mean = np.empty(x.shape[1])
    std = np.empty(x.shape[1])
    for j in range(0, x.shape[1], 2):
        stacked = np.concatenate([x[:, j], x[:, j + 1]])
        mean[j] = mean[j + 1] = stacked.mean()
        std[j] = std[j + 1] = stacked.std()
    passthrough = std == 0.0
    mean[passthrough] = 0.0
    std[passthrough] = 1.0
    return mean, std


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _fit_confidence_scale(margins: np.ndarray, correct: np.ndarray) -> float:
    """Maximum-likelihood slope for confidence = sigmoid(k * |margin|), k >= 0."""
    z = np.abs(margins)
    if len(z) == 0 or np.all(z == 0):
        return 1.0
    c = correct.astype(float)

    def neg_loglik(k: float) -> float:
        p = np.clip(1.0 / (1.0 + np.exp(-k * z)), 1e-12, 1 - 1e-12)
        return -float(np.sum(c * np.log(p) + (1 - c) * np.log(1 - p)))

    lo, hi = 0.0, 1e4
    for _ in range(200):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if neg_loglik(m1) < neg_loglik(m2):
            hi = m2
        else:
            lo = m1
    return (lo + hi) / 2


def train(ts: TrainingSet, config: Optional[TrainConfig] = None) -> PairClassifier:
    """Seeded epoch-based subgradient descent on the regularized hinge loss.

    A 10% slice of edges is held out to calibrate the confidence map; the
    same seed always reproduces the same weights bit-for-bit.
    """
    config = config or TrainConfig()
    if len(ts) == 0:
        raise DegenerateTrainingError("empty training set")
    classes = np.unique(ts.labels)
    if len(classes) < 2:
        raise DegenerateTrainingError(f"single-class training set (labels {classes})")

    indices = config.feature_indices()
    if np.all(ts.features[:, indices].std(axis=0) == 0.0):
        raise DegenerateTrainingError("all selected feature dimensions are constant")

    rng = np.random.default_rng(config.seed)
    edges = sorted(set(ts.provenance))
    rng.shuffle(edges)
    n_calib = int(len(edges) * config.calibration_fraction)
    calib_edges = set(edges[:n_calib])
    entry_is_calib = np.array([e in calib_edges for e in ts.provenance])
    train_rows = ts.features[~entry_is_calib]
    train_labels = ts.labels[~entry_is_calib]
    if len(train_rows) == 0:
        train_rows, train_labels = ts.features, ts.labels

    mean, std = _fit_scaler(train_rows, indices)
    x = (train_rows[:, indices] - mean) / std
    y = train_labels

    w = np.zeros(len(indices))
    b = 0.0
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(x))
        for i in order:
            t += 1
            eta = config.learning_rate / math.sqrt(t)
            if y[i] * (w @ x[i] + b) < 1.0:
                w = (1.0 - eta * config.l2) * w + eta * y[i] * x[i]
                b += eta * y[i]
            else:
                w = (1.0 - eta * config.l2) * w

    model = PairClassifier(
        weights=w, bias=b, scaler_mean=mean, scaler_std=std,
        calibration_k=1.0, config=config,
    )

    # calibrate confidence on held-out edges (fall back to the training slice
    # for tiny sets); a calibration edge (a, b) asserts "b harder"
    calib = sorted(calib_edges) if calib_edges else sorted(set(ts.provenance))
    forward: dict[tuple[int, int], np.ndarray] = {}
    backward: dict[tuple[int, int], np.ndarray] = {}
    for idx, edge in enumerate(ts.provenance):
        (forward if ts.labels[idx] > 0 else backward)[edge] = ts.features[idx]
    margins, correct = [], []
    for edge in calib:
        m = (model.score(forward[edge]) - model.score(backward[edge])) / 2.0
        if m == 0.0:
            continue
        margins.append(m)
        correct.append(m > 0)
    model.calibration_k = _fit_confidence_scale(np.array(margins), np.array(correct))
    return model


def pair_margin(m: PairClassifier, cache: NodeScoreCache, a: int, b: int) -> float:
    """Decision margin for ordered pair (a, b); positive means b is harder."""
    for qid in (a, b):
        if qid not in cache:
            raise ColdStartRequired(qid)
    s_forward = m.score(assemble_pair(cache, a, b))
    s_backward = m.score(assemble_pair(cache, b, a))
    return (s_forward - s_backward) / 2.0


def resolve_tie(a: int, b: int, times: Optional[dict[int, float]]) -> int:
    """Zero-margin rule: the later-posted question is the harder one.

    Without posting times (or at equal times) the larger id wins, which is the
    posting order in dump ids and keeps the rule a total order.
    """
    if times is not None:
        ta, tb = times.get(a), times.get(b)
        if ta is not None and tb is not None and ta != tb:
            return b if tb > ta else a
    return max(a, b)


def predict_pair(
    m: PairClassifier,
    cache: NodeScoreCache,
    a: int,
    b: int,
    times: Optional[dict[int, float]] = None,
) -> Verdict:
    """Orientation verdict with calibrated confidence; symmetric in (a, b)."""
    margin = pair_margin(m, cache, a, b)
    if margin > 0:
        harder = b
    elif margin < 0:
        harder = a
    else:
        harder = resolve_tie(a, b, times)
    confidence = _sigmoid(m.calibration_k * abs(margin))
    return Verdict(harder=harder, confidence=confidence, margin=margin)


def binary_f1(actual: Sequence[bool], predicted: Sequence[bool]) -> tuple[float, float, float]:
    """(f1, precision, recall) for the positive class."""
    tp = sum(1 for a, p in zip(actual, predicted) if a and p)
    fp = sum(1 for a, p in zip(actual, predicted) if not a and p)
    fn = sum(1 for a, p in zip(actual, predicted) if a and not p)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return f1, precision, recall


def rank_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mann-Whitney AUC with midranks for ties; 0.5 when a class is absent."""
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    rank_sum = sum(r for r, lbl in zip(ranks, labels) if lbl)
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(
    m: PairClassifier,
    cache: NodeScoreCache,
    labeled_pairs: Sequence[tuple[tuple[int, int], int]],
    times: Optional[dict[int, float]] = None,
) -> EvalReport:
    """Score ordered pairs; "second question harder" is the positive class."""
    if not labeled_pairs:
        raise ValueError("no labeled pairs to evaluate")
    actual, predicted, margins = [], [], []
    for (a, b), harder in labeled_pairs:
        verdict = predict_pair(m, cache, a, b, times)
        actual.append(harder == b)
        predicted.append(verdict.harder == b)
        margins.append(verdict.margin)
    f1, precision, recall = binary_f1(actual, predicted)
    return EvalReport(
        f1=f1,
        auc=rank_auc(margins, actual),
        precision=precision,
        recall=recall,
        n=len(labeled_pairs),
    )


@dataclass
class UpdateResult:
    model: PairClassifier
    accepted: bool
    verdict: Verdict


def incremental_update(
    m: PairClassifier,
    cache: NodeScoreCache,
    feedback: tuple[tuple[int, int], int],
    times: Optional[dict[int, float]] = None,
    confidence_threshold: float = CONFIDENCE_THRESHOLD,
) -> UpdateResult:
    """Guarded online step on one feedback pair.

    Feedback contradicting a verdict whose confidence exceeds the threshold is
    rejected as spurious. Accepted feedback applies one hinge subgradient step
    on the pair-difference vector, so the margin moves toward the label and an
    agreeing feedback can never flip the verdict it agrees with.
    """
    (a, b), harder_label = feedback
    if harder_label not in (a, b):
        raise ValueError(f"feedback label {harder_label} is neither {a} nor {b}")
    verdict = predict_pair(m, cache, a, b, times)
    if verdict.confidence > confidence_threshold and verdict.harder != harder_label:
        return UpdateResult(model=m, accepted=False, verdict=verdict)

    x_fwd = m._transform(assemble_pair(cache, a, b))
    x_bwd = m._transform(assemble_pair(cache, b, a))
    phi = (x_fwd - x_bwd) / 2.0
    y = 1.0 if harder_label == b else -1.0
    updated = m.copy()
    # pure hinge step (no shrinkage): a no-op when the pair is already beyond
    # the margin, which keeps agreeing feedback monotone
    if y * float(updated.weights @ phi) < 1.0:
        updated.weights = updated.weights + updated.config.online_rate * y * phi
    return UpdateResult(model=updated, accepted=True, verdict=verdict)


def save_model(m: PairClassifier, path: str | Path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "weights": m.weights.tolist(),
        "bias": m.bias,
        "scaler_mean": m.scaler_mean.tolist(),
        "scaler_std": m.scaler_std.tolist(),
        "calibration_k": m.calibration_k,
        "config": {
            "learning_rate": m.config.learning_rate,
            "l2": m.config.l2,
            "epochs": m.config.epochs,
            "seed": m.config.seed,
            "calibration_fraction": m.config.calibration_fraction,
            "online_rate": m.config.online_rate,
            "dropped_slot_pair": m.config.dropped_slot_pair,
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> PairClassifier:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')}")
    return PairClassifier(
        weights=np.array(payload["weights"]),
        bias=payload["bias"],
        scaler_mean=np.array(payload["scaler_mean"]),
        scaler_std=np.array(payload["scaler_std"]),
        calibration_k=payload["calibration_k"],
        config=TrainConfig(**payload["config"]),
    )
