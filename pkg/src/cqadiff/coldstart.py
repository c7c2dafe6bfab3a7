"""Cold-start resolution for questions with no usable history.

A question is "brand new" when the network, metadata and acceptance signals
are all silent about it: isolated node, no accepted answer, and an asker with
no prior accepted answers. Such questions are represented by their k most
text-similar non-brand-new questions, and the pair verdict is a majority vote
over proxy pairs. Embeddings are deterministic TF-IDF unigram vectors; the
provider is pluggable through the index object.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .features import NodeScoreCache
from .ingest import Dataset
from .model import PairClassifier, Verdict, predict_pair, resolve_tie
from .network import DifficultyNetwork
from .textproc import SparseVector, TfidfIndex, tokenize

log = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 5


class TextEmbeddingIndex:
    """TF-IDF embeddings for every dataset question, plus ad-hoc texts."""

    def __init__(self, texts: dict[int, str]):
        self.ids = sorted(texts)
        self.index = TfidfIndex([tokenize(texts[i]) for i in self.ids])
        self.vectors: dict[int, SparseVector] = dict(zip(self.ids, self.index.vectors))

    def embed_text(self, text: str) -> SparseVector:
        return self.index.vectorize(tokenize(text))

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "TextEmbeddingIndex":
        return cls({qid: q.text() for qid, q in ds.questions.items()})


def is_brand_new(net: DifficultyNetwork, cache: NodeScoreCache, qid: int) -> bool:
    """No edges, no accepted answer, and no prior acceptance history."""
    return (
        net.is_isolated(qid)
        and cache.time_decay[qid] == 1.0
        and cache.accepted_count[qid] == 0.0
    )


def knn_similar(
    query: SparseVector,
    pool: dict[int, SparseVector],
    k: int,
) -> list[int]:
    """Top-k pool questions by cosine similarity; ties resolve to smaller ids."""
    if k > len(pool):
        log.warning("requested %d neighbors but pool has only %d", k, len(pool))
    ranked = sorted(pool, key=lambda qid: (-query.cosine(pool[qid]), qid))
    return ranked[:k]


@dataclass
class ColdVote:
    harder: int
    confidence: float
    margin: float
    votes_first: int
    votes_second: int


def predict_cold_pair(
    m: PairClassifier,
    cache: NodeScoreCache,
    q1: int,
    q2: int,
    k: int,
    *,
    net: DifficultyNetwork,
    ds: Dataset,
    index: Optional[TextEmbeddingIndex] = None,
    times: Optional[dict[int, float]] = None,
    external_texts: Optional[dict[int, str]] = None,
) -> Verdict:
    """Majority vote over proxy pairs drawn from text-nearest neighbor sets.

    Brand-new members of the pair are replaced by their k nearest
    non-brand-new questions; a question absent from the dataset entirely must
    supply its text through ``external_texts``. Ties fall back to the shared
    later-posted rule. The vote is symmetric in (q1, q2) by construction.
    """
    index = index or TextEmbeddingIndex.from_dataset(ds)
    external_texts = external_texts or {}
    pool = {
        qid: index.vectors[qid]
        for qid in net.nodes
        if qid in index.vectors and not is_brand_new(net, cache, qid)
    }
    if not pool:
        raise ValueError("no non-brand-new questions available as proxies")

    def proxies(qid: int) -> list[int]:
        if qid in cache and not is_brand_new(net, cache, qid):
            return [qid]
        if qid in index.vectors:
            vec = index.vectors[qid]
        elif qid in external_texts:
            vec = index.embed_text(external_texts[qid])
        else:
            raise KeyError(f"question {qid} unknown and no text supplied")
        return knn_similar(vec, pool, k)

    side1, side2 = proxies(q1), proxies(q2)
    votes1 = votes2 = 0
    conf1: list[float] = []
    conf2: list[float] = []
    for n1 in side1:
        for n2 in side2:
            if n1 == n2:
                continue
            verdict = predict_pair(m, cache, n1, n2, times)
            if verdict.harder == n2:
                votes2 += 1
                conf2.append(verdict.confidence)
            else:
                votes1 += 1
                conf1.append(verdict.confidence)

    if votes1 > votes2:
        harder = q1
    elif votes2 > votes1:
        harder = q2
    else:
        harder = resolve_tie(q1, q2, times)
    winning_conf = conf1 if harder == q1 else conf2
    confidence = sum(winning_conf) / len(winning_conf) if winning_conf else 0.5
    total = votes1 + votes2
    margin = (votes2 - votes1) / (2.0 * total) if total else 0.0
    return Verdict(harder=harder, confidence=confidence, margin=margin)
