"""Node scores and the 12-slot ordered-pair feature vector.

Six per-node quantities are computed once per network and cached; an ordered
pair (a, b) is then described by interleaving a's and b's values:

    [lf(a), lf(b), pr(a), pr(b), deg(a), deg(b),
     decay(a), decay(b), acc(a), acc(b), text(a), text(b)]

so swapping the pair swaps the six slot pairs exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .ingest import AnswerRecord, Dataset, QuestionRecord
from .network import DifficultyNetwork
from .textproc import TfidfIndex, split_passages, tokenize

CACHE_FORMAT = "cqadiff-node-scores"
CACHE_VERSION = 1

DEFAULT_LEADER_RATIO = 0.65
DEFAULT_DAMPING = 0.85

# Largest double below 1: accepted answers never reach the sentinel value 1.0,
# which is reserved for "no accepted answer".
_DECAY_CEILING = math.nextafter(1.0, 0.0)


def leader_follower_rank(net: DifficultyNetwork, alpha: float = DEFAULT_LEADER_RATIO) -> dict[int, int]:
    """Recursive leader/follower partition rank (1 = strongest leader).

    Nodes are ordered by descending indegree-outdegree difference (ties by
    ascending id); the top ``alpha`` share recurses as leaders, the rest as
    followers offset by the leader count, until groups shrink below 1/alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    out_adj = {n: net.out_neighbors(n) for n in net.nodes}

    def rank_group(group: list[int]) -> dict[int, int]:
        size = len(group)
        if size == 0:
            return {}
        members = set(group)
        gamma = {n: 0 for n in group}
        for n in group:
            for m in out_adj[n]:
                if m in members:
                    gamma[n] -= 1
                    gamma[m] += 1
        ordered = sorted(group, key=lambda n: (-gamma[n], n))
        if size <= 1.0 / alpha:
            return {n: pos for pos, n in enumerate(ordered, start=1)}
        n_leaders = int(alpha * size)
        leaders, followers = ordered[:n_leaders], ordered[n_leaders:]
        ranks = rank_group(leaders)
        for n, r in rank_group(followers).items():
            ranks[n] = n_leaders + r
        return ranks

    return rank_group(sorted(net.nodes))


def question_reputations(ds: Dataset, net: DifficultyNetwork) -> dict[int, float]:
    """Per-question asker reputation, normalized to the maximum user reputation."""
    max_rep = max((u.reputation for u in ds.users.values()), default=0)
    reps = {}
    for qid in net.nodes:
        raw = ds.reputation_of(ds.questions[qid].owner) if qid in ds.questions else 0
        reps[qid] = raw / max_rep if max_rep > 0 else 0.0
    return reps


def reputation_pagerank(
    net: DifficultyNetwork,
    reputations: dict[int, float],
    d: float = DEFAULT_DAMPING,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> dict[int, float]:
    """Reputation-seeded PageRank fixed point.

    score(q) = (1-d) * rep(q) + d * sum over in-neighbors j of score(j)/outdeg(j);
    iterated from the reputation vector until the max-abs change drops below
    ``tol``. Mass of dangling nodes is dropped, as the recurrence implies.
    """
    if not 0.0 < d < 1.0:
        raise ValueError(f"damping must be in (0,1), got {d}")
    nodes = sorted(net.nodes)
    if not nodes:
        return {}
    index = {n: i for i, n in enumerate(nodes)}
    r = np.array([reputations[n] for n in nodes], dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite reputation value")

    src = np.array([index[a] for (a, b) in net.edges], dtype=np.intp)
    dst = np.array([index[b] for (a, b) in net.edges], dtype=np.intp)
    outdeg = np.zeros(len(nodes))
    if len(src):
        np.add.at(outdeg, src, 1.0)

    pr = r.copy()
    base = (1.0 - d) * r
    for _ in range(max_iter):
        incoming = np.zeros(len(nodes))
        if len(src):
            np.add.at(incoming, dst, pr[src] / outdeg[src])
        new_pr = base + d * incoming
        if np.max(np.abs(new_pr - pr)) < tol:
            pr = new_pr
            break
        pr = new_pr
    return {n: float(pr[index[n]]) for n in nodes}


def degree_feature(net: DifficultyNetwork, qid: int) -> int:
    """Distinct neighbors in the undirected view of the network."""
    return net.undirected_degree(qid)


def time_decay_feature(q: QuestionRecord, accepted: Optional[AnswerRecord]) -> float:
    """Exponential saturation of the question-to-accepted-answer delay in days.

    Questions with no accepted answer sit at exactly 1.0.
    """
    if accepted is None:
        return 1.0
    delta_days = (accepted.created_at - q.created_at) / 86400.0
    if delta_days < 0:
        raise ValueError(
            f"accepted answer {accepted.answer_id} precedes question {q.question_id}"
        )
    return min(-math.expm1(-delta_days), _DECAY_CEILING)


def prior_accepted_counts(ds: Dataset) -> dict[int, int]:
    """Per question: accepted answers its asker authored strictly before asking."""
    accepted_times: dict[int, list[float]] = {}
    for a in ds.answers.values():
        if a.is_accepted and a.owner is not None:
            accepted_times.setdefault(a.owner, []).append(a.created_at)
    for times in accepted_times.values():
        times.sort()
    counts = {}
    for q in ds.questions.values():
        times = accepted_times.get(q.owner, []) if q.owner is not None else []
        counts[q.question_id] = bisect_left(times, q.created_at)
    return counts


def accepted_count_feature(ds: Dataset, q: QuestionRecord) -> float:
    counts = prior_accepted_counts(ds)
    peak = max(counts.values(), default=0)
    if peak == 0:
        return 0.0
    return counts[q.question_id] / peak


@dataclass
class ReferenceCorpus:
    """Stemmed passages of a reference text plus their TF-IDF index."""

    passages: list[list[str]]
    index: TfidfIndex

    @classmethod
    def from_text(cls, text: str) -> "ReferenceCorpus":
        passages = [tokenize(p) for p in split_passages(text)]
        passages = [p for p in passages if p]
        return cls(passages=passages, index=TfidfIndex(passages))

    @classmethod
    def from_file(cls, path: str | Path) -> "ReferenceCorpus":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def textual_feature(
    q: QuestionRecord,
    accepted: Optional[AnswerRecord],
    corpus: ReferenceCorpus,
) -> float:
    """Best TF-IDF cosine between the accepted answer and any corpus passage."""
    if accepted is None:
        return 0.0
    if not corpus.passages:
        raise ValueError("reference corpus has no passages")
    return corpus.index.max_similarity(tokenize(accepted.body))


@dataclass
class NodeScoreCache:
    """Per-node feature values keyed by exactly the network's node set."""

    lf_rank: dict[int, float] = field(default_factory=dict)
    pagerank: dict[int, float] = field(default_factory=dict)
    degree: dict[int, int] = field(default_factory=dict)
    time_decay: dict[int, float] = field(default_factory=dict)
    accepted_count: dict[int, float] = field(default_factory=dict)
    text_sim: dict[int, float] = field(default_factory=dict)

    def __contains__(self, qid: int) -> bool:
        return qid in self.lf_rank

    def node_values(self, qid: int) -> tuple[float, float, float, float, float, float]:
        return (
            self.lf_rank[qid],
            self.pagerank[qid],
            float(self.degree[qid]),
            self.time_decay[qid],
            self.accepted_count[qid],
            self.text_sim[qid],
        )


def compute_cache(
    net: DifficultyNetwork,
    ds: Dataset,
    corpus: Optional[ReferenceCorpus] = None,
    alpha: float = DEFAULT_LEADER_RATIO,
    damping: float = DEFAULT_DAMPING,
) -> NodeScoreCache:
    """Fill every per-node score map for the network's node set.

    Without a corpus the textual slot is 0 for every node (disabled); with an
    empty corpus this raises instead.
    """
    cache = NodeScoreCache()
    n = len(net.nodes)
    ranks = leader_follower_rank(net, alpha)
    cache.lf_rank = {qid: rank / n for qid, rank in ranks.items()}
    cache.pagerank = reputation_pagerank(net, question_reputations(ds, net), damping)
    raw_counts = prior_accepted_counts(ds)
    peak = max((raw_counts.get(qid, 0) for qid in net.nodes), default=0)
    if corpus is not None and not corpus.passages:
        raise ValueError("reference corpus has no passages")
    for qid in net.nodes:
        cache.degree[qid] = net.undirected_degree(qid)
        q = ds.questions[qid]
        accepted = ds.accepted_answer(qid)
        cache.time_decay[qid] = time_decay_feature(q, accepted)
        cache.accepted_count[qid] = raw_counts.get(qid, 0) / peak if peak else 0.0
        cache.text_sim[qid] = (
            textual_feature(q, accepted, corpus) if corpus is not None else 0.0
        )
    return cache


N_FEATURES = 12


def assemble_pair(cache: NodeScoreCache, a: int, b: int) -> np.ndarray:
    """Interleaved 12-vector for the ordered pair (a, b)."""
    if a == b:
        raise ValueError(f"pair must be two distinct questions, got {a} twice")
    if a not in cache or b not in cache:
        missing = a if a not in cache else b
        raise KeyError(f"question {missing} not in score cache")
    va = cache.node_values(a)
    vb = cache.node_values(b)
    vec = np.empty(N_FEATURES)
    vec[0::2] = va
    vec[1::2] = vb
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"non-finite feature for pair ({a}, {b}): {vec}")
    return vec


def save_cache(cache: NodeScoreCache, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {CACHE_FORMAT} v{CACHE_VERSION}\n")
        for qid in sorted(cache.lf_rank):
            vals = cache.node_values(qid)
            fh.write(str(qid) + " " + " ".join(repr(float(v)) for v in vals) + "\n")


def load_cache(path: str | Path) -> NodeScoreCache:
    cache = NodeScoreCache()
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {CACHE_FORMAT} v{CACHE_VERSION}":
            raise ValueError(f"{path}: not a node-score cache (header {first!r})")
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            qid = int(parts[0])
            lf, pr, deg, decay, acc, text = (float(x) for x in parts[1:7])
            cache.lf_rank[qid] = lf
            cache.pagerank[qid] = pr
            cache.degree[qid] = int(deg)
            cache.time_decay[qid] = decay
            cache.accepted_count[qid] = acc
            cache.text_sim[qid] = text
    return cache
