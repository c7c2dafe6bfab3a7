"""Scalar-score baselines and the cross-network evaluation matrix.

Each baseline reduces questions to one difficulty score; a pair is then
decided by comparing scores (ties fall back to the shared later-posted rule).
Competition entities mix real users with one pseudo-user per question, so
graph nodes here are generic hashables: plain ints for questions and
("u", id) tuples for users.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .features import compute_cache, ReferenceCorpus
from .ingest import Dataset
from .model import (
    EvalReport,
    TrainConfig,
    Verdict,
    _sigmoid,
    make_training_set,
    predict_pair,
    resolve_tie,
    train,
)
from .network import DifficultyNetwork, EdgeType
from .textproc import jaccard, tokenize

Entity = Hashable
Edge = tuple[Entity, Entity]


def user_entity(user_id: int) -> Entity:
    return ("u", user_id)


@dataclass
class ScoreTable:
    scores: dict[int, float]
    source: str
    degenerate: bool = False


@dataclass
class CompetitionGraph:
    """(winner, loser) outcomes; winners carry the higher skill/difficulty."""

    competitions: list[Edge] = field(default_factory=list)

    def loser_winner_edges(self) -> list[Edge]:
        return [(loser, winner) for winner, loser in self.competitions]


@dataclass
class GenericGraph:
    """Any directed graph usable by the scorers; edges point easy -> hard."""

    name: str
    nodes: set[Entity]
    edges: list[Edge]

    @classmethod
    def from_network(cls, name: str, net: DifficultyNetwork) -> "GenericGraph":
        return cls(name=name, nodes=set(net.nodes), edges=sorted(net.edges))

    def question_network(self, ds: Dataset) -> DifficultyNetwork:
        """Subgraph induced on question nodes, as a difficulty network."""
        qnodes = {n for n in self.nodes if isinstance(n, int) and n in ds.questions}
        edges = {
            (a, b): frozenset({EdgeType.NOISE})
            for (a, b) in self.edges
            if a in qnodes and b in qnodes and a != b
        }
        return DifficultyNetwork(nodes=qnodes, edges=edges,
                                 bucket_width_weeks=ds.bucket_width_weeks)


# --- acceptance-graph + PageRank baseline -----------------------------------

def build_acceptance_graph(ds: Dataset) -> set[tuple[int, int]]:
    """Edges from each question a user answered without acceptance to each
    question where that user's answer was accepted."""
    accepted_qs: dict[int, set[int]] = {}
    unaccepted_qs: dict[int, set[int]] = {}
    for a in ds.answers.values():
        if a.owner is None:
            continue
        target = accepted_qs if a.is_accepted else unaccepted_qs
        target.setdefault(a.owner, set()).add(a.parent_question)
    edges = set()
    for user, losses in unaccepted_qs.items():
        wins = accepted_qs.get(user)
        if not wins:
            continue
        for src in losses:
            for dst in wins:
                if src != dst:
                    edges.add((src, dst))
    return edges


def pagerank_scores(
    nodes: Iterable[Entity],
    edges: Iterable[Edge],
    d: float = 0.85,
    tol: float = 1e-12,
    max_iter: int = 500,
) -> ScoreTable:
    """Textbook PageRank: uniform teleport, dangling mass spread uniformly."""
    node_list = sorted(nodes, key=repr)
    n = len(node_list)
    if n == 0:
        return ScoreTable(scores={}, source="PageRankBaseline", degenerate=True)
    index = {node: i for i, node in enumerate(node_list)}
    src = np.array([index[a] for a, _ in edges], dtype=np.intp)
    dst = np.array([index[b] for _, b in edges], dtype=np.intp)
    outdeg = np.zeros(n)
    if len(src):
        np.add.at(outdeg, src, 1.0)
    dangling = outdeg == 0.0

    pr = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        incoming = np.zeros(n)
        if len(src):
            np.add.at(incoming, dst, pr[src] / outdeg[src])
        new_pr = (1.0 - d) / n + d * (incoming + pr[dangling].sum() / n)
        if np.max(np.abs(new_pr - pr)) < tol:
            pr = new_pr
            break
        pr = new_pr
    return ScoreTable(
        scores={node: float(pr[index[node]]) for node in node_list},
        source="PageRankBaseline",
    )


# --- HITS --------------------------------------------------------------------

def hits_authority(
    nodes: Iterable[Entity],
    edges: Iterable[Edge],
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> ScoreTable:
    """Authority scores from the hub/authority power iteration (L2-normalized)."""
    node_list = sorted(nodes, key=repr)
    n = len(node_list)
    edge_list = list(edges)
    if n == 0 or not edge_list:
        return ScoreTable(
            scores={node: 0.0 for node in node_list},
            source="HITS",
            degenerate=True,
        )
    index = {node: i for i, node in enumerate(node_list)}
    src = np.array([index[a] for a, _ in edge_list], dtype=np.intp)
    dst = np.array([index[b] for _, b in edge_list], dtype=np.intp)

    hubs = np.ones(n)
    auths = np.ones(n)
    for _ in range(max_iter):
        new_auths = np.zeros(n)
        np.add.at(new_auths, dst, hubs[src])
        norm = np.linalg.norm(new_auths)
        if norm > 0:
            new_auths /= norm
        new_hubs = np.zeros(n)
        np.add.at(new_hubs, src, new_auths[dst])
        norm = np.linalg.norm(new_hubs)
        if norm > 0:
            new_hubs /= norm
        residual = max(np.max(np.abs(new_auths - auths)), np.max(np.abs(new_hubs - hubs)))
        auths, hubs = new_auths, new_hubs
        if residual < tol:
            break
    return ScoreTable(
        scores={node: float(auths[index[node]]) for node in node_list},
        source="HITS",
    )


def hits_on_network(net: DifficultyNetwork) -> ScoreTable:
    return hits_authority(net.nodes, net.edges.keys())


# --- competition extraction + Elo surrogate ----------------------------------

def extract_competitions(ds: Dataset) -> CompetitionGraph:
    """Per question with an accepted (best) answer, four competition kinds:
    the question beats its asker, the best answerer beats the question and
    the asker, and the best answerer beats every non-best answerer."""
    graph = CompetitionGraph()
    for qid in sorted(ds.questions):
        q = ds.questions[qid]
        best = ds.accepted_answer(qid)
        if best is None or best.owner is None:
            continue
        asker = q.owner
        best_user = user_entity(best.owner)
        pairs: list[Edge] = []
        if asker is not None:
            pairs.append((qid, user_entity(asker)))
        pairs.append((best_user, qid))
        if asker is not None:
            pairs.append((best_user, user_entity(asker)))
        others = sorted({
            a.owner
            for a in ds.answers_for(qid)
            if a.owner is not None and not a.is_accepted and a.owner != best.owner
        })
        pairs.extend((best_user, user_entity(o)) for o in others)
        graph.competitions.extend((w, l) for w, l in pairs if w != l)
    return graph


def elo_scores(
    competitions: Sequence[Edge],
    k_factor: float = 32.0,
    initial: float = 1000.0,
) -> dict[Entity, float]:
    """Sequential Elo over (winner, loser) outcomes; a simple stand-in rating
    engine for the pluggable skill-rating hook."""
    ratings: dict[Entity, float] = {}
    for winner, loser in competitions:
        rw = ratings.get(winner, initial)
        rl = ratings.get(loser, initial)
        expected_w = 1.0 / (1.0 + 10.0 ** ((rl - rw) / 400.0))
        ratings[winner] = rw + k_factor * (1.0 - expected_w)
        ratings[loser] = rl - k_factor * (1.0 - expected_w)
    return ratings


def elo_question_scores(ds: Dataset) -> ScoreTable:
    ratings = elo_scores(extract_competitions(ds).competitions)
    scores = {qid: ratings.get(qid, 0.0) for qid in ds.questions}
    return ScoreTable(scores=scores, source="TrueskillSurrogate")


# --- regularized competition model -------------------------------------------

def question_term_sets(ds: Dataset) -> dict[int, set[str]]:
    """Stemmed unigrams of title + body + tags per question."""
    return {qid: set(tokenize(q.text())) for qid, q in ds.questions.items()}


def _similarity_weights(
    texts: dict[Entity, set[str]], k_neighbors: int
) -> dict[tuple[Entity, Entity], float]:
    """Jaccard weights restricted to each question's top-K nearest neighbors."""
    weights: dict[tuple[Entity, Entity], float] = {}
    ids = sorted(texts, key=repr)
    for i in ids:
        sims = []
        for j in ids:
            if i == j:
                continue
            w = jaccard(texts[i], texts[j])
            if w > 0.0:
                sims.append((-w, repr(j), j))
        sims.sort()
        for neg_w, _, j in sims[:k_neighbors]:
            key = (i, j) if repr(i) <= repr(j) else (j, i)
            weights[key] = -neg_w
    return weights


@dataclass
class RcmResult:
    theta: dict[Entity, float]
    objective: list[float]  # recorded every 10 iterations, plus start and end


def rcm_objective(
    theta: dict[Entity, float],
    edges: Sequence[Edge],
    weights: dict[tuple[Entity, Entity], float],
    delta: float,
) -> float:
    loss = sum(max(0.0, delta - (theta[j] - theta[i])) for i, j in edges)
    loss += sum(w * (theta[j] - theta[i]) ** 2 for (i, j), w in weights.items())
    return loss


def rcm_train(
    edges: Sequence[Edge],
    texts: Optional[dict[Entity, set[str]]] = None,
    k_neighbors: int = 10,
    delta: float = 1.0,
    gamma: float = 0.001,
    iters: int = 2000,
    init: Optional[dict[Entity, float]] = None,
) -> RcmResult:
    """Subgradient descent on margin loss over edges plus the text-similarity
    quadratic pull. Edges are oriented easy -> hard; theta starts at zero.
    """
    if iters <= 0:
        raise ValueError(f"iters must be positive, got {iters}")
    texts = texts or {}
    nodes: set[Entity] = set(texts)
    for i, j in edges:
        nodes.add(i)
        nodes.add(j)
    theta = {n: 0.0 for n in nodes}
    if init:
        theta.update(init)
    weights = _similarity_weights(texts, k_neighbors) if texts else {}

    objective = [rcm_objective(theta, edges, weights, delta)]
    for it in range(iters):
        grad = {n: 0.0 for n in nodes}
        for i, j in edges:
            if delta - (theta[j] - theta[i]) > 0.0:
                grad[i] += 1.0
                grad[j] -= 1.0
        for (i, j), w in weights.items():
            g = 2.0 * w * (theta[j] - theta[i])
            grad[j] += g
            grad[i] -= g
        for n in nodes:
            theta[n] -= gamma * grad[n]
        if (it + 1) % 10 == 0 or it + 1 == iters:
            objective.append(rcm_objective(theta, edges, weights, delta))
    return RcmResult(theta=theta, objective=objective)


def rcm_score_table(result: RcmResult) -> ScoreTable:
    scores = {n: v for n, v in result.theta.items() if isinstance(n, int)}
    return ScoreTable(scores=scores, source="RCM")


# --- prediction from score tables ---------------------------------------------

def score_table_predict(
    table: ScoreTable,
    a: int,
    b: int,
    times: Optional[dict[int, float]] = None,
) -> Verdict:
    """Higher score is harder; exact ties use the shared later-posted rule."""
    for qid in (a, b):
        if qid not in table.scores:
            raise KeyError(f"question {qid} missing from {table.source} scores")
    margin = (table.scores[b] - table.scores[a]) / 2.0
    if margin > 0:
        harder = b
    elif margin < 0:
        harder = a
    else:
        harder = resolve_tie(a, b, times)
    return Verdict(harder=harder, confidence=_sigmoid(abs(margin)), margin=margin)


def evaluate_predictor(
    predict: Callable[[int, int], Verdict],
    labeled_pairs: Sequence[tuple[tuple[int, int], int]],
) -> EvalReport:
    from .model import binary_f1, rank_auc

    actual, predicted, margins = [], [], []
    for (a, b), harder in labeled_pairs:
        verdict = predict(a, b)
        actual.append(harder == b)
        predicted.append(verdict.harder == b)
        margins.append(verdict.margin)
    f1, precision, recall = binary_f1(actual, predicted)
    return EvalReport(f1=f1, auc=rank_auc(margins, actual),
                      precision=precision, recall=recall, n=len(labeled_pairs))


# --- cross-network evaluation matrix ------------------------------------------

ScorerFit = Callable[[GenericGraph], Callable[[int, int], Verdict]]


def scorer_pagerank(times: Optional[dict[int, float]] = None) -> ScorerFit:
    def fit(graph: GenericGraph):
        table = pagerank_scores(graph.nodes, graph.edges)
        return lambda a, b: score_table_predict(table, a, b, times)
    return fit


def scorer_hits(times: Optional[dict[int, float]] = None) -> ScorerFit:
    def fit(graph: GenericGraph):
        table = hits_authority(graph.nodes, graph.edges)
        return lambda a, b: score_table_predict(table, a, b, times)
    return fit


def scorer_elo(times: Optional[dict[int, float]] = None) -> ScorerFit:
    def fit(graph: GenericGraph):
        # easy->hard edges replayed as competitions won by the harder end
        ratings = elo_scores([(b, a) for a, b in graph.edges])
        table = ScoreTable(
            scores={n: ratings.get(n, 0.0) for n in graph.nodes if isinstance(n, int)},
            source="TrueskillSurrogate",
        )
        return lambda a, b: score_table_predict(table, a, b, times)
    return fit


def scorer_rcm(
    texts: Optional[dict[Entity, set[str]]] = None,
    times: Optional[dict[int, float]] = None,
    k_neighbors: int = 10,
    delta: float = 1.0,
    gamma: float = 0.001,
    iters: int = 2000,
) -> ScorerFit:
    def fit(graph: GenericGraph):
        result = rcm_train(graph.edges, texts, k_neighbors, delta, gamma, iters)
        table = rcm_score_table(result)
        full = {n: table.scores.get(n, result.theta.get(n, 0.0)) for n in graph.nodes
                if isinstance(n, int)}
        table = ScoreTable(scores=full, source="RCM")
        return lambda a, b: score_table_predict(table, a, b, times)
    return fit


def scorer_classifier(
    ds: Dataset,
    corpus: Optional[ReferenceCorpus] = None,
    config: Optional[TrainConfig] = None,
    times: Optional[dict[int, float]] = None,
) -> ScorerFit:
    """The full feature + classifier pipeline, retrained per network."""
    def fit(graph: GenericGraph):
        net = graph.question_network(ds)
        cache = compute_cache(net, ds, corpus)
        model = train(make_training_set(net, cache), config)
        return lambda a, b: predict_pair(model, cache, a, b, times)
    return fit


def cross_matrix(
    networks: Sequence[GenericGraph],
    scorers: Sequence[tuple[str, ScorerFit]],
    test_pairs: Sequence[tuple[tuple[int, int], int]],
) -> dict[tuple[str, str], EvalReport]:
    """Every scorer fitted on every network, evaluated on shared test pairs."""
    grid: dict[tuple[str, str], EvalReport] = {}
    for graph in networks:
        for scorer_name, fit in scorers:
            predictor = fit(graph)
            grid[(graph.name, scorer_name)] = evaluate_predictor(predictor, test_pairs)
    return grid
