"""Directed difficulty network built from answer interactions.

Edges always point from the easier question to the harder one. Three
construction rules contribute edges:

* type 1 — a correctly answered question points at every question its
  answerer asks in strictly later buckets (forward edges);
* type 2 — it also points at the answerer's recent questions, up to
  ``delta_t`` buckets back, same bucket included (backward edges);
* type 3 — consecutive questions of one asker are chained in time order.

Parallel (from, to) duplicates collapse into a single edge carrying the union
of contributing types; opposite directions are kept and treated as label
noise downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .ingest import AnswerRecord, Dataset


class EdgeType(str, Enum):
    TYPE1 = "1"
    TYPE2 = "2"
    TYPE3 = "3"
    NOISE = "N"


NETWORK_FORMAT = "cqadiff-network"
NETWORK_VERSION = 1

EdgeMap = dict[tuple[int, int], frozenset[EdgeType]]


@dataclass
class DifficultyNetwork:
    nodes: set[int] = field(default_factory=set)
    edges: EdgeMap = field(default_factory=dict)
    bucket_width_weeks: int = 2
    delta_t: int = 1

    def __post_init__(self) -> None:
        self._out: Optional[dict[int, list[int]]] = None
        self._in: Optional[dict[int, list[int]]] = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def _build_adjacency(self) -> None:
        out: dict[int, list[int]] = {n: [] for n in self.nodes}
        inc: dict[int, list[int]] = {n: [] for n in self.nodes}
        for (a, b) in self.edges:
            out[a].append(b)
            inc[b].append(a)
        self._out, self._in = out, inc

    def out_neighbors(self, node: int) -> list[int]:
        if self._out is None:
            self._build_adjacency()
        return self._out[node]

    def in_neighbors(self, node: int) -> list[int]:
        if self._in is None:
            self._build_adjacency()
        return self._in[node]

    def undirected_degree(self, node: int) -> int:
        if node not in self.nodes:
            raise KeyError(f"unknown node {node}")
        return len(set(self.out_neighbors(node)) | set(self.in_neighbors(node)))

    def is_isolated(self, node: int) -> bool:
        return self.undirected_degree(node) == 0

    def invalidate_adjacency(self) -> None:
        self._out = self._in = None

    def copy(self) -> "DifficultyNetwork":
        return DifficultyNetwork(
            nodes=set(self.nodes),
            edges=dict(self.edges),
            bucket_width_weeks=self.bucket_width_weeks,
            delta_t=self.delta_t,
        )


def is_correct_answer(ans: AnswerRecord) -> bool:
    """Accepted, or positively voted."""
    return ans.is_accepted or ans.score > 0


def _questions_by_user(ds: Dataset) -> dict[int, list]:
    by_user: dict[int, list] = {}
    for q in ds.questions.values():
        if q.owner is None:
            continue  # anonymous questions never generate hypothesis edges
        by_user.setdefault(q.owner, []).append(q)
    for qs in by_user.values():
        qs.sort(key=lambda q: (q.created_at, q.question_id))
    return by_user


def _answer_events(ds: Dataset):
    """(answered question, answerer) pairs for correct answers by other users."""
    for ans in ds.answers.values():
        if ans.owner is None or not is_correct_answer(ans):
            continue
        parent = ds.questions.get(ans.parent_question)
        if parent is None or parent.owner is None or parent.owner == ans.owner:
            continue
        yield parent, ans.owner


def build_type1_edges(ds: Dataset) -> set[tuple[int, int]]:
    """Answered question -> every strictly-later-bucket question of the answerer."""
    by_user = _questions_by_user(ds)
    edges = set()
    for parent, answerer in _answer_events(ds):
        for q in by_user.get(answerer, ()):
            if q.bucket > parent.bucket:
                edges.add((parent.question_id, q.question_id))
    return edges


def build_type2_edges(ds: Dataset, delta_t: int) -> set[tuple[int, int]]:
    """Answered question -> the answerer's recent questions (window delta_t buckets)."""
    if delta_t < 1:
        raise ValueError(f"delta_t must be >= 1, got {delta_t}")
    by_user = _questions_by_user(ds)
    edges = set()
    for parent, answerer in _answer_events(ds):
        for q in by_user.get(answerer, ()):
            gap = parent.bucket - q.bucket
            if 0 <= gap <= delta_t:
                edges.add((parent.question_id, q.question_id))
    return edges


def build_type3_edges(ds: Dataset) -> set[tuple[int, int]]:
    """Consecutive questions of the same asker, ordered by timestamp then id."""
    edges = set()
    for qs in _questions_by_user(ds).values():
        for earlier, later in zip(qs, qs[1:]):
            edges.add((earlier.question_id, later.question_id))
    return edges


def build_network(
    ds: Dataset,
    delta_t: int = 1,
    enabled_types: Iterable[EdgeType] = (EdgeType.TYPE1, EdgeType.TYPE2, EdgeType.TYPE3),
) -> DifficultyNetwork:
    """Union of the enabled edge builders over all retained questions.

    Every retained question becomes a node; isolated nodes are kept (they are
    the cold-start candidates).
    """
    enabled = set(enabled_types)
    builders = {
        EdgeType.TYPE1: lambda: build_type1_edges(ds),
        EdgeType.TYPE2: lambda: build_type2_edges(ds, delta_t),
        EdgeType.TYPE3: lambda: build_type3_edges(ds),
    }
    edges: dict[tuple[int, int], set[EdgeType]] = {}
    for etype in (EdgeType.TYPE1, EdgeType.TYPE2, EdgeType.TYPE3):
        if etype not in enabled:
            continue
        for pair in builders[etype]():
            assert pair[0] != pair[1], "edge builders must not produce self-loops"
            edges.setdefault(pair, set()).add(etype)
    return DifficultyNetwork(
        nodes=set(ds.questions),
        edges={pair: frozenset(types) for pair, types in edges.items()},
        bucket_width_weeks=ds.bucket_width_weeks,
        delta_t=delta_t,
    )


def type_counts(net: DifficultyNetwork) -> dict[EdgeType, int]:
    counts = {t: 0 for t in EdgeType}
    for types in net.edges.values():
        for t in types:
            counts[t] += 1
    return counts


# --- edge-list serialization ----------------------------------------------

_TYPE_ORDER = "123N"


def _typeset_str(types: frozenset[EdgeType]) -> str:
    return "".join(c for c in _TYPE_ORDER if EdgeType(c) in types)


def save_network(net: DifficultyNetwork, path: str | Path) -> None:
    """Canonical edge-list text format: header, then `from<TAB>to<TAB>typeset`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {NETWORK_FORMAT} v{NETWORK_VERSION}\n")
        fh.write(f"# bucket_width_weeks={net.bucket_width_weeks}\n")
        fh.write(f"# delta_t={net.delta_t}\n")
        fh.write("# nodes=" + ",".join(str(n) for n in sorted(net.nodes)) + "\n")
        for (a, b) in sorted(net.edges):
            fh.write(f"{a}\t{b}\t{_typeset_str(net.edges[(a, b)])}\n")


def load_network(path: str | Path) -> DifficultyNetwork:
    net = DifficultyNetwork()
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {NETWORK_FORMAT} v{NETWORK_VERSION}":
            raise ValueError(f"{path}: not a network file (header {first!r})")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key == "bucket_width_weeks":
                    net.bucket_width_weeks = int(value)
                elif key == "delta_t":
                    net.delta_t = int(value)
                elif key == "nodes":
                    net.nodes = {int(n) for n in value.split(",") if n}
                continue
            a, b, typeset = line.split("\t")
            net.edges[(int(a), int(b))] = frozenset(EdgeType(c) for c in typeset)
    for (a, b) in net.edges:
        net.nodes.add(a)
        net.nodes.add(b)
    return net
