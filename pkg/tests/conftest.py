import json
from datetime import datetime, timezone

import numpy as np
import pytest

from cqadiff.features import compute_cache
from cqadiff.ingest import (
    AnswerRecord,
    Dataset,
    QuestionRecord,
    UserRecord,
    assign_buckets,
)
from cqadiff.model import make_training_set, train
from cqadiff.synthetic import make_benchmark

WEEK = 7 * 86400
EPOCH = 1_200_000_000.0


def bucket_time(bucket: int, offset_s: float = 0.0, width_weeks: int = 2) -> float:
    return EPOCH + bucket * width_weeks * WEEK + offset_s


def make_example_scenario() -> Dataset:
    """Two askers; the second user answers the first user's middle question.

    Question posting buckets: first asker 0/2/4, second asker 0/1/3/4; the
    answer to the bucket-2 question is accepted. Ids: asker one -> 101..103,
    asker two -> 201..204.
    """
    ds = Dataset()
    ds.users = {
        1: UserRecord(user_id=1, reputation=50, registration_time=EPOCH),
        2: UserRecord(user_id=2, reputation=500, registration_time=EPOCH),
    }
    r_buckets = {101: 0, 102: 2, 103: 4}
    b_buckets = {201: 0, 202: 1, 203: 3, 204: 4}
    for qid, bucket in r_buckets.items():
        ds.questions[qid] = QuestionRecord(
            question_id=qid, owner=1, created_at=bucket_time(bucket, qid),
            tags=frozenset({"topic"}), title=f"question {qid}",
        )
    for qid, bucket in b_buckets.items():
        ds.questions[qid] = QuestionRecord(
            question_id=qid, owner=2, created_at=bucket_time(bucket, qid),
            tags=frozenset({"topic"}), title=f"question {qid}",
        )
    ds.questions[102].accepted_answer_id = 900
    ds.answers[900] = AnswerRecord(
        answer_id=900, parent_question=102, owner=2,
        created_at=bucket_time(2, 5000), score=3, is_accepted=True,
    )
    return assign_buckets(ds, 2)


@pytest.fixture
def example_scenario() -> Dataset:
    return make_example_scenario()


def random_dataset(rng: np.random.Generator, max_posts: int = 50) -> Dataset:
    """Small random dataset exercising every edge rule, for oracle tests."""
    n_users = int(rng.integers(2, 6))
    n_questions = int(rng.integers(2, max(3, max_posts // 2)))
    max_answers = max(1, max_posts - n_questions)
    n_answers = int(rng.integers(0, max_answers + 1))
    ds = Dataset()
    for uid in range(n_users):
        ds.users[uid] = UserRecord(user_id=uid, reputation=int(rng.integers(0, 100)))
    for i in range(n_questions):
        qid = i + 1
        owner = int(rng.integers(0, n_users))
        if rng.random() < 0.05:
            owner = None  # anonymous posts never get hypothesis edges
        ds.questions[qid] = QuestionRecord(
            question_id=qid,
            owner=owner,
            created_at=EPOCH + float(rng.integers(0, 10 * 2 * WEEK)),
            tags=frozenset({"t"}),
        )
    for j in range(n_answers):
        aid = 1000 + j
        parent = int(rng.integers(1, n_questions + 1))
        q = ds.questions[parent]
        owner = int(rng.integers(0, n_users))
        if rng.random() < 0.05:
            owner = None
        accepted = q.accepted_answer_id is None and rng.random() < 0.4
        ds.answers[aid] = AnswerRecord(
            answer_id=aid,
            parent_question=parent,
            owner=owner,
            created_at=q.created_at + float(rng.integers(0, 5 * 86400)),
            score=int(rng.integers(-2, 5)),
            is_accepted=accepted,
        )
        if accepted:
            q.accepted_answer_id = aid
    return assign_buckets(ds, 2)


def random_digraph(rng: np.random.Generator, max_nodes: int = 12):
    """(nodes, edge set) with random sparse direction structure."""
    n = int(rng.integers(1, max_nodes + 1))
    nodes = list(range(1, n + 1))
    edges = set()
    for a in nodes:
        for b in nodes:
            if a != b and rng.random() < 0.25:
                edges.add((a, b))
    return nodes, edges


# --- shared trained benchmark (expensive; built once per session) -----------


@pytest.fixture(scope="session")
def bench():
    return make_benchmark()


@pytest.fixture(scope="session")
def bench_cache(bench):
    return compute_cache(bench.network, bench.dataset)


@pytest.fixture(scope="session")
def bench_model(bench, bench_cache):
    return train(make_training_set(bench.network, bench_cache))


# --- dump-file fixtures ------------------------------------------------------


def iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3]


def write_jsonl_dumps(ds: Dataset, posts_path, users_path) -> None:
    """Dataset as the newline-delimited dump-equivalent fixture format."""
    with open(posts_path, "w", encoding="utf-8") as fh:
        for q in sorted(ds.questions.values(), key=lambda q: q.question_id):
            row = {
                "Id": q.question_id, "PostTypeId": 1,
                "CreationDate": iso(q.created_at),
                "Tags": "".join(f"<{t}>" for t in sorted(q.tags)),
                "Title": q.title, "Body": q.body,
            }
            if q.owner is not None:
                row["OwnerUserId"] = q.owner
            if q.accepted_answer_id is not None:
                row["AcceptedAnswerId"] = q.accepted_answer_id
            fh.write(json.dumps(row) + "\n")
        for a in sorted(ds.answers.values(), key=lambda a: a.answer_id):
            row = {
                "Id": a.answer_id, "PostTypeId": 2,
                "ParentId": a.parent_question,
                "CreationDate": iso(a.created_at), "Score": a.score,
                "Body": a.body,
            }
            if a.owner is not None:
                row["OwnerUserId"] = a.owner
            fh.write(json.dumps(row) + "\n")
    with open(users_path, "w", encoding="utf-8") as fh:
        for u in sorted(ds.users.values(), key=lambda u: u.user_id):
            fh.write(json.dumps({
                "Id": u.user_id, "Reputation": u.reputation,
                "AccountId": u.account_id,
                "CreationDate": iso(u.registration_time),
            }) + "\n")
