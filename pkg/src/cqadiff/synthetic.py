"""Synthetic benchmark with a planted difficulty order.

The generator plants a latent total order over questions and emits a dataset
told from that order: each user occupies a skill band and asks questions
around it, questions are answered by users from higher bands, reputations
grow with skill, and posting times follow the planted order up to a jitter
amplitude. The hypothesis edge builders run on the emitted dataset, so edge
consistency with the plant is an emergent, measurable quantity; the jitter is
tuned by bisection until that consistency lands on the requested target.
Held-out pairs labeled by the plant then give the pipeline an objective test
bed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import AnswerRecord, Dataset, QuestionRecord, UserRecord, assign_buckets
from .network import DifficultyNetwork, build_network

_VOCAB = (
    "array loop thread cache index heap stack queue parser lambda socket "
    "buffer pointer branch merge hash tree graph token stream mutex atomic "
    "vector matrix kernel driver packet cursor schema shard replica batch "
    "tensor module plugin macro struct tuple string float integer boolean "
    "regex query route proxy latch fence epoch quorum ledger digest cipher"
).split()


@dataclass
class SyntheticBenchmark:
    dataset: Dataset
    network: DifficultyNetwork
    latent: dict[int, int]            # qid -> planted difficulty rank (1 = easiest)
    consistency: float                # share of edges agreeing with the plant
    jitter: float
    test_pairs: list[tuple[tuple[int, int], int]]
    times: dict[int, float]


@dataclass
class _Draws:
    """All random draws, frozen once so jitter tuning re-times the same world."""

    latent_by_slot: np.ndarray
    jitter_unit: np.ndarray
    owner_mix_roll: np.ndarray
    owner_rand: np.ndarray
    answered_slot: np.ndarray
    answerer_roll: np.ndarray
    answerer_bad_roll: np.ndarray
    accept_roll: np.ndarray
    vote_roll: np.ndarray
    delay_days: np.ndarray
    rep_noise: np.ndarray
    word_rolls: np.ndarray


def _draw(rng: np.random.Generator, n_questions: int, n_users: int, n_answers: int) -> _Draws:
    return _Draws(
        latent_by_slot=rng.permutation(n_questions) + 1,
        jitter_unit=rng.uniform(-1.0, 1.0, size=n_questions),
        owner_mix_roll=rng.uniform(size=n_questions),
        owner_rand=rng.integers(0, n_users, size=n_questions),
        answered_slot=rng.integers(0, n_questions, size=n_answers),
        answerer_roll=rng.uniform(size=n_answers),
        answerer_bad_roll=rng.uniform(size=n_answers),
        accept_roll=rng.uniform(size=n_answers),
        vote_roll=rng.uniform(size=n_answers),
        delay_days=rng.exponential(1.0, size=n_answers),
        rep_noise=rng.uniform(0.0, 10.0, size=n_users),
        word_rolls=rng.integers(0, len(_VOCAB), size=(n_questions + n_answers, 10)),
    )


def _emit_dataset(
    draws: _Draws,
    jitter: float,
    contrarian_share: float,
    n_users: int,
    n_buckets: int,
    bucket_weeks: int,
    accept_prob: float,
    owner_mix: float = 0.15,
) -> tuple[Dataset, dict[int, int]]:
    n_questions = len(draws.latent_by_slot)
    time_score = draws.latent_by_slot + jitter * draws.jitter_unit
    posting_order = np.argsort(time_score, kind="stable")

    span = n_buckets * bucket_weeks * 7 * 86400
    lo, hi = float(time_score.min()), float(time_score.max())
    scale = span / (hi - lo) if hi > lo else 0.0
    epoch0 = 1_300_000_000.0

    def band_of(latent_rank: int) -> int:
        return (latent_rank - 1) * n_users // n_questions

    ds = Dataset(bucket_width_weeks=bucket_weeks)
    latent: dict[int, int] = {}
    qid_by_slot = np.empty(n_questions, dtype=int)
    for pos, slot in enumerate(posting_order):
        qid = pos + 1  # ids increase with posting time, like dump ids
        qid_by_slot[slot] = qid
        rank = int(draws.latent_by_slot[slot])
        # users sit in skill bands and mostly ask questions from their band
        owner = band_of(rank)
        if draws.owner_mix_roll[slot] < owner_mix:
            owner = int(draws.owner_rand[slot])
        words = [_VOCAB[w] for w in draws.word_rolls[slot][:8]]
        ds.questions[qid] = QuestionRecord(
            question_id=qid,
            owner=owner,
            created_at=epoch0 + (float(time_score[slot]) - lo) * scale,
            tags=frozenset({"synthetic"}),
            title=" ".join(words[:4]),
            body=" ".join(words),
        )
        latent[qid] = rank

    for uid in range(n_users):
        ds.users[uid] = UserRecord(
            user_id=uid,
            account_id=10_000 + uid,
            reputation=int(20 * (uid + 1) + draws.rep_noise[uid]),
            registration_time=epoch0,
        )

    n_answers = len(draws.answered_slot)
    for i in range(n_answers):
        slot = int(draws.answered_slot[i])
        qid = int(qid_by_slot[slot])
        q = ds.questions[qid]
        # answers normally come from users above the question's skill band; a
        # tunable share are upvoted drive-by answers from the band just below,
        # whose slightly-earlier (and easier) questions fall into the type-2
        # window and contradict the plant
        q_band = band_of(latent[qid])
        contrarian = draws.answerer_bad_roll[i] < contrarian_share
        if contrarian:
            answerer = max(q_band - 1, 0)
        else:
            n_above = n_users - 1 - q_band
            if n_above > 0:
                answerer = q_band + 1 + int(draws.answerer_roll[i] * n_above)
            else:
                answerer = n_users - 1
        if answerer == q.owner:
            continue
        aid = n_questions + 1 + i
        # contrarian answers are vote-correct only, so acceptance metadata
        # stays aligned with the plant
        accepted = (
            not contrarian
            and q.accepted_answer_id is None
            and draws.accept_roll[i] < accept_prob
        )
        # harder questions take longer to get their accepted answer
        delay_days = (
            0.2 + 3.0 * latent[qid] / n_questions + 0.3 * float(draws.delay_days[i])
        )
        if contrarian:
            score = 1 + int(draws.vote_roll[i] * 5)
        else:
            # ~20% of non-accepted answers carry no votes and create no edges
            score = 0 if (not accepted and draws.vote_roll[i] < 0.2) else 1 + int(draws.vote_roll[i] * 5)
        words = [_VOCAB[w] for w in draws.word_rolls[n_questions + i]]
        ds.answers[aid] = AnswerRecord(
            answer_id=aid,
            parent_question=qid,
            owner=answerer,
            created_at=q.created_at + delay_days * 86400.0,
            score=score,
            is_accepted=accepted,
            body=" ".join(words),
        )
        if accepted:
            q.accepted_answer_id = aid
    return assign_buckets(ds, bucket_weeks), latent


def edge_consistency(net: DifficultyNetwork, latent: dict[int, int]) -> float:
    """Share of edges pointing up the planted order."""
    if not net.edges:
        return 1.0
    good = sum(1 for a, b in net.edges if latent[b] > latent[a])
    return good / len(net.edges)


def make_benchmark(
    n_questions: int = 600,
    n_users: int = 40,
    n_answers: int = 3000,
    target_consistency: float = 0.90,
    tolerance: float = 0.01,
    jitter: float = 20.0,
    delta_t: int = 1,
    bucket_weeks: int = 2,
    n_buckets: int = 40,
    accept_prob: float = 0.7,
    n_test_pairs: int = 500,
    seed: int = 7,
) -> SyntheticBenchmark:
    """Generate the benchmark, tuning the share of out-of-band answer events
    until the built network's edge consistency is within ``tolerance`` of the
    target (bisection: more noisy answer events mean more edges violating the
    plant). ``jitter`` controls how far posting times stray from the plant and
    stays fixed."""
    rng = np.random.default_rng(seed)
    draws = _draw(rng, n_questions, n_users, n_answers)

    def build(contrarian_share: float):
        ds, latent = _emit_dataset(draws, jitter, contrarian_share, n_users,
                                   n_buckets, bucket_weeks, accept_prob)
        net = build_network(ds, delta_t=delta_t)
        return ds, latent, net, edge_consistency(net, latent)

    lo, hi = 0.0, 1.0
    best = None
    for _ in range(24):
        mid = (lo + hi) / 2.0
        ds, latent, net, consistency = build(mid)
        if best is None or abs(consistency - target_consistency) < abs(best[4] - target_consistency):
            best = (ds, latent, net, mid, consistency)
        if abs(consistency - target_consistency) <= tolerance:
            break
        if consistency > target_consistency:
            lo = mid
        else:
            hi = mid
    ds, latent, net, contrarian_share, consistency = best

    qids = sorted(ds.questions)
    test_pairs: list[tuple[tuple[int, int], int]] = []
    pair_rng = np.random.default_rng(seed + 1)
    seen: set[tuple[int, int]] = set()
    while len(test_pairs) < n_test_pairs:
        i, j = pair_rng.choice(len(qids), size=2, replace=False)
        a, b = qids[i], qids[j]
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        harder = a if latent[a] > latent[b] else b
        test_pairs.append(((a, b), harder))

    return SyntheticBenchmark(
        dataset=ds,
        network=net,
        latent=latent,
        consistency=consistency,
        jitter=jitter,
        test_pairs=test_pairs,
        times={qid: q.created_at for qid, q in ds.questions.items()},
    )
