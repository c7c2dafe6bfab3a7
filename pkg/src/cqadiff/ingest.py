"""Parse CQA dump files into normalized records with discrete time buckets.

Accepts Stack Exchange style ``Posts.xml`` / ``Users.xml`` dumps as well as an
equivalent newline-delimited JSON format (one flat object per line, same
attribute names) used for synthetic fixtures. Parsing is a single streaming
pass; the resulting :class:`Dataset` is immutable by convention and shared
read-only by every downstream stage.
"""

from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional

log = logging.getLogger(__name__)

SECONDS_PER_WEEK = 7 * 86400

_TAG_BRACKET_RE = re.compile(r"<([^<>]+)>")

DATASET_FORMAT = "cqadiff-dataset"
DATASET_VERSION = 1


class MalformedRowError(ValueError):
    """A dump row that cannot be interpreted (strict mode only)."""


@dataclass
class UserRecord:
    user_id: int
    account_id: Optional[int] = None
    reputation: int = 0
    registration_time: float = 0.0


@dataclass
class QuestionRecord:
    question_id: int
    owner: Optional[int]
    created_at: float
    tags: frozenset[str]
    title: str = ""
    body: str = ""
    accepted_answer_id: Optional[int] = None
    bucket: int = 0

    def text(self) -> str:
        return f"{self.title} {self.body} {' '.join(sorted(self.tags))}"


@dataclass
class AnswerRecord:
    answer_id: int
    parent_question: int
    owner: Optional[int]
    created_at: float
    score: int = 0
    is_accepted: bool = False
    body: str = ""


@dataclass
class ParseStats:
    questions: int = 0
    answers: int = 0
    skipped_rows: int = 0
    dropped_answers: int = 0
    duplicate_users: int = 0


@dataclass
class Dataset:
    questions: dict[int, QuestionRecord] = field(default_factory=dict)
    answers: dict[int, AnswerRecord] = field(default_factory=dict)
    users: dict[int, UserRecord] = field(default_factory=dict)
    bucket_width_weeks: int = 2
    epoch: float = 0.0
    stats: ParseStats = field(default_factory=ParseStats)

    def answers_for(self, question_id: int) -> list[AnswerRecord]:
        return [a for a in self.answers.values() if a.parent_question == question_id]

    def accepted_answer(self, question_id: int) -> Optional[AnswerRecord]:
        q = self.questions[question_id]
        if q.accepted_answer_id is None:
            return None
        return self.answers.get(q.accepted_answer_id)

    def reputation_of(self, user_id: Optional[int]) -> int:
        if user_id is None or user_id not in self.users:
            return 0
        return self.users[user_id].reputation


def parse_timestamp(value: str) -> float:
    """ISO-8601 creation date to UTC epoch seconds (naive treated as UTC)."""
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def parse_tags(value: str) -> frozenset[str]:
    """Both dump tag encodings: ``<t1><t2>`` and ``|t1|t2|``."""
    if not value:
        return frozenset()
    found = _TAG_BRACKET_RE.findall(value)
    if not found:
        found = [t for t in value.split("|") if t]
    return frozenset(t.strip().lower() for t in found if t.strip())


def bucketize(t: float, epoch: float, width_weeks: int) -> int:
    """Epoch-relative fixed-width bucket index; posts sharing a bucket share a posting time."""
    if width_weeks <= 0:
        raise ValueError(f"bucket width must be positive, got {width_weeks}")
    if t < epoch:
        raise ValueError(f"timestamp {t} precedes dataset epoch {epoch}")
    return int((t - epoch) // (width_weeks * SECONDS_PER_WEEK))


def _iter_rows(stream: IO) -> Iterator[dict]:
    """Yield attribute dicts from XML ``<row .../>`` elements or JSON lines.

    The container format is sniffed from the first non-whitespace character;
    text and binary streams are both accepted.
    """
    lead = None
    while True:
        ch = stream.read(1)
        if not ch:
            return
        text = ch.decode("utf-8") if isinstance(ch, bytes) else ch
        if not text.isspace():
            lead = ch
            break

    if text == "<":
        parser = ET.XMLPullParser(events=("end",))
        parser.feed(lead)
        while True:
            chunk = stream.read(1 << 16)
            if not chunk:
                break
            parser.feed(chunk)
            for _, elem in parser.read_events():
                if elem.tag == "row":
                    yield dict(elem.attrib)
                elem.clear()
        parser.close()
        for _, elem in parser.read_events():
            if elem.tag == "row":
                yield dict(elem.attrib)
    else:
        first = lead + stream.readline()
        if isinstance(first, bytes):
            first = first.decode("utf-8")
        if first.strip():
            yield json.loads(first)
        for line in stream:
            if isinstance(line, bytes):
                line = line.decode("utf-8")
            if line.strip():
                yield json.loads(line)


def _get_int(row: dict, key: str) -> Optional[int]:
    value = row.get(key)
    if value is None or value == "":
        return None
    return int(value)


def parse_posts(
    stream: IO,
    tag_filter: Iterable[str] = (),
    strict: bool = False,
) -> Dataset:
    """Parse a posts dump into a partial Dataset (users filled separately).

    Questions are retained iff their tags intersect ``tag_filter`` (an empty
    filter retains everything); answers are retained iff their parent question
    was retained. Malformed rows are skipped and counted unless ``strict``.
    """
    wanted = frozenset(t.lower() for t in tag_filter)
    ds = Dataset()
    pending_answers: list[AnswerRecord] = []

    for row in _iter_rows(stream):
        try:
            post_type = _get_int(row, "PostTypeId")
            if post_type not in (1, 2):
                continue
            post_id = _get_int(row, "Id")
            if post_id is None:
                raise MalformedRowError(f"row missing Id: {row}")
            created = parse_timestamp(row["CreationDate"])
            owner = _get_int(row, "OwnerUserId")
            if post_type == 1:
                tags = parse_tags(row.get("Tags", ""))
                if wanted and not (tags & wanted):
                    continue
                ds.questions[post_id] = QuestionRecord(
                    question_id=post_id,
                    owner=owner,
                    created_at=created,
                    tags=tags,
                    title=row.get("Title", ""),
                    body=row.get("Body", ""),
                    accepted_answer_id=_get_int(row, "AcceptedAnswerId"),
                )
            else:
                parent = _get_int(row, "ParentId")
                if parent is None:
                    raise MalformedRowError(f"answer row missing ParentId: {row}")
                pending_answers.append(
                    AnswerRecord(
                        answer_id=post_id,
                        parent_question=parent,
                        owner=owner,
                        created_at=created,
                        score=_get_int(row, "Score") or 0,
                        body=row.get("Body", ""),
                    )
                )
        except MalformedRowError:
            if strict:
                raise
            ds.stats.skipped_rows += 1
        except (KeyError, ValueError, TypeError) as exc:
            if strict:
                raise MalformedRowError(str(exc)) from exc
            ds.stats.skipped_rows += 1

    for ans in pending_answers:
        parent = ds.questions.get(ans.parent_question)
        if parent is None:
            ds.stats.dropped_answers += 1
            continue
        ans.is_accepted = parent.accepted_answer_id == ans.answer_id
        ds.answers[ans.answer_id] = ans

    ds.stats.questions = len(ds.questions)
    ds.stats.answers = len(ds.answers)
    return ds


def parse_users(stream: IO, strict: bool = False) -> dict[int, UserRecord]:
    """One record per Id; reputation defaults to 0; duplicates keep the first."""
    users: dict[int, UserRecord] = {}
    duplicates = 0
    for row in _iter_rows(stream):
        try:
            user_id = _get_int(row, "Id")
            if user_id is None:
                raise MalformedRowError(f"user row missing Id: {row}")
            if user_id in users:
                duplicates += 1
                log.warning("duplicate user id %d; keeping first occurrence", user_id)
                continue
            created = row.get("CreationDate")
            users[user_id] = UserRecord(
                user_id=user_id,
                account_id=_get_int(row, "AccountId"),
                reputation=max(0, _get_int(row, "Reputation") or 0),
                registration_time=parse_timestamp(created) if created else 0.0,
            )
        except MalformedRowError:
            if strict:
                raise
        except (KeyError, ValueError, TypeError) as exc:
            if strict:
                raise MalformedRowError(str(exc)) from exc
    return users


def assign_buckets(ds: Dataset, bucket_width_weeks: int = 2) -> Dataset:
    """Fix the dataset epoch (minimum retained post timestamp) and bucket questions."""
    ds.bucket_width_weeks = bucket_width_weeks
    times = [q.created_at for q in ds.questions.values()]
    times += [a.created_at for a in ds.answers.values()]
    ds.epoch = min(times) if times else 0.0
    for q in ds.questions.values():
        q.bucket = bucketize(q.created_at, ds.epoch, bucket_width_weeks)
    return ds


def load_dataset_from_dumps(
    posts_path: str | Path,
    users_path: Optional[str | Path] = None,
    tag_filter: Iterable[str] = (),
    bucket_width_weeks: int = 2,
    strict: bool = False,
) -> Dataset:
    with open(posts_path, "r", encoding="utf-8") as fh:
        ds = parse_posts(fh, tag_filter, strict=strict)
    if users_path is not None:
        with open(users_path, "r", encoding="utf-8") as fh:
            ds.users = parse_users(fh, strict=strict)
    return assign_buckets(ds, bucket_width_weeks)


def filter_dataset(ds: Dataset, tag_filter: Iterable[str]) -> Dataset:
    """Re-apply a tag filter to an existing dataset (idempotent for the same filter)."""
    wanted = frozenset(t.lower() for t in tag_filter)
    out = Dataset(bucket_width_weeks=ds.bucket_width_weeks)
    for qid, q in ds.questions.items():
        if wanted and not (q.tags & wanted):
            continue
        out.questions[qid] = q
    for aid, a in ds.answers.items():
        if a.parent_question in out.questions:
            out.answers[aid] = a
    out.users = dict(ds.users)
    out.stats.questions = len(out.questions)
    out.stats.answers = len(out.answers)
    return assign_buckets(out, ds.bucket_width_weeks)


# --- snapshot format -----------------------------------------------------
#
# Line-record snapshot: a JSON header line followed by one JSON object per
# record, type-tagged and sorted by id, so identical datasets serialize
# identically.


def save_dataset(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": DATASET_FORMAT,
            "version": DATASET_VERSION,
            "bucket_width_weeks": ds.bucket_width_weeks,
            "epoch": ds.epoch,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for uid in sorted(ds.users):
            u = ds.users[uid]
            fh.write(json.dumps({
                "kind": "user", "id": u.user_id, "account_id": u.account_id,
                "reputation": u.reputation, "registered": u.registration_time,
            }, sort_keys=True) + "\n")
        for qid in sorted(ds.questions):
            q = ds.questions[qid]
            fh.write(json.dumps({
                "kind": "question", "id": q.question_id, "owner": q.owner,
                "created": q.created_at, "tags": sorted(q.tags),
                "title": q.title, "body": q.body,
                "accepted": q.accepted_answer_id, "bucket": q.bucket,
            }, sort_keys=True) + "\n")
        for aid in sorted(ds.answers):
            a = ds.answers[aid]
            fh.write(json.dumps({
                "kind": "answer", "id": a.answer_id, "parent": a.parent_question,
                "owner": a.owner, "created": a.created_at, "score": a.score,
                "accepted": a.is_accepted, "body": a.body,
            }, sort_keys=True) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != DATASET_FORMAT:
            raise ValueError(f"{path}: not a dataset snapshot")
        if header.get("version") != DATASET_VERSION:
            raise ValueError(
                f"{path}: unsupported snapshot version {header.get('version')}"
            )
        ds = Dataset(
            bucket_width_weeks=header["bucket_width_weeks"],
            epoch=header["epoch"],
        )
        for line in fh:
            rec = json.loads(line)
            kind = rec["kind"]
            if kind == "user":
                ds.users[rec["id"]] = UserRecord(
                    user_id=rec["id"],
                    account_id=rec["account_id"],
                    reputation=rec["reputation"],
                    registration_time=rec["registered"],
                )
            elif kind == "question":
                ds.questions[rec["id"]] = QuestionRecord(
                    question_id=rec["id"],
                    owner=rec["owner"],
                    created_at=rec["created"],
                    tags=frozenset(rec["tags"]),
                    title=rec["title"],
                    body=rec["body"],
                    accepted_answer_id=rec["accepted"],
                    bucket=rec["bucket"],
                )
            elif kind == "answer":
                ds.answers[rec["id"]] = AnswerRecord(
                    answer_id=rec["id"],
                    parent_question=rec["parent"],
                    owner=rec["owner"],
                    created_at=rec["created"],
                    score=rec["score"],
                    is_accepted=rec["accepted"],
                    body=rec["body"],
                )
    ds.stats.questions = len(ds.questions)
    ds.stats.answers = len(ds.answers)
    return ds
