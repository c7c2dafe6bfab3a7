"""HTTP service exposing pair prediction and the feedback loop.

Endpoints (JSON over HTTP/1.1):

* ``POST /v1/predict``  {"question_a": id|url, "question_b": id|url,
  "text_a"?: str, "text_b"?: str} -> {"harder", "confidence", "cold_start_used"}
* ``POST /v1/feedback`` {"question_a", "question_b", "user_says_harder"}
  -> {"accepted": bool}
* ``GET /v1/health``    -> {"status": "ok", ...}

Reads share an immutable model reference; feedback updates run behind a
single writer lock and swap in a fresh model snapshot, so readers never see a
partially updated model. Environment variables ``CQADIFF_PORT``,
``CQADIFF_SNAPSHOT_DIR`` and ``CQADIFF_CONFIDENCE_THRESHOLD`` override the
corresponding settings.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import signal
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .coldstart import TextEmbeddingIndex, is_brand_new, predict_cold_pair
from .features import NodeScoreCache, load_cache, save_cache
from .ingest import Dataset
from .model import (
    CONFIDENCE_THRESHOLD,
    ColdStartRequired,
    PairClassifier,
    incremental_update,
    load_model,
    predict_pair,
    save_model,
)
from .network import DifficultyNetwork, load_network, save_network

log = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "cqadiff-snapshot"
SNAPSHOT_VERSION = 1

_QUESTION_URL_RE = re.compile(r"/q(?:uestions)?/(\d+)")


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


class SnapshotError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def parse_question_ref(ref) -> int:
    """Question id from a raw int, digit string, or question URL."""
    if isinstance(ref, int):
        return ref
    if isinstance(ref, str):
        text = ref.strip()
        if text.isdigit():
            return int(text)
        match = _QUESTION_URL_RE.search(text)
        if match:
            return int(match.group(1))
        trailing = re.findall(r"\d+", text)
        if trailing:
            return int(trailing[-1])
    raise ServiceError(400, "bad_question_ref", f"cannot parse question reference {ref!r}")


class PredictionService:
    """Shared state behind the HTTP handlers; usable directly in tests."""

    def __init__(
        self,
        model: PairClassifier,
        dataset: Dataset,
        network: DifficultyNetwork,
        cache: NodeScoreCache,
        confidence_threshold: float = CONFIDENCE_THRESHOLD,
        k_neighbors: int = 5,
        embedding_index: Optional[TextEmbeddingIndex] = None,
    ):
        self.dataset = dataset
        self.network = network
        self.cache = cache
        self.confidence_threshold = confidence_threshold
        self.k_neighbors = k_neighbors
        self.times = {qid: q.created_at for qid, q in dataset.questions.items()}
        self._model = model
        self._write_lock = threading.Lock()
        self._index = embedding_index
        self.model_revision = 0
        self.rejected_count = 0
        self.feedback_log: list[dict] = []

    @property
    def model(self) -> PairClassifier:
        return self._model

    def _embedding_index(self) -> TextEmbeddingIndex:
        if self._index is None:
            self._index = TextEmbeddingIndex.from_dataset(self.dataset)
        return self._index

    def _needs_cold_path(self, qid: int) -> bool:
        if qid not in self.cache:
            return True
        return is_brand_new(self.network, self.cache, qid)

    def predict(self, ref_a, ref_b, text_a: Optional[str] = None,
                text_b: Optional[str] = None) -> dict:
        a = parse_question_ref(ref_a)
        b = parse_question_ref(ref_b)
        if a == b:
            raise ServiceError(400, "identical_pair", "need two distinct questions")
        model = self._model  # one consistent model per request
        texts: dict[int, str] = {}
        times = dict(self.times)
        horizon = max(times.values(), default=0.0)
        for qid, text in ((a, text_a), (b, text_b)):
            if qid in self.cache:
                continue
            if text is None:
                raise ServiceError(
                    404, "unknown_question",
                    f"question {qid} is not in the dataset and no text was supplied",
                )
            texts[qid] = text
            # externally supplied questions are the newest posts by definition
            horizon += 1.0
            times[qid] = horizon

        if not texts and not self._needs_cold_path(a) and not self._needs_cold_path(b):
            verdict = predict_pair(model, self.cache, a, b, times)
            cold = False
        else:
            verdict = predict_cold_pair(
                model, self.cache, a, b, self.k_neighbors,
                net=self.network, ds=self.dataset,
                index=self._embedding_index(), times=times,
                external_texts=texts,
            )
            cold = True
        return {
            "harder": verdict.harder,
            "confidence": verdict.confidence,
            "cold_start_used": cold,
        }

    def feedback(self, ref_a, ref_b, harder_ref) -> dict:
        a = parse_question_ref(ref_a)
        b = parse_question_ref(ref_b)
        harder = parse_question_ref(harder_ref)
        if harder not in (a, b):
            raise ServiceError(400, "bad_label",
                               f"user_says_harder must be {a} or {b}")
        if a == b:
            raise ServiceError(400, "identical_pair", "need two distinct questions")
        for qid in (a, b):
            if self._needs_cold_path(qid):
                raise ServiceError(409, "cold_start",
                                   f"question {qid} has no trainable features")
        with self._write_lock:
            try:
                result = incremental_update(
                    self._model, self.cache, ((a, b), harder), self.times,
                    confidence_threshold=self.confidence_threshold,
                )
            except ColdStartRequired as exc:
                raise ServiceError(409, "cold_start", str(exc)) from exc
            if result.accepted:
                self._model = result.model  # atomic reference swap
                self.model_revision += 1
            else:
                self.rejected_count += 1
            self.feedback_log.append({
                "time": time.time(),
                "pair": [a, b],
                "user_says_harder": harder,
                "model_said_harder": result.verdict.harder,
                "confidence": result.verdict.confidence,
                "accepted": result.accepted,
            })
        return {"accepted": result.accepted}

    def health(self) -> dict:
        return {
            "status": "ok",
            "questions": len(self.dataset.questions),
            "edges": self.network.n_edges,
            "model_revision": self.model_revision,
            "rejected_feedback": self.rejected_count,
            "confidence_threshold": self.confidence_threshold,
        }

    # --- persistence -------------------------------------------------------

    def snapshot(self, directory: str | Path) -> Path:
        """Write model+network+cache with a checksum manifest (manifest last,
        so a torn write is never restorable)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._write_lock:
            model = self._model
            revision = self.model_revision
            parts = {}
            for name, writer in (
                ("model.json", lambda p: save_model(model, p)),
                ("network.tsv", lambda p: save_network(self.network, p)),
                ("cache.tsv", lambda p: save_cache(self.cache, p)),
            ):
                tmp = directory / (name + ".tmp")
                writer(tmp)
                os.replace(tmp, directory / name)
                digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
                parts[name] = digest
            manifest = {
                "format": SNAPSHOT_FORMAT,
                "version": SNAPSHOT_VERSION,
                "revision": revision,
                "confidence_threshold": self.confidence_threshold,
                "sha256": parts,
            }
            tmp = directory / "manifest.json.tmp"
            tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True),
                           encoding="utf-8")
            os.replace(tmp, directory / "manifest.json")
            if self.feedback_log:
                with open(directory / "feedback.log", "a", encoding="utf-8") as fh:
                    for entry in self.feedback_log:
                        fh.write(json.dumps(entry, sort_keys=True) + "\n")
                self.feedback_log.clear()
        return directory / "manifest.json"


def restore_snapshot(directory: str | Path) -> tuple[PairClassifier, DifficultyNetwork, NodeScoreCache, dict]:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise SnapshotError("missing_manifest", f"no manifest in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError("corrupt_manifest", str(exc)) from exc
    if manifest.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError("bad_format", f"{directory} is not a service snapshot")
    if manifest.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(
            "version_mismatch",
            f"snapshot version {manifest.get('version')} != {SNAPSHOT_VERSION}",
        )
    for name, expected in manifest["sha256"].items():
        blob = (directory / name).read_bytes()
        if hashlib.sha256(blob).hexdigest() != expected:
            raise SnapshotError("checksum_mismatch", f"{name} is corrupt")
    model = load_model(directory / "model.json")
    network = load_network(directory / "network.tsv")
    cache = load_cache(directory / "cache.tsv")
    return model, network, cache, manifest


# --- HTTP plumbing ----------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "cqadiff"

    @property
    def service(self) -> PredictionService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise ServiceError(400, "bad_json", f"request body is not JSON: {exc}")
        if not isinstance(payload, dict):
            raise ServiceError(400, "bad_json", "request body must be a JSON object")
        return payload

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, self.service.health())
            return
        if self._serve_static():
            return
        self._send_json(404, {"error": "not_found", "detail": self.path})

    def do_POST(self):
        try:
            payload = self._read_json()
            if self.path == "/v1/predict":
                result = self.service.predict(
                    payload.get("question_a"), payload.get("question_b"),
                    payload.get("text_a"), payload.get("text_b"),
                )
                self._send_json(200, result)
            elif self.path == "/v1/feedback":
                result = self.service.feedback(
                    payload.get("question_a"), payload.get("question_b"),
                    payload.get("user_says_harder"),
                )
                self._send_json(200, result)
            else:
                self._send_json(404, {"error": "not_found", "detail": self.path})
        except ServiceError as exc:
            self._send_json(exc.status, {"error": exc.code, "detail": str(exc)})
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("unhandled service error")
            self._send_json(500, {"error": "internal", "detail": str(exc)})

    def _serve_static(self) -> bool:
        root = getattr(self.server, "static_dir", None)
        if root is None:
            return False
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (Path(root) / rel).resolve()
        if not str(target).startswith(str(Path(root).resolve())) or not target.is_file():
            return False
        ctype = {
            ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
            ".json": "application/json", ".png": "image/png", ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True


class ServiceServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, service: PredictionService, port: int,
                 static_dir: Optional[str | Path] = None, host: str = "127.0.0.1"):
        super().__init__((host, port), _Handler)
        self.service = service
        self.static_dir = static_dir


def serve_forever(
    service: PredictionService,
    port: int,
    snapshot_dir: Optional[str | Path] = None,
    snapshot_interval: float = 300.0,
    static_dir: Optional[str | Path] = None,
    host: str = "127.0.0.1",
) -> None:
    """Run the HTTP server until interrupted; snapshots on a timer and at
    shutdown when a snapshot directory is configured."""
    server = ServiceServer(service, port, static_dir=static_dir, host=host)
    stop = threading.Event()

    def snapshot_loop():
        while not stop.wait(snapshot_interval):
            try:
                service.snapshot(snapshot_dir)
                log.info("periodic snapshot written to %s", snapshot_dir)
            except Exception:
                log.exception("periodic snapshot failed")

    if snapshot_dir is not None:
        threading.Thread(target=snapshot_loop, daemon=True).start()

    def _sigterm(_signum, _frame):
        raise KeyboardInterrupt

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, _sigterm)
    log.info("serving on %s:%d", host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        server.shutdown()
        server.server_close()
        if snapshot_dir is not None:
            service.snapshot(snapshot_dir)
            log.info("final snapshot written to %s", snapshot_dir)
