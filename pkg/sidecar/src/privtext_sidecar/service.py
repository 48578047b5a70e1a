"""HTTP JSON service: POST /embed, POST /perplexity, GET /health.

Single-worker model inference behind the server's request handling; the
service is stateless apart from the optional fixture recorder, which dumps
every served (text -> result) pair in the replay format the privtext
evaluation suite consumes.
"""

from __future__ import annotations

import argparse
import json
import os
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from privtext_sidecar.models import (
    FALLBACK_EMBED,
    FALLBACK_PERPLEXITY,
    ModelRegistry,
)


class FixtureRecorder:
    """Accumulates served responses into a replay fixture file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.data = {
            "model_ids": {"embed": FALLBACK_EMBED, "perplexity": FALLBACK_PERPLEXITY},
            "embeddings": {},
            "perplexities": {},
        }

    def record_embeddings(self, texts, vectors, model_id) -> None:
        with self._lock:
            self.data["model_ids"]["embed"] = model_id
            for text, vec in zip(texts, vectors):
                self.data["embeddings"][text] = [float(x) for x in vec]
            self._flush()

    def record_perplexities(self, texts, scores, model_id) -> None:
        with self._lock:
            self.data["model_ids"]["perplexity"] = model_id
            for text, score in zip(texts, scores):
                self.data["perplexities"][text] = float(score)
            self._flush()

    def _flush(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, self.path)


class ScoringHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _json(self, status: int, payload: dict) -> None:
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def do_GET(self):
        if self.path != "/health":
            self._json(404, {"error": f"no such route: {self.path}"})
            return
        if not self.server.ready.is_set():
            self._json(503, {"status": "loading", "models_loaded": []})
            return
        self._json(
            200,
            {
                "status": "ok",
                "models_loaded": self.server.registry.loaded_ids(),
                "load_errors": self.server.registry.load_errors,
            },
        )

    def _read_texts(self):
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._json(400, {"error": "body must be JSON"})
            return None, None
        texts = body.get("texts")
        if not isinstance(texts, list) or not texts or not all(isinstance(t, str) for t in texts):
            self._json(400, {"error": "texts must be a non-empty list of strings"})
            return None, None
        return texts, body.get("model_id", "")

    def do_POST(self):
        if not self.server.ready.is_set():
            self._json(503, {"status": "loading"})
            return
        if self.path == "/embed":
            texts, model_id = self._read_texts()
            if texts is None:
                return
            model = self.server.registry.embedder(model_id or FALLBACK_EMBED)
            if model is None:
                self._json(503, {"error": f"embedding model {model_id!r} not available"})
                return
            with self.server.inference_lock:
                vectors = model.embed(texts)
            if self.server.recorder is not None:
                self.server.recorder.record_embeddings(texts, vectors, model.model_id)
            self._json(
                200,
                {"vectors": [[float(x) for x in row] for row in vectors], "model_id": model.model_id},
            )
        elif self.path == "/perplexity":
            texts, model_id = self._read_texts()
            if texts is None:
                return
            model = self.server.registry.scorer(model_id or FALLBACK_PERPLEXITY)
            if model is None:
                self._json(503, {"error": f"perplexity model {model_id!r} not available"})
                return
            with self.server.inference_lock:
                scores = model.score(texts)
            if self.server.recorder is not None:
                self.server.recorder.record_perplexities(texts, scores, model.model_id)
            self._json(200, {"scores": [float(s) for s in scores], "model_id": model.model_id})
        else:
            self._json(404, {"error": f"no such route: {self.path}"})


class ScoringServer:
    """Owns the HTTP server, registry, readiness flag, and recorder."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        strict_models: bool = False,
        record_path: str | Path | None = None,
        defer_ready: bool = False,
    ):
        self.httpd = ThreadingHTTPServer((host, port), ScoringHandler)
        self.httpd.ready = threading.Event()
        self.httpd.inference_lock = threading.Lock()
        self.httpd.recorder = FixtureRecorder(record_path) if record_path else None
        self.httpd.registry = None
        self._strict = strict_models
        self._thread: threading.Thread | None = None
        if not defer_ready:
            self.load_models()

    def load_models(self) -> None:
        self.httpd.registry = ModelRegistry(strict=self._strict)
        self.httpd.ready.set()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="privtext-sidecar", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8878)
    parser.add_argument(
        "--record", default=None, help="dump served responses into a replay fixture JSON"
    )
    parser.add_argument(
        "--strict-models",
        action="store_true",
        help="503 on unavailable model ids instead of falling back to the built-ins",
    )
    args = parser.parse_args(argv)
    server = ScoringServer(
        host=args.host,
        port=args.port,
        strict_models=args.strict_models,
        record_path=args.record,
    )
    registry = server.httpd.registry
    print(f"privtext-sidecar listening on {server.url}")
    print(f"models: {registry.loaded_ids()}")
    for model_id, err in registry.load_errors.items():
        print(f"  {model_id}: unavailable ({err.splitlines()[0][:120]})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
