"""Shared fixtures: toy embedding stores, synthetic corpora, mock endpoints."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from privtext.corpus import Corpus, Document
from privtext.embeddings import EmbeddingStore

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def toy_store() -> EmbeddingStore:
    """Five 2-D words in a unit-scale box."""
    words = ["cat", "dog", "fish", "bird", "cow"]
    matrix = np.array(
        [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [0.5, 0.5],
        ]
    )
    return EmbeddingStore(words, matrix)


def make_corpus(n_docs=10, n_authors=2, words=("alpha", "beta", "gamma"), seed=0, labels=None):
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_docs):
        author = f"author{i % n_authors}"
        text = " ".join(rng.choice(words, size=8))
        label = None if labels is None else labels[i % len(labels)]
        docs.append(Document.from_text(id=f"d{i}", author_id=author, text=text, label=label))
    return Corpus(name="synthetic", documents=tuple(docs))


@pytest.fixture
def small_corpus() -> Corpus:
    return make_corpus()


class MockChatHandler(BaseHTTPRequestHandler):
    """Scripted OpenAI-style chat-completions endpoint.

    The server instance carries `script`, a callable
    (target_text, call_index) -> (status, body_dict_or_text). Deterministic by
    construction so replayed runs produce identical artifacts.
    """

    def log_message(self, *args):  # keep test output quiet
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        prompt = body["messages"][0]["content"]
        marker = "\nnoisy_text: "
        idx = prompt.rfind(marker)
        target = prompt[idx + len(marker):].split("\n")[0] if idx >= 0 else ""
        with self.server.lock:
            call_index = self.server.calls.get(target, 0)
            self.server.calls[target] = call_index + 1
            self.server.total_calls += 1
        status, payload = self.server.script(target, call_index)
        raw = payload if isinstance(payload, (bytes, str)) else json.dumps(payload)
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


def completion_body(content: str) -> dict:
    return {"choices": [{"message": {"content": content}}]}


def echo_reconstruction(target: str, call_index: int):
    return 200, completion_body(f"Output:::\nClean Text: clean {target}")


class MockChatServer:
    def __init__(self, script=echo_reconstruction):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), MockChatHandler)
        self.httpd.script = script
        self.httpd.calls = {}
        self.httpd.total_calls = 0
        self.httpd.lock = threading.Lock()
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/v1"

    @property
    def total_calls(self) -> int:
        return self.httpd.total_calls

    def reset_counts(self):
        with self.httpd.lock:
            self.httpd.calls = {}
            self.httpd.total_calls = 0

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def mock_chat():
    server = MockChatServer()
    yield server
    server.close()


def hash_embedding(text: str, dim: int = 6) -> list[float]:
    """Deterministic pseudo-embedding for fixture files in tests."""
    import hashlib

    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=dim * 2).digest()
    vec = np.frombuffer(digest, dtype=np.uint16).astype(np.float64)
    vec = vec / 65535.0 + 0.01
    return [float(x) for x in vec]


def write_fixture_for_texts(path: Path, texts: list[str], dim: int = 6) -> None:
    fixture = {
        "model_ids": {"embed": "fixture-embed", "perplexity": "fixture-ppl"},
        "embeddings": {t: hash_embedding(t, dim) for t in texts},
        "perplexities": {t: 10.0 + (len(t) % 7) for t in texts},
    }
    path.write_text(json.dumps(fixture), encoding="utf-8")
