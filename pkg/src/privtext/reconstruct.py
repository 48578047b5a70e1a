"""Few-shot LLM reconstruction of sanitized texts.

Speaks the OpenAI-compatible chat-completions protocol; one client covers
hosted and proxied models. Prompt construction is a pure function pinned by a
golden-file test, and response parsing takes everything after the last
``Clean Text:`` marker with no further normalization.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from privtext.corpus import Corpus, Document, atomic_write_text

CLEAN_MARKER = "Clean Text:"

_PROMPT_HEADER = """You will be given a noisy_text document.

Your task is to understand the semantic meaning of the text and decrypt the noisy text to its original form.

It is important that the length of the text stays exactly the same. Only replace noisy words with reasonable substitutions. In some cases, words should remain the same.

It is also crucial that the output clean text is coherent and follows a cohesive narrative.

Provide your feedback as follows:

Output:::
Clean Text: (your rewritten text)

Here are some examples of how to rewrite noisy texts:
"""

_PROMPT_EXAMPLE = """
noisy_text: {noisy}

Output:::
Clean Text: {clean}
"""

_PROMPT_TARGET = """
Now here is the noisy text.

noisy_text: {target}

Output:::
Clean Text:"""


class ReconstructError(Exception):
    pass


class AuthError(ReconstructError):
    """Fatal: the endpoint rejected our credentials."""


class ParseError(ReconstructError):
    pass


@dataclass(frozen=True)
class FewShotPair:
    noisy: str
    clean: str

    def __post_init__(self):
        if not self.noisy or not self.clean:
            raise ValueError("few-shot pair texts must be non-empty")


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    temperature: float = 1.0
    max_retries: int = 3
    rate_limit_per_min: float = 60.0
    api_key_env: str = "PRIVTEXT_API_KEY"
    max_tokens: int = 1024
    timeout_s: float = 120.0
    concurrency: int = 4
    backoff_base_s: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


def build_prompt(pairs: list[FewShotPair], target: str, required_pairs: int = 3) -> str:
    """Instantiate the reconstruction prompt scaffold (pure function)."""
    if len(pairs) != required_pairs:
        raise ValueError(f"expected exactly {required_pairs} few-shot pairs, got {len(pairs)}")
    parts = [_PROMPT_HEADER]
    for pair in pairs:
        parts.append(_PROMPT_EXAMPLE.format(noisy=pair.noisy, clean=pair.clean))
    parts.append(_PROMPT_TARGET.format(target=target))
    return "".join(parts)


def parse_clean_text(raw: str) -> str:
    """Text after the last ``Clean Text:`` marker, stripped of whitespace."""
    idx = raw.rfind(CLEAN_MARKER)
    if idx < 0:
        raise ParseError("no 'Clean Text:' marker in response")
    return raw[idx + len(CLEAN_MARKER):].strip()


class _RateLimiter:
    """Token bucket at requests-per-minute granularity."""

    def __init__(self, per_minute: float):
        self.interval = 60.0 / per_minute if per_minute > 0 else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def acquire(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_at - now
            self._next_at = max(now, self._next_at) + self.interval
        if wait > 0:
            time.sleep(wait)


class ChatClient:
    """Minimal chat-completions client with retries, rate limit, audit log."""

    def __init__(self, cfg: EndpointConfig, audit_path: str | Path | None = None):
        self.cfg = cfg
        self.limiter = _RateLimiter(cfg.rate_limit_per_min)
        self.audit_path = Path(audit_path) if audit_path else None
        self._audit_lock = threading.Lock()
        self._audit_records: list[dict] = []
        self.total_requests = 0

    def _audit(self, record: dict) -> None:
        with self._audit_lock:
            self._audit_records.append(record)

    def flush_audit(self) -> None:
        if self.audit_path is None:
            return
        with self._audit_lock:
            # concurrent workers append in arrival order; sort so the file is
            # reproducible across runs and worker counts
            records = sorted(self._audit_records, key=lambda r: (r["tag"], r["attempt"]))
            lines = [json.dumps(r, ensure_ascii=False) for r in records]
        atomic_write_text(self.audit_path, "".join(line + "\n" for line in lines))

    def call_llm(self, prompt: str, request_tag: str = "") -> str:
        """POST one completion request; returns the first choice's content.

        Retries transient failures (HTTP 429 and 5xx, connection errors) with
        exponential backoff, up to max_retries. Auth failures are fatal.
        """
        cfg = self.cfg
        body = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        key = cfg.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        payload = json.dumps(body)
        last_error = "no attempt made"
        for attempt in range(cfg.max_retries + 1):
            self.limiter.acquire()
            with self._audit_lock:
                self.total_requests += 1
            record = {
                "tag": request_tag,
                "attempt": attempt,
                "url": url,
                "request": _truncate(payload),
            }
            try:
                resp = requests.post(url, data=payload, headers=headers, timeout=cfg.timeout_s)
            except requests.RequestException as exc:
                last_error = f"connection error: {exc}"
                record.update({"status": None, "error": str(exc)})
                self._audit(record)
                self._backoff(attempt, record)
                continue
            record["status"] = resp.status_code
            record["response"] = _truncate(resp.text)
            self._audit(record)
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                self._backoff(attempt, record)
                continue
            if resp.status_code != 200:
                raise ReconstructError(f"HTTP {resp.status_code}: {_truncate(resp.text, 200)}")
            try:
                parsed = resp.json()
                return parsed["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ReconstructError(f"malformed response body: {exc}") from exc
        raise ReconstructError(f"retries exhausted ({last_error})")

    def _backoff(self, attempt: int, record: dict) -> None:
        if attempt >= self.cfg.max_retries:
            return
        delay = self.cfg.backoff_base_s * (2.0 ** attempt)
        record["backoff_s"] = delay
        time.sleep(delay)


def _truncate(text: str, limit: int = 8192) -> str:
    return text if len(text) <= limit else text[:limit] + f"...[{len(text) - limit} bytes cut]"


def call_llm(prompt: str, cfg: EndpointConfig) -> str:
    return ChatClient(cfg).call_llm(prompt)


def reconstruct_corpus(
    sanitized: Corpus,
    pairs: list[FewShotPair],
    cfg: EndpointConfig,
    audit_path: str | Path | None = None,
    required_pairs: int = 3,
) -> Corpus:
    """Reconstruct every document; per-document failures are flagged, not fatal.

    Failed documents carry the sanitized text forward with a
    ``reconstruction_failed`` flag. Only auth errors abort the run.
    """
    client = ChatClient(cfg, audit_path=audit_path)

    def one(doc: Document) -> Document:
        prompt = build_prompt(pairs, doc.text, required_pairs=required_pairs)
        extras = doc.extras_dict()
        try:
            raw = client.call_llm(prompt, request_tag=doc.id)
            text = parse_clean_text(raw)
            extras.pop("reconstruction_failed", None)
        except AuthError:
            raise
        except ReconstructError as exc:
            extras["reconstruction_failed"] = str(exc)
            text = doc.text
        return Document.from_text(
            id=doc.id,
            author_id=doc.author_id,
            text=text,
            label=doc.label,
            extras=tuple(extras.items()),
        )

    try:
        with ThreadPoolExecutor(max_workers=max(1, cfg.concurrency)) as pool:
            docs = list(pool.map(one, sanitized.documents))
    finally:
        client.flush_audit()
    return Corpus(name=f"{sanitized.name}-reconstructed", documents=tuple(docs), stage="reconstructed")
