"""Counter-based RNG streams for reproducible, parallel-safe sanitization.

Every token of every document gets its own Philox stream derived from
(root seed, document id, token index). Sanitizing documents in any order or
on any number of workers therefore produces bit-identical output.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _doc_key(doc_id: str) -> int:
    digest = hashlib.blake2b(doc_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def token_rng(root_seed: int, doc_id: str, token_index: int) -> np.random.Generator:
    """Generator for one (document, token) cell of the run."""
    seq = np.random.SeedSequence(
        entropy=root_seed, spawn_key=(_doc_key(doc_id), token_index)
    )
    return np.random.Generator(np.random.Philox(seq))


class TokenStreams:
    """Factory handing out per-token generators under one root seed."""

    def __init__(self, root_seed: int):
        self.root_seed = int(root_seed)

    def for_token(self, doc_id: str, token_index: int) -> np.random.Generator:
        return token_rng(self.root_seed, doc_id, token_index)
