"""Token embedding providers for the embedding-similarity metric.

The contract: ``embed(tokens)`` returns one unit-norm vector per token,
all of the provider's declared ``dimension``.  Two implementations ship:

* HashEmbedder — deterministic test fixture.  Each distinct token maps to
  a fixed pseudo-random unit vector derived from a BLAKE2b digest of the
  token, so equal tokens always agree and distinct tokens are nearly
  orthogonal at moderate dimension.  Safe for concurrent queries.
* RemoteEmbedder — client for a contextual-embedding service speaking
  ``POST /embed {"tokens": [...]} -> {"vectors": [[...]]}``.
"""

from __future__ import annotations

import hashlib
import threading
from typing import Protocol, Sequence

import httpx
import numpy as np


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(tokens), dimension), rows unit-norm."""
        ...


class HashEmbedder:
    """Deterministic per-token unit vectors seeded from a token digest."""

    def __init__(self, dimension: int = 32, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _vector(self, token: str) -> np.ndarray:
        digest = hashlib.blake2b(
            f"{self.seed}\x1f{token}".encode("utf-8"), digest_size=8
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        vec = rng.standard_normal(self.dimension)
        return vec / np.linalg.norm(vec)

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        rows = []
        with self._lock:
            for token in tokens:
                vec = self._cache.get(token)
                if vec is None:
                    vec = self._vector(token)
                    self._cache[token] = vec
                rows.append(vec)
        if not rows:
            return np.zeros((0, self.dimension))
        return np.stack(rows)


class RemoteEmbedder:
    """Fetches vectors from an embedding service; renormalizes defensively."""

    def __init__(self, endpoint: str, dimension: int, timeout_s: float = 10.0):
        self.endpoint = endpoint
        self.dimension = dimension
        self._client = httpx.Client(timeout=timeout_s)

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dimension))
        resp = self._client.post(self.endpoint, json={"tokens": list(tokens)})
        resp.raise_for_status()
        vectors = np.asarray(resp.json()["vectors"], dtype=float)
        if vectors.shape != (len(tokens), self.dimension):
            raise ValueError(
                f"embedding service returned shape {vectors.shape}, "
                f"expected {(len(tokens), self.dimension)}"
            )
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return vectors / norms

    def close(self):
        self._client.close()
