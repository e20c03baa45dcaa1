"""Embedding vectors and the deterministic hash-based mock embedder.

The cache is embedding-agnostic: anything producing fixed-dimension float
vectors plugs in. The bundled HashEmbedder exists for offline replay and
tests. It projects the value-masked token bag of a question into a fixed
dimension via seeded per-token Gaussian vectors, then mixes in a small
text-identity component so that an exact duplicate scores 1.0 while a
value-substituted paraphrase lands high in the guide band but never at
exact-match similarity.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Protocol

from . import kernels
from .domain import DomainLexicon, default_lexicon, mask_value_slots, normalize_question


@dataclass(frozen=True)
class Embedding:
    """Fixed-dimension embedding vector."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must have positive dimension")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return kernels.norm(self.values)

    def normalized(self) -> "Embedding":
        """Unit-L2-norm copy. Raises on the all-zero vector."""
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Embedding(tuple(v / n for v in self.values))

    def as_array(self):
        return kernels.as_vector(self.values)


class Embedder(Protocol):
    """Anything that turns question text into an Embedding."""

    dim: int

    def embed(self, text: str) -> Embedding: ...


class HashEmbedder:
    """Seeded hash-based projection of normalized question text.

    Content tokens of the value-masked question carry full weight,
    stopwords a reduced one, and a per-text identity vector is added at
    `text_weight` after normalization, so only byte-identical normalized
    questions reach similarity 1.0.
    """

    def __init__(self, dim: int = 256, seed: int = 0,
                 lexicon: DomainLexicon | None = None,
                 stopword_weight: float = 0.25,
                 text_weight: float = 0.15) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.lexicon = lexicon or default_lexicon()
        self.stopword_weight = stopword_weight
        self.text_weight = text_weight
        self._token_vectors: dict[str, tuple[float, ...]] = {}

    def _vector_for(self, key: str) -> tuple[float, ...]:
        cached = self._token_vectors.get(key)
        if cached is None:
            digest = hashlib.sha256(f"{self.seed}|{key}".encode("utf-8")).digest()
            rng = random.Random(int.from_bytes(digest[:16], "big"))
            cached = tuple(rng.gauss(0.0, 1.0) for _ in range(self.dim))
            self._token_vectors[key] = cached
        return cached

    def embed(self, text: str) -> Embedding:
        masked = mask_value_slots(text, self.lexicon)
        acc = [0.0] * self.dim
        for token in masked.split():
            weight = (self.stopword_weight
                      if token in self.lexicon.stopwords else 1.0)
            vec = self._vector_for(f"tok:{token}")
            for i, v in enumerate(vec):
                acc[i] += weight * v
        base_norm = kernels.norm(acc)
        if base_norm > 0.0:
            acc = [v / base_norm for v in acc]
        identity = self._vector_for(f"txt:{normalize_question(text)}")
        id_norm = kernels.norm(identity)
        scale = self.text_weight / id_norm
        acc = [a + scale * v for a, v in zip(acc, identity)]
        return Embedding(tuple(acc)).normalized()
