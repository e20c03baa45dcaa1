"""Persistent cache of answered questions with embedding search.

Entries carry the question, its structural signature, embedding, plan,
code, response, and the schema digest they were generated under. Lookup is
an exact (exhaustive) cosine scan over the live entries via the selected
kernel backend; schema changes invalidate entries by digest comparison
without deleting them, so replay reports can still count them.

Persistence is line-delimited JSON: a self-describing header line followed
by one record per entry.
"""

from __future__ import annotations

import hashlib
import json
import threading
from array import array
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from . import kernels
from .domain import normalize_question
from .embedding import Embedding
from .signature import QuerySignature, build_similarity_key

STORE_FORMAT = "semcache-store"
STORE_VERSION = 1


class StoreFormatError(ValueError):
    """A persisted store file could not be parsed."""

    def __init__(self, path: str | Path, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def entry_id_for(question: str, schema_hash: str) -> str:
    """Deterministic entry id from the dedup identity (question + schema)."""
    digest = hashlib.sha256(
        f"{normalize_question(question)}\x00{schema_hash}".encode("utf-8"))
    return "q" + digest.hexdigest()[:16]


@dataclass
class CacheEntry:
    """One cached question with everything needed to reuse its answer."""

    id: str
    question: str
    signature: QuerySignature
    embedding: Embedding
    plan: tuple[str, ...]
    code: str
    response: str
    schema_hash: str
    similarity_key: str = ""
    created_at: float | None = None
    return_hits: int = 0
    guide_hits: int = 0
    invalid: bool = False

    def __post_init__(self) -> None:
        expected = build_similarity_key(self.signature)
        if not self.similarity_key:
            self.similarity_key = expected
        elif self.similarity_key != expected:
            raise ValueError(
                f"similarity_key {self.similarity_key!r} does not match "
                f"signature key {expected!r}")
        if self.return_hits < 0 or self.guide_hits < 0:
            raise ValueError("hit counters must be non-negative")
        self.plan = tuple(self.plan)

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "question": self.question,
            "signature": self.signature.to_record(),
            "similarity_key": self.similarity_key,
            "embedding": list(self.embedding.values),
            "plan": list(self.plan),
            "code": self.code,
            "response": self.response,
            "schema_hash": self.schema_hash,
            "created_at": self.created_at,
            "return_hits": self.return_hits,
            "guide_hits": self.guide_hits,
            "invalid": self.invalid,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "CacheEntry":
        return cls(
            id=record["id"],
            question=record["question"],
            signature=QuerySignature.from_record(record["signature"]),
            embedding=Embedding(tuple(record["embedding"])),
            plan=tuple(record["plan"]),
            code=record["code"],
            response=record["response"],
            schema_hash=record["schema_hash"],
            similarity_key=record["similarity_key"],
            created_at=record["created_at"],
            return_hits=record["return_hits"],
            guide_hits=record["guide_hits"],
            invalid=record.get("invalid", False),
        )


@dataclass(frozen=True)
class StoreStats:
    """Aggregate counters over a store."""

    entry_count: int
    return_hits_total: int
    guide_hits_total: int
    invalidated_count: int


class CacheStore:
    """In-memory cache with exhaustive top-k search and JSONL persistence.

    Single-writer / multi-reader: every public method takes the store lock,
    so mutations serialize and readers always observe a consistent
    snapshot. Entries deduplicate by (normalized question, schema hash);
    re-inserting an existing question under the same schema replaces the
    prior entry. `created_at` is a logical insertion clock unless the
    caller provides explicit values.
    """

    def __init__(self, dim: int, max_entries: int | None = None) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.max_entries = max_entries
        self._lock = threading.RLock()
        self._entries: dict[str, CacheEntry] = {}
        self._by_dedup: dict[tuple[str, str], str] = {}
        self._clock = 0.0
        self._matrix: array | None = None
        self._matrix_ids: list[str] = []

    # -- mutation ---------------------------------------------------------

    def insert(self, entry: CacheEntry) -> str:
        """Add (or replace) an entry; returns its id."""
        if entry.embedding.dim != self.dim:
            raise ValueError(
                f"embedding dimension {entry.embedding.dim} does not match "
                f"store dimension {self.dim}")
        with self._lock:
            stored = replace(entry, embedding=entry.embedding.normalized())
            if stored.created_at is None:
                stored.created_at = self._clock + 1.0
            self._clock = max(self._clock, stored.created_at)
            dedup = (normalize_question(stored.question), stored.schema_hash)
            prior_id = self._by_dedup.get(dedup)
            if prior_id is not None and prior_id != stored.id:
                del self._entries[prior_id]
            existing = self._entries.get(stored.id)
            if existing is not None:
                prior_key = (normalize_question(existing.question),
                             existing.schema_hash)
                if prior_key != dedup:
                    raise ValueError(
                        f"id {stored.id!r} already holds a different question")
            self._entries[stored.id] = stored
            self._by_dedup[dedup] = stored.id
            self._evict_if_needed()
            self._matrix = None
            return stored.id

    def _evict_if_needed(self) -> None:
        if self.max_entries is None:
            return
        while len(self._entries) > self.max_entries:
            oldest = min(self._entries.values(),
                         key=lambda e: (e.created_at, e.id))
            del self._entries[oldest.id]
            self._by_dedup.pop(
                (normalize_question(oldest.question), oldest.schema_hash), None)

    def invalidate_by_schema(self, current_hash: str) -> int:
        """Mark entries generated under a different schema digest as stale.

        Returns the number newly invalidated; calling twice with the same
        digest is a no-op the second time.
        """
        with self._lock:
            count = 0
            for entry in self._entries.values():
                if not entry.invalid and entry.schema_hash != current_hash:
                    entry.invalid = True
                    count += 1
            if count:
                self._matrix = None
            return count

    def note_hit(self, entry_id: str, mode: str) -> None:
        """Bump the return/guide hit counter of an entry."""
        with self._lock:
            entry = self._entries[entry_id]
            if mode == "return":
                entry.return_hits += 1
            elif mode == "guide":
                entry.guide_hits += 1
            else:
                raise ValueError(f"unknown hit mode: {mode!r}")

    # -- lookup -----------------------------------------------------------

    def get(self, entry_id: str) -> CacheEntry:
        with self._lock:
            return self._entries[entry_id]

    def entries(self) -> list[CacheEntry]:
        with self._lock:
            return list(self._entries.values())

    def __len__(self) -> int:
        with self._lock:
            return sum(1 for e in self._entries.values() if not e.invalid)

    def _live_matrix(self) -> tuple[array, list[str]]:
        if self._matrix is None:
            ids: list[str] = []
            flat = array("d")
            for entry in self._entries.values():
                if entry.invalid:
                    continue
                ids.append(entry.id)
                flat.extend(entry.embedding.values)
            self._matrix = flat
            self._matrix_ids = ids
        return self._matrix, self._matrix_ids

    def top_k(self, query_embedding: Embedding, k: int) -> list[tuple[CacheEntry, float]]:
        """The k live entries nearest to the probe, by cosine similarity.

        Results are ordered by descending score; exact ties prefer the
        newer entry, then the lexicographically smaller id. Invalidated
        entries never appear.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if query_embedding.dim != self.dim:
            raise ValueError(
                f"probe dimension {query_embedding.dim} does not match "
                f"store dimension {self.dim}")
        with self._lock:
            matrix, ids = self._live_matrix()
            if not ids:
                return []
            probe = query_embedding.normalized()
            scores = kernels.scan_scores(matrix, len(ids), self.dim,
                                         probe.as_array())
            ranked = sorted(
                ((max(-1.0, min(1.0, s)), self._entries[i]) for s, i in zip(scores, ids)),
                key=lambda pair: (-pair[0], -(pair[1].created_at or 0.0), pair[1].id))
            return [(entry, score) for score, entry in ranked[:k]]

    def stats(self) -> StoreStats:
        with self._lock:
            return StoreStats(
                entry_count=sum(1 for e in self._entries.values() if not e.invalid),
                return_hits_total=sum(e.return_hits for e in self._entries.values()),
                guide_hits_total=sum(e.guide_hits for e in self._entries.values()),
                invalidated_count=sum(1 for e in self._entries.values() if e.invalid),
            )

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write the full store (including invalidated entries) as JSONL."""
        with self._lock:
            lines = [json.dumps({"format": STORE_FORMAT,
                                 "version": STORE_VERSION,
                                 "dim": self.dim},
                                sort_keys=True, separators=(",", ":"))]
            for entry in sorted(self._entries.values(), key=lambda e: e.id):
                lines.append(json.dumps(entry.to_record(), sort_keys=True,
                                        separators=(",", ":")))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, max_entries: int | None = None) -> "CacheStore":
        """Read a store saved by `save`. Raises StoreFormatError with the
        offending line number on malformed input."""
        text = Path(path).read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines:
            raise StoreFormatError(path, 1, "empty store file, header missing")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise StoreFormatError(path, 1, f"bad header: {exc}") from exc
        if header.get("format") != STORE_FORMAT:
            raise StoreFormatError(path, 1,
                                   f"not a {STORE_FORMAT} file: "
                                   f"{header.get('format')!r}")
        if header.get("version") != STORE_VERSION:
            raise StoreFormatError(path, 1,
                                   f"unsupported store version "
                                   f"{header.get('version')!r}")
        store = cls(dim=int(header["dim"]), max_entries=max_entries)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entry = CacheEntry.from_record(record)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise StoreFormatError(path, lineno,
                                       f"malformed entry record: {exc}") from exc
            if entry.embedding.dim != store.dim:
                raise StoreFormatError(
                    path, lineno,
                    f"entry dimension {entry.embedding.dim} does not match "
                    f"header dimension {store.dim}")
            with store._lock:
                store._entries[entry.id] = entry
                store._by_dedup[(normalize_question(entry.question),
                                 entry.schema_hash)] = entry.id
                store._clock = max(store._clock, entry.created_at or 0.0)
                store._matrix = None
        return store
