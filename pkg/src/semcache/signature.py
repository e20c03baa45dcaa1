"""Structural query signatures and weighted similarity between them.

A query is decomposed into five hierarchical levels (semantic category,
query type + aggregation, metric + grouping, filter types, table pattern)
plus a set of free-form semantic flags. Signatures render to a canonical
pipe-delimited similarity key and compare via a weighted per-component
score: exact match for scalar levels, Jaccard overlap for set-valued ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

# Runs of whitespace or separator characters collapse to "_" so that no
# token can smuggle a level or list separator into the similarity key.
_TOKEN_JUNK = re.compile(r"[\s|+]+")


def normalize_token(value: str) -> str:
    """Canonical lowercase form of a scalar signature token."""
    return _TOKEN_JUNK.sub("_", value.strip().lower()).strip("_")


def normalize_table(value: str) -> str:
    """Canonical form of a table identifier (compared case-insensitively)."""
    return _TOKEN_JUNK.sub("_", value.strip().upper()).strip("_")


def _require(token: str, original: str, fieldname: str) -> str:
    if not token:
        raise ValueError(f"{fieldname} is empty after normalization: {original!r}")
    return token


@dataclass(frozen=True)
class QuerySignature:
    """Five-level structural decomposition of an analytics query.

    Scalar fields accept any token; the conventional vocabularies are
    category (valuation, stock, aging, procurement, consumption), query
    type (lookup, analytical, trend), aggregation (none, sum, avg, count),
    metric (quantity, value, count) and grouping (none, organization,
    slab). All tokens are normalized at construction; the primary table is
    never repeated in required_joins.
    """

    semantic_category: str
    query_type: str
    aggregation: str
    primary_metric: str
    grouping: str
    filter_types: frozenset[str] = frozenset()
    primary_table: str = ""
    required_joins: tuple[str, ...] = ()
    semantic_flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("semantic_category", "query_type", "aggregation",
                     "primary_metric", "grouping"):
            raw = getattr(self, name)
            object.__setattr__(self, name, _require(normalize_token(raw), raw, name))
        object.__setattr__(
            self, "primary_table",
            _require(normalize_table(self.primary_table), self.primary_table,
                     "primary_table"))
        joins: list[str] = []
        for raw in self.required_joins:
            table = _require(normalize_table(raw), raw, "required_joins entry")
            if table != self.primary_table and table not in joins:
                joins.append(table)
        object.__setattr__(self, "required_joins", tuple(joins))
        object.__setattr__(
            self, "filter_types",
            frozenset(_require(normalize_token(t), t, "filter_types entry")
                      for t in self.filter_types))
        object.__setattr__(
            self, "semantic_flags",
            frozenset(_require(normalize_token(t), t, "semantic_flags entry")
                      for t in self.semantic_flags))

    @property
    def tables(self) -> frozenset[str]:
        """Primary table plus joins, as one set."""
        return frozenset((self.primary_table, *self.required_joins))

    def to_record(self) -> dict[str, Any]:
        return {
            "semantic_category": self.semantic_category,
            "query_type": self.query_type,
            "aggregation": self.aggregation,
            "primary_metric": self.primary_metric,
            "grouping": self.grouping,
            "filter_types": sorted(self.filter_types),
            "primary_table": self.primary_table,
            "required_joins": list(self.required_joins),
            "semantic_flags": sorted(self.semantic_flags),
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "QuerySignature":
        return cls(
            semantic_category=record["semantic_category"],
            query_type=record["query_type"],
            aggregation=record["aggregation"],
            primary_metric=record["primary_metric"],
            grouping=record["grouping"],
            filter_types=frozenset(record.get("filter_types", ())),
            primary_table=record["primary_table"],
            required_joins=tuple(record.get("required_joins", ())),
            semantic_flags=frozenset(record.get("semantic_flags", ())),
        )


@dataclass(frozen=True)
class SimilarityWeights:
    """Per-component weights for structural similarity.

    Components, in order: semantic category; query type + aggregation as
    one unit; primary metric; grouping; table set; semantic flags. Weights
    must be non-negative and sum to 1 within 1e-9.
    """

    w_category: float = 0.25
    w_operation: float = 0.20
    w_metric: float = 0.15
    w_grouping: float = 0.15
    w_tables: float = 0.15
    w_flags: float = 0.10

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if any(w < 0 for w in values):
            raise ValueError(f"weights must be non-negative: {values}")
        total = sum(values)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1.0, got {total!r}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.w_category, self.w_operation, self.w_metric,
                self.w_grouping, self.w_tables, self.w_flags)


DEFAULT_WEIGHTS = SimilarityWeights()


def build_similarity_key(sig: QuerySignature) -> str:
    """Canonical pipe-delimited rendering of a signature's five levels.

    Level 2 renders as "querytype_aggregation", level 3 as
    "metric_grouping", level 4 as the sorted filter tokens joined by "+",
    level 5 as "PRIMARY+JOIN1+JOIN2". Semantic flags are not part of the
    key. The result is bit-stable and used as a persistence / dedup key.
    """
    level2 = f"{sig.query_type}_{sig.aggregation}"
    level3 = f"{sig.primary_metric}_{sig.grouping}"
    level4 = "+".join(sorted(sig.filter_types))
    level5 = "+".join((sig.primary_table, *sig.required_joins))
    return "|".join((sig.semantic_category, level2, level3, level4, level5))


def jaccard(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """Jaccard overlap of two sets, with J(empty, empty) defined as 1."""
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def structural_similarity(a: QuerySignature, b: QuerySignature,
                          weights: SimilarityWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of six per-component match scores, in [0, 1].

    Scalar components (category; query type + aggregation jointly; metric;
    grouping) score 0 or 1 by exact normalized equality. The table set
    (primary + joins) and the semantic flags score their Jaccard overlap.
    Symmetric in its two signatures.
    """
    matches = (
        1.0 if a.semantic_category == b.semantic_category else 0.0,
        1.0 if (a.query_type, a.aggregation) == (b.query_type, b.aggregation) else 0.0,
        1.0 if a.primary_metric == b.primary_metric else 0.0,
        1.0 if a.grouping == b.grouping else 0.0,
        jaccard(a.tables, b.tables),
        jaccard(a.semantic_flags, b.semantic_flags),
    )
    return sum(w * m for w, m in zip(weights.as_tuple(), matches))
