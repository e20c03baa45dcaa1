"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written from scratch against the
documented behaviour (no imports from the implementation modules beyond
plain data types), so tests compare two separately derived answers.
"""

from __future__ import annotations

import itertools
import math
import random

from semcache.signature import QuerySignature


def weighted_similarity_oracle(a: QuerySignature, b: QuerySignature,
                               weights: tuple[float, ...]) -> float:
    """Per-component weighted sum, spelled out longhand."""
    w_cat, w_op, w_metric, w_group, w_tables, w_flags = weights

    total = 0.0
    if a.semantic_category == b.semantic_category:
        total += w_cat
    if a.query_type == b.query_type and a.aggregation == b.aggregation:
        total += w_op
    if a.primary_metric == b.primary_metric:
        total += w_metric
    if a.grouping == b.grouping:
        total += w_group

    tables_a = {a.primary_table} | set(a.required_joins)
    tables_b = {b.primary_table} | set(b.required_joins)
    union = tables_a | tables_b
    if union:
        total += w_tables * (len(tables_a & tables_b) / len(union))
    else:
        total += w_tables

    flags_union = a.semantic_flags | b.semantic_flags
    if flags_union:
        total += w_flags * (len(a.semantic_flags & b.semantic_flags)
                            / len(flags_union))
    else:
        total += w_flags
    return total


def signature_universe(sample: int | None = None,
                       seed: int = 91) -> list[QuerySignature]:
    """Enumerated signature universe with at most four values per field."""
    categories = ("valuation", "stock", "aging", "procurement")
    query_types = ("lookup", "analytical", "trend")
    aggregations = ("none", "sum", "avg")
    metrics = ("quantity", "value", "count")
    groupings = ("none", "organization", "slab")
    filter_sets = (frozenset(), frozenset({"location"}),
                   frozenset({"location", "time_period"}),
                   frozenset({"category", "threshold"}))
    tables = ("INVENTORY_MASTER", "PURCHASE_ORDERS")
    join_sets = ((), ("ITEM_CATALOG",), ("ITEM_CATALOG", "SUPPLIERS"))
    flag_sets = (frozenset(), frozenset({"comparative"}),
                 frozenset({"comparative", "per_unit"}))

    combos = list(itertools.product(categories, query_types, aggregations,
                                    metrics, groupings, filter_sets, tables,
                                    join_sets, flag_sets))
    if sample is not None:
        combos = random.Random(seed).sample(combos, sample)
    return [
        QuerySignature(semantic_category=cat, query_type=qt, aggregation=agg,
                       primary_metric=metric, grouping=group,
                       filter_types=filters, primary_table=table,
                       required_joins=joins, semantic_flags=flags)
        for cat, qt, agg, metric, group, filters, table, joins, flags in combos
    ]


def cosine_oracle(a: list[float], b: list[float]) -> float:
    """Textbook cosine without the kernel code paths."""
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    return dot / (norm_a * norm_b)


def brute_force_ranking(entries, probe_values: list[float]) -> list[tuple[str, float]]:
    """Exhaustive cosine ranking with the documented tie rules."""
    scored = []
    for entry in entries:
        if entry.invalid:
            continue
        score = cosine_oracle(list(entry.embedding.values), probe_values)
        scored.append((entry.id, max(-1.0, min(1.0, score)), entry.created_at))
    scored.sort(key=lambda row: (-row[1], -row[2], row[0]))
    return [(entry_id, score) for entry_id, score, _ in scored]


def parse_guidance_reference(text: str):
    """Minimal independent parser for the guidance block layout."""
    lines = text.split("\n")
    assert lines[0] == "=== REFERENCE GUIDANCE ==="
    prefix = "Similar question found (similarity: "
    assert lines[1].startswith(prefix) and lines[1].endswith(")")
    similarity = float(lines[1][len(prefix):-1])
    hints: list[tuple[str, str, str]] = []
    steps: list[str] = []
    mode = None
    for line in lines[2:]:
        if line == "Required Adaptations:":
            mode = "hints"
        elif line == "Reference Plan:":
            mode = "steps"
        elif line == "":
            continue
        elif mode == "hints":
            body = line[2:]  # strip "- "
            fieldname, rest = body.split(": ", 1)
            old, new = rest.split(" -> ", 1)
            hints.append((fieldname, old, new))
        elif mode == "steps":
            number, step = line.split(". ", 1)
            assert int(number) == len(steps) + 1
            steps.append(step)
    return similarity, hints, steps
