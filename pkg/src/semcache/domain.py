"""Domain lexicon and lightweight text heuristics for inventory analytics.

Everything here is deterministic, rule-based knowledge about the target
domain: location identifiers, synonym groups, structural question
templates, key phrases, value-slot patterns, and the keyword rules the
bundled mock agents use to decompose a raw question into a structural
signature. Real deployments swap the mock agents out; the lexicon remains
useful for boost computation and value masking.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .signature import QuerySignature

# Canonical relational schema of the demo deployment (17 tables).
SCHEMA_TABLES = (
    "INVENTORY_MASTER",
    "ITEM_CATALOG",
    "WAREHOUSE_STOCK",
    "STOCK_MOVEMENTS",
    "INVENTORY_AGING",
    "PURCHASE_ORDERS",
    "PURCHASE_ORDER_LINES",
    "SUPPLIERS",
    "CONSUMPTION_HISTORY",
    "ORGANIZATIONS",
    "STORAGE_LOCATIONS",
    "ITEM_CATEGORIES",
    "STOCK_VALUATION",
    "REORDER_POLICIES",
    "SLAB_DEFINITIONS",
    "UNIT_CONVERSIONS",
    "DEMAND_FORECASTS",
)

# Tables consulted per semantic category; first entry is the primary table.
CATEGORY_TABLES: dict[str, tuple[str, ...]] = {
    "valuation": ("INVENTORY_MASTER",),
    "stock": ("INVENTORY_MASTER", "WAREHOUSE_STOCK"),
    "aging": ("INVENTORY_AGING", "INVENTORY_MASTER"),
    "procurement": ("PURCHASE_ORDERS", "PURCHASE_ORDER_LINES", "SUPPLIERS"),
    "consumption": ("CONSUMPTION_HISTORY", "INVENTORY_MASTER"),
    "other": ("INVENTORY_MASTER",),
}

CATEGORY_INTENTS: dict[str, str] = {
    "valuation": "valuation",
    "stock": "stock_current",
    "aging": "aging",
    "procurement": "procurement",
    "consumption": "consumption",
    "other": "general",
}

# Tokens contributing little identity to a question; the hash embedder
# downweights them so paraphrases land near their reference.
STOPWORDS = frozenset("""
    a an the is are was were be been being what which who whom whose show me
    give get find tell display list of to in on at for by with from as that
    this these those it its per and or do does did done we i you your please
    how much many s
""".split())

_WS = re.compile(r"\s+")
_TRAILING_PUNCT = re.compile(r"[\s?!.]+$")

OFF_DOMAIN_GUIDANCE = (
    "This assistant answers inventory analytics questions only. "
    "Try asking about stock levels, valuation, aging, procurement, or "
    "consumption across items, plants, and time periods."
)


def normalize_question(text: str) -> str:
    """Canonical form of a question used for dedup and comparison."""
    collapsed = _WS.sub(" ", text.strip().lower())
    return _TRAILING_PUNCT.sub("", collapsed)


@dataclass(frozen=True)
class DomainLexicon:
    """Domain vocabulary backing boosts, masking, and the mock agents."""

    locations: tuple[str, ...]
    synonym_groups: tuple[frozenset[str], ...]
    structural_templates: tuple[re.Pattern, ...]
    key_phrases: tuple[str, ...]
    item_code_pattern: re.Pattern
    date_pattern: re.Pattern
    domain_keywords: frozenset[str]
    stopwords: frozenset[str] = STOPWORDS
    location_pattern: re.Pattern = field(init=False)

    def __post_init__(self) -> None:
        ordered = sorted(self.locations, key=len, reverse=True)
        pattern = re.compile(
            r"\b(?:" + "|".join(re.escape(loc) for loc in ordered) + r")\b",
            re.IGNORECASE)
        object.__setattr__(self, "location_pattern", pattern)


def default_lexicon() -> DomainLexicon:
    """Lexicon for the six-site inventory deployment the mocks emulate."""
    return DomainLexicon(
        locations=tuple(f"Plant-{c}" for c in "ABCDEF"),
        synonym_groups=(
            frozenset({"stock", "inventory", "inventories"}),
            frozenset({"value", "valuation", "worth"}),
            frozenset({"quantity", "qty", "units"}),
            frozenset({"consumption", "usage", "consumed"}),
            frozenset({"procurement", "purchase", "purchasing"}),
            frozenset({"aging", "aged", "age"}),
            frozenset({"plant", "site", "organization", "warehouse"}),
        ),
        structural_templates=(
            re.compile(r"^what is the total .+ for .+$"),
            re.compile(r"^what is the current .+ for .+$"),
            re.compile(r"^show me .+ for .+$"),
            re.compile(r"^how many .+$"),
            re.compile(r"^how much .+$"),
            re.compile(r"^list .+$"),
            re.compile(r"^compare .+$"),
        ),
        key_phrases=(
            "stock value", "stock quantity", "item code", "purchase order",
            "aging bucket", "reorder level", "unit price", "stock level",
            "on hand", "lead time",
        ),
        item_code_pattern=re.compile(r"\b[A-Z][A-Z0-9]+(?:-[A-Z0-9]+)+\b"),
        date_pattern=re.compile(
            r"\b\d{4}-\d{2}(?:-\d{2})?\b"
            r"|\bq[1-4][\s-]?\d{4}\b"
            r"|\b(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may"
            r"|jun(?:e)?|jul(?:y)?|aug(?:ust)?|sep(?:tember)?|oct(?:ober)?"
            r"|nov(?:ember)?|dec(?:ember)?)\s+\d{4}\b",
            re.IGNORECASE),
        domain_keywords=frozenset("""
            stock inventory item items value valuation quantity qty warehouse
            plant site aging procurement purchase order orders supplier vendor
            consumption usage slab category reorder demand forecast movement
            movements unit units sku
        """.split()),
    )


# Value-slot fields, in masking precedence order: explicit locations first,
# then code-shaped tokens, then dates.
_SLOT_ORDER = ("organization", "item_code", "time_period")


def _slot_pattern(lexicon: DomainLexicon, fieldname: str) -> re.Pattern:
    return {
        "organization": lexicon.location_pattern,
        "item_code": lexicon.item_code_pattern,
        "time_period": lexicon.date_pattern,
    }[fieldname]


def extract_value_slots(text: str, lexicon: DomainLexicon) -> list[tuple[str, str]]:
    """Ordered (field, value) literals found in `text`.

    Order is first occurrence in the text; overlapping candidates resolve
    to the earlier (then longer) span, so 'Plant-A' is an organization, not
    an item code.
    """
    spans: list[tuple[int, int, str, str]] = []
    for fieldname in _SLOT_ORDER:
        for match in _slot_pattern(lexicon, fieldname).finditer(text):
            spans.append((match.start(), match.end(), fieldname, match.group()))
    spans.sort(key=lambda s: (s[0], -(s[1] - s[0]), _SLOT_ORDER.index(s[2])))
    taken: list[tuple[int, int]] = []
    slots: list[tuple[str, str]] = []
    for start, end, fieldname, value in spans:
        if any(start < t_end and end > t_start for t_start, t_end in taken):
            continue
        taken.append((start, end))
        slots.append((fieldname, value))
    return slots


def mask_value_slots(text: str, lexicon: DomainLexicon) -> str:
    """Question text with value literals replaced by <field> placeholders.

    The result is normalized, so two questions that differ only in item
    codes, locations, or dates mask to the same string.
    """
    spans: list[tuple[int, int, str]] = []
    for fieldname in _SLOT_ORDER:
        for match in _slot_pattern(lexicon, fieldname).finditer(text):
            spans.append((match.start(), match.end(), fieldname))
    spans.sort(key=lambda s: (s[0], -(s[1] - s[0])))
    out: list[str] = []
    cursor = 0
    for start, end, fieldname in spans:
        if start < cursor:
            continue
        out.append(text[cursor:start])
        out.append(f"<{fieldname}>")
        cursor = end
    out.append(text[cursor:])
    return normalize_question("".join(out))


def _has_any(text: str, words: tuple[str, ...]) -> bool:
    return any(re.search(rf"\b{re.escape(w)}\b", text) for w in words)


def infer_category(text: str) -> str:
    """Semantic category from keyword precedence rules."""
    norm = normalize_question(text)
    if _has_any(norm, ("aging", "aged")):
        return "aging"
    if _has_any(norm, ("purchase", "procurement", "purchasing", "supplier",
                       "vendor")):
        return "procurement"
    if _has_any(norm, ("consumption", "usage", "consumed")):
        return "consumption"
    if _has_any(norm, ("value", "valuation", "worth")):
        return "valuation"
    if _has_any(norm, ("stock", "inventory", "quantity", "units", "on hand")):
        return "stock"
    return "other"


def extract_signature(query: str, lexicon: DomainLexicon) -> QuerySignature:
    """Rule-based structural decomposition of a raw question.

    This is the mock stand-in for the intent classifier's signature
    extraction; it is intentionally shallow but deterministic.
    """
    norm = normalize_question(query)
    slots = extract_value_slots(query, lexicon)
    slot_fields = {fieldname for fieldname, _ in slots}

    category = infer_category(query)

    if _has_any(norm, ("trend", "over time", "month over month")):
        query_type = "trend"
    elif _has_any(norm, ("total", "sum", "average", "avg", "mean", "count",
                         "how many", "how much")) or " by " in f" {norm} ":
        query_type = "analytical"
    else:
        query_type = "lookup"

    if _has_any(norm, ("total", "sum")):
        aggregation = "sum"
    elif _has_any(norm, ("average", "avg", "mean")):
        aggregation = "avg"
    elif _has_any(norm, ("count", "how many", "number of")):
        aggregation = "count"
    else:
        aggregation = "none"

    if _has_any(norm, ("value", "valuation", "worth", "cost", "amount")):
        metric = "value"
    elif _has_any(norm, ("count", "how many", "number of")):
        metric = "count"
    else:
        metric = "quantity"

    if _has_any(norm, ("by plant", "by organization", "by site",
                       "by warehouse", "per plant", "per site",
                       "across plants", "across sites")):
        grouping = "organization"
    elif "slab" in norm:
        grouping = "slab"
    elif "item_code" in slot_fields:
        grouping = "item"
    else:
        grouping = "none"

    filter_types = set()
    if "item_code" in slot_fields:
        filter_types.add("item_code")
    if "organization" in slot_fields:
        filter_types.add("location")
    if "time_period" in slot_fields or _has_any(
            norm, ("last month", "last quarter", "last year", "this month",
                   "this quarter", "this year")):
        filter_types.add("time_period")
    if "category" in norm:
        filter_types.add("category")
    if _has_any(norm, ("above", "below", "over", "under", "exceeding",
                       "more than", "less than", "at least")):
        filter_types.add("threshold")

    flags = set()
    if _has_any(norm, ("compare", "versus", "vs")):
        flags.add("comparative")
    if "per unit" in norm:
        flags.add("per_unit")

    primary, *joins = CATEGORY_TABLES[category]
    return QuerySignature(
        semantic_category=category,
        query_type=query_type,
        aggregation=aggregation,
        primary_metric=metric,
        grouping=grouping,
        filter_types=frozenset(filter_types),
        primary_table=primary,
        required_joins=tuple(joins),
        semantic_flags=frozenset(flags),
    )


def infer_intent(query: str) -> str:
    """Mock intent token for a question."""
    return CATEGORY_INTENTS[infer_category(query)]


def is_on_domain(query: str, lexicon: DomainLexicon) -> bool:
    """Guard heuristic: a question is on-domain if it names any domain term."""
    tokens = set(normalize_question(query).split())
    return bool(tokens & lexicon.domain_keywords)
