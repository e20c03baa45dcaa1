"""Cache-hit routing: similarity, boosts, thresholds, and guidance.

Routing reads two scores. The raw embedding cosine decides direct returns
(the 0.995 return threshold is deliberately above the 0.99 cap on boosted
scores, so boosts can never fabricate an exact match). The boosted score
decides whether a near miss is worth guiding with the cached reference
plan plus field-level adaptation hints.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Any, Callable, Protocol, Sequence

from .domain import (
    DomainLexicon,
    extract_signature,
    extract_value_slots,
    mask_value_slots,
    normalize_question,
)
from .embedding import Embedding
from .kernels import dot
from .signature import QuerySignature, build_similarity_key, structural_similarity
from .store import CacheEntry, CacheStore

ADJUSTED_SIMILARITY_CAP = 0.99
DEFAULT_BOOST_INCREMENT = 0.02


class Mode(enum.Enum):
    """What the router decided to do with a query."""

    RETURN = "return"
    GUIDE = "guide"
    GENERATE = "generate"


@dataclass(frozen=True)
class Thresholds:
    """Dual decision thresholds; both boundaries are inclusive."""

    theta_return: float = 0.995
    theta_guide: float = 0.50

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_guide < self.theta_return <= 1.0):
            raise ValueError(
                f"need 0 < theta_guide < theta_return <= 1, got "
                f"{self.theta_guide} / {self.theta_return}")


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, in [-1, 1]."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    value = dot(a.values, b.values) / (na * nb)
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class BoostBreakdown:
    """Per-source domain boost contributions; each fires at most once."""

    location_norm: float = 0.0
    category_variation: float = 0.0
    structural_pattern: float = 0.0
    key_phrase: float = 0.0

    def __post_init__(self) -> None:
        if min(self.location_norm, self.category_variation,
               self.structural_pattern, self.key_phrase) < 0:
            raise ValueError("boost components must be non-negative")

    @property
    def total(self) -> float:
        return (self.location_norm + self.category_variation
                + self.structural_pattern + self.key_phrase)


def _word_tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9_]+", text))


def _template_index(masked: str, lexicon: DomainLexicon) -> int | None:
    for i, template in enumerate(lexicon.structural_templates):
        if template.match(masked):
            return i
    return None


def compute_boost(query_a: str, query_b: str, lexicon: DomainLexicon,
                  increment: float = DEFAULT_BOOST_INCREMENT) -> BoostBreakdown:
    """Domain-specific similarity adjustments between two question texts.

    Four independent sources each contribute `increment` at most once:
    location normalization (texts identical once location identifiers are
    masked), category variation (a synonym group represented in both),
    structural pattern (both match the same question template), and key
    phrase (a domain phrase present in both).
    """
    norm_a, norm_b = normalize_question(query_a), normalize_question(query_b)
    masked_a = mask_value_slots(query_a, lexicon)
    masked_b = mask_value_slots(query_b, lexicon)

    location = 0.0
    if (lexicon.location_pattern.search(query_a)
            and lexicon.location_pattern.search(query_b)):
        strip_a = normalize_question(lexicon.location_pattern.sub(" ", query_a))
        strip_b = normalize_question(lexicon.location_pattern.sub(" ", query_b))
        if strip_a == strip_b:
            location = increment

    tokens_a, tokens_b = _word_tokens(norm_a), _word_tokens(norm_b)
    category = 0.0
    for group in lexicon.synonym_groups:
        if group & tokens_a and group & tokens_b:
            category = increment
            break

    structural = 0.0
    index_a = _template_index(masked_a, lexicon)
    if index_a is not None and index_a == _template_index(masked_b, lexicon):
        structural = increment

    phrase = 0.0
    for p in lexicon.key_phrases:
        if p in norm_a and p in norm_b:
            phrase = increment
            break

    return BoostBreakdown(location_norm=location, category_variation=category,
                          structural_pattern=structural, key_phrase=phrase)


def adjusted_similarity(s_base: float, boost: BoostBreakdown) -> float:
    """Boosted similarity, capped so boosts can never reach return range."""
    return min(ADJUSTED_SIMILARITY_CAP, s_base + boost.total)


def decide(s_base: float, s_adj: float, thresholds: Thresholds = Thresholds()) -> Mode:
    """Dual-threshold decision.

    Return when the raw score reaches theta_return; otherwise guide when
    the adjusted score reaches theta_guide; otherwise generate fresh.
    """
    if s_base >= thresholds.theta_return:
        return Mode.RETURN
    if s_adj >= thresholds.theta_guide:
        return Mode.GUIDE
    return Mode.GENERATE


# -- semantic equivalence ---------------------------------------------------


@dataclass(frozen=True)
class AdaptationHint:
    """One field-level difference between a reference and the current query."""

    field: str
    reference_value: str
    current_value: str

    def __post_init__(self) -> None:
        if not self.field:
            raise ValueError("adaptation field must be non-empty")
        if self.reference_value == self.current_value:
            raise ValueError(
                f"adaptation for {self.field!r} does not change the value")

    def to_record(self) -> dict[str, str]:
        return {"field": self.field,
                "reference_value": self.reference_value,
                "current_value": self.current_value}

    @classmethod
    def from_record(cls, record: dict[str, str]) -> "AdaptationHint":
        return cls(field=record["field"],
                   reference_value=record["reference_value"],
                   current_value=record["current_value"])


@dataclass(frozen=True)
class EquivalenceVerdict:
    """Outcome of semantic-equivalence detection over ranked candidates."""

    matched: bool
    matched_index: int | None = None
    adaptations: tuple[AdaptationHint, ...] = ()
    confidence: float = 0.0

    def __post_init__(self) -> None:
        if self.matched:
            if self.adaptations:
                raise ValueError("a matched verdict carries no adaptations")
            if self.matched_index is None:
                raise ValueError("a matched verdict names its candidate")
        elif self.adaptations and self.matched_index is None:
            raise ValueError("adaptations must name the adapted candidate")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be within [0, 1]")

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {"matched": self.matched}
        if self.matched_index is not None:
            record["matched_index"] = self.matched_index
        record["adaptations"] = [h.to_record() for h in self.adaptations]
        if self.confidence:
            record["confidence"] = self.confidence
        return record

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "EquivalenceVerdict":
        return cls(
            matched=record["matched"],
            matched_index=record.get("matched_index"),
            adaptations=tuple(AdaptationHint.from_record(h)
                              for h in record.get("adaptations", ())),
            confidence=record.get("confidence", 0.0),
        )


class EquivalenceOracle(Protocol):
    """Pluggable equivalence detector (LLM-backed in production)."""

    def evaluate(self, query: str,
                 candidates: Sequence[CacheEntry]) -> EquivalenceVerdict: ...


class MockEquivalenceOracle:
    """Deterministic equivalence detection over value-masked text.

    A candidate matches outright only when the masked texts agree, the
    structural signatures are identical, and every extracted value slot
    pairs equal — i.e. the same question modulo formatting. Failing that,
    the first candidate (in given order) whose similarity key equals the
    query's yields adaptation hints from the differing slot values.
    """

    def __init__(self, lexicon: DomainLexicon,
                 signature_fn: Callable[[str], QuerySignature] | None = None) -> None:
        self.lexicon = lexicon
        self.signature_fn = signature_fn or (
            lambda text: extract_signature(text, lexicon))

    def _slot_pairs(self, reference: str, current: str) -> list[AdaptationHint]:
        ref_slots = extract_value_slots(reference, self.lexicon)
        cur_slots = extract_value_slots(current, self.lexicon)
        by_field: dict[str, list[str]] = {}
        for fieldname, value in cur_slots:
            by_field.setdefault(fieldname, []).append(value)
        hints: list[AdaptationHint] = []
        seen: dict[str, int] = {}
        for fieldname, ref_value in ref_slots:
            position = seen.get(fieldname, 0)
            seen[fieldname] = position + 1
            values = by_field.get(fieldname, ())
            if position >= len(values):
                continue
            cur_value = values[position]
            if cur_value != ref_value:
                hints.append(AdaptationHint(field=fieldname,
                                            reference_value=ref_value,
                                            current_value=cur_value))
        return hints

    def evaluate(self, query: str,
                 candidates: Sequence[CacheEntry]) -> EquivalenceVerdict:
        cur_masked = mask_value_slots(query, self.lexicon)
        cur_sig = self.signature_fn(query)
        cur_key = build_similarity_key(cur_sig)

        for i, entry in enumerate(candidates):
            if (mask_value_slots(entry.question, self.lexicon) == cur_masked
                    and entry.signature == cur_sig
                    and not self._slot_pairs(entry.question, query)):
                return EquivalenceVerdict(matched=True, matched_index=i,
                                          confidence=1.0)
        for i, entry in enumerate(candidates):
            if entry.similarity_key != cur_key:
                continue
            hints = self._slot_pairs(entry.question, query)
            if hints:
                return EquivalenceVerdict(matched=False, matched_index=i,
                                          adaptations=tuple(hints),
                                          confidence=0.95)
        return EquivalenceVerdict(matched=False)


def check_equivalence(query: str, candidates: Sequence[CacheEntry],
                      oracle: EquivalenceOracle) -> EquivalenceVerdict:
    """Run the equivalence oracle over candidates ranked by adjusted score.

    Oracle failures degrade to a no-match verdict (never a fabricated
    match), pushing the decision toward fresh generation.
    """
    if not candidates:
        raise ValueError("check_equivalence requires at least one candidate")
    try:
        return oracle.evaluate(query, candidates)
    except Exception:
        return EquivalenceVerdict(matched=False)


# -- reference guidance ------------------------------------------------------

GUIDANCE_HEADER = "=== REFERENCE GUIDANCE ==="
_SIMILARITY_LINE = re.compile(
    r"^Similar question found \(similarity: (\d\.\d\d)\)$")
_HINT_LINE = re.compile(r"^- ([^:]+): (.*) -> (.*)$")
_STEP_LINE = re.compile(r"^(\d+)\. (.*)$")


def format_guidance(entry: CacheEntry,
                    adaptations: Sequence[AdaptationHint],
                    s_adj: float) -> str:
    """Render the guidance block injected into the planner.

    Layout is bit-exact: header, similarity line (two decimals), optional
    `Required Adaptations:` section, then the reference plan with adapted
    values replaced by `[field]` placeholders.
    """
    lines = [GUIDANCE_HEADER,
             f"Similar question found (similarity: {s_adj:.2f})",
             ""]
    if adaptations:
        lines.append("Required Adaptations:")
        for hint in adaptations:
            lines.append(f"- {hint.field}: {hint.reference_value} -> "
                         f"{hint.current_value}")
        lines.append("")
    lines.append("Reference Plan:")
    for i, step in enumerate(entry.plan, start=1):
        rendered = step
        for hint in adaptations:
            rendered = rendered.replace(hint.reference_value, f"[{hint.field}]")
        lines.append(f"{i}. {rendered}")
    return "\n".join(lines)


def parse_guidance(text: str) -> tuple[float, list[AdaptationHint], list[str]]:
    """Inverse of format_guidance: (similarity, hints, plan steps).

    Raises ValueError when the block does not match the emitted layout.
    """
    lines = text.split("\n")
    if not lines or lines[0] != GUIDANCE_HEADER:
        raise ValueError("missing guidance header")
    match = _SIMILARITY_LINE.match(lines[1]) if len(lines) > 1 else None
    if match is None:
        raise ValueError("missing similarity line")
    similarity = float(match.group(1))
    hints: list[AdaptationHint] = []
    steps: list[str] = []
    section = ""
    for line in lines[2:]:
        if line == "Required Adaptations:":
            section = "hints"
        elif line == "Reference Plan:":
            section = "plan"
        elif section == "hints" and line:
            m = _HINT_LINE.match(line)
            if m is None:
                raise ValueError(f"bad adaptation line: {line!r}")
            hints.append(AdaptationHint(field=m.group(1),
                                        reference_value=m.group(2),
                                        current_value=m.group(3)))
        elif section == "plan" and line:
            m = _STEP_LINE.match(line)
            if m is None:
                raise ValueError(f"bad plan line: {line!r}")
            steps.append(m.group(2))
    if not steps:
        raise ValueError("guidance contains no plan steps")
    return similarity, hints, steps


# -- end-to-end match decision ----------------------------------------------


@dataclass(frozen=True)
class MatchDecision:
    """The router's verdict for one query."""

    mode: Mode
    candidate: CacheEntry | None = None
    s_base: float = 0.0
    s_adj: float = 0.0
    structural: float = 0.0
    adaptations: tuple[AdaptationHint, ...] = ()
    guidance: str | None = None

    def __post_init__(self) -> None:
        if self.mode is Mode.RETURN:
            if self.candidate is None or self.guidance is not None:
                raise ValueError("return mode carries a candidate, no guidance")
        elif self.mode is Mode.GUIDE:
            if self.candidate is None or self.guidance is None:
                raise ValueError("guide mode carries candidate and guidance")
        else:
            if (self.candidate is not None or self.guidance is not None
                    or self.adaptations):
                raise ValueError("generate mode carries no reference material")

    def to_record(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "candidate": None if self.candidate is None else self.candidate.to_record(),
            "s_base": self.s_base,
            "s_adj": self.s_adj,
            "structural": self.structural,
            "adaptations": [h.to_record() for h in self.adaptations],
            "guidance": self.guidance,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "MatchDecision":
        candidate = record.get("candidate")
        return cls(
            mode=Mode(record["mode"]),
            candidate=None if candidate is None else CacheEntry.from_record(candidate),
            s_base=record["s_base"],
            s_adj=record["s_adj"],
            structural=record["structural"],
            adaptations=tuple(AdaptationHint.from_record(h)
                              for h in record.get("adaptations", ())),
            guidance=record.get("guidance"),
        )


def match_reference(query: str, query_signature: QuerySignature,
                    query_embedding: Embedding, store: CacheStore,
                    lexicon: DomainLexicon, oracle: EquivalenceOracle,
                    thresholds: Thresholds = Thresholds(), k: int = 5,
                    boost_increment: float = DEFAULT_BOOST_INCREMENT) -> MatchDecision:
    """Route one query against the cache.

    Fetches the top-k candidates by raw cosine, boosts each against the
    query text, applies the dual-threshold decision, and in guide mode
    runs equivalence detection over the candidates ranked by adjusted
    score to pick the reference and its adaptation hints.
    """
    ranked_base = store.top_k(query_embedding, k)
    if not ranked_base:
        return MatchDecision(mode=Mode.GENERATE)

    scored = []
    for entry, s_base in ranked_base:
        boost = compute_boost(query, entry.question, lexicon, boost_increment)
        scored.append((entry, s_base, adjusted_similarity(s_base, boost)))

    best_base = max(s for _, s, _ in scored)
    best_adj = max(s for _, _, s in scored)
    mode = decide(best_base, best_adj, thresholds)

    if mode is Mode.RETURN:
        winner, s_base, s_adj = max(scored, key=lambda row: row[1])
        return MatchDecision(
            mode=mode, candidate=winner, s_base=s_base, s_adj=s_adj,
            structural=structural_similarity(query_signature, winner.signature))

    if mode is Mode.GENERATE:
        return MatchDecision(mode=mode, s_base=best_base, s_adj=best_adj)

    by_adj = sorted(scored, key=lambda row: (-row[2], -row[1], row[0].id))
    candidates = [entry for entry, _, _ in by_adj]
    verdict = check_equivalence(query, candidates, oracle)
    index = verdict.matched_index if verdict.matched_index is not None else 0
    winner, s_base, s_adj = by_adj[index]
    guidance = format_guidance(winner, verdict.adaptations, s_adj)
    return MatchDecision(
        mode=mode, candidate=winner, s_base=s_base, s_adj=s_adj,
        structural=structural_similarity(query_signature, winner.signature),
        adaptations=verdict.adaptations, guidance=guidance)
