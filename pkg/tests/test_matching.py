"""Routing, boosts, equivalence detection, and guidance formatting."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from semcache.domain import extract_signature
from semcache.embedding import Embedding
from semcache.matching import (
    AdaptationHint,
    BoostBreakdown,
    EquivalenceVerdict,
    MatchDecision,
    Mode,
    MockEquivalenceOracle,
    Thresholds,
    adjusted_similarity,
    check_equivalence,
    compute_boost,
    cosine_similarity,
    decide,
    format_guidance,
    match_reference,
    parse_guidance,
)
from semcache.store import CacheStore

from _oracles import parse_guidance_reference
from conftest import WORKED_CUR, WORKED_REF, make_entry

GOLDEN = Path(__file__).parent / "golden"


class TestCosine:
    def test_self_similarity(self):
        v = Embedding((0.3, -1.2, 4.0))
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity(Embedding((1.0, 0.0)),
                                 Embedding((0.0, 1.0))) == 0.0

    def test_forty_five_degrees(self):
        assert cosine_similarity(Embedding((1.0, 1.0)),
                                 Embedding((1.0, 0.0))) == pytest.approx(
            0.7071, abs=1e-4)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine_similarity(Embedding((1.0,)), Embedding((1.0, 2.0)))

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity(Embedding((0.0, 0.0)), Embedding((1.0, 0.0)))


class TestBoost:
    def test_location_only_difference_fires_location_source(self, lexicon):
        a = "Total stock value at Plant-A"
        b = "Total stock value at Plant-B"
        boost = compute_boost(a, b, lexicon)
        assert boost.location_norm > 0

    def test_unrelated_queries_no_boost(self, lexicon):
        boost = compute_boost("Total stock value at Plant-A",
                              "completely different words entirely", lexicon)
        assert boost.total == 0.0

    def test_identical_query_fires_all_four_sources(self, lexicon):
        q = WORKED_REF
        boost = compute_boost(q, q, lexicon)
        assert boost.location_norm == boost.category_variation == 0.02
        assert boost.structural_pattern == boost.key_phrase == 0.02
        assert boost.total == pytest.approx(0.08)

    def test_each_source_fires_at_most_once(self, lexicon):
        # Several synonym groups and key phrases overlap here; each source
        # still contributes a single increment.
        q = "Total stock value and inventory worth for item code X at Plant-A"
        boost = compute_boost(q, q, lexicon)
        assert boost.category_variation == 0.02
        assert boost.key_phrase == 0.02

    def test_configurable_increment(self, lexicon):
        boost = compute_boost(WORKED_REF, WORKED_REF, lexicon, increment=0.05)
        assert boost.total == pytest.approx(0.20)

    def test_negative_components_rejected(self):
        with pytest.raises(ValueError):
            BoostBreakdown(location_norm=-0.01)


class TestAdjustedSimilarity:
    def test_plain_sum_below_cap(self):
        boost = BoostBreakdown(location_norm=0.02, category_variation=0.02)
        assert adjusted_similarity(0.89, boost) == pytest.approx(0.93)

    def test_cap_applies(self):
        boost = BoostBreakdown(0.02, 0.02, 0.02, 0.02)
        assert adjusted_similarity(0.98, boost) == 0.99

    def test_zero_boost_identity(self):
        assert adjusted_similarity(0.50, BoostBreakdown()) == 0.50

    def test_monotone_in_both_arguments(self):
        rng = random.Random(3)
        for _ in range(300):
            s = rng.uniform(0, 1)
            b1 = rng.uniform(0, 0.1)
            b2 = b1 + rng.uniform(0, 0.1)
            low = adjusted_similarity(s, BoostBreakdown(key_phrase=b1))
            high = adjusted_similarity(s, BoostBreakdown(key_phrase=b2))
            assert high >= low
            assert adjusted_similarity(min(1.0, s + 0.01),
                                       BoostBreakdown(key_phrase=b1)) >= low


class TestDecide:
    def test_documented_examples(self):
        assert decide(0.997, 0.997) is Mode.RETURN
        assert decide(0.89, 0.89) is Mode.GUIDE
        assert decide(0.30, 0.34) is Mode.GENERATE

    def test_boundaries_inclusive(self):
        assert decide(0.995, 0.995) is Mode.RETURN
        assert decide(0.40, 0.50) is Mode.GUIDE
        assert decide(0.40, 0.4999) is Mode.GENERATE

    def test_return_reads_raw_score_only(self):
        # The adjusted score is capped at 0.99, so it can never reach the
        # return threshold; only the raw score decides returns.
        assert decide(0.994, 0.99) is Mode.GUIDE

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            Thresholds(theta_return=0.4, theta_guide=0.5)
        with pytest.raises(ValueError):
            Thresholds(theta_return=1.2)


class TestVerdictSerialization:
    def test_wire_keys_match_documented_format(self):
        verdict = EquivalenceVerdict(
            matched=False, matched_index=0,
            adaptations=(
                AdaptationHint("item_code", "ITEM-001-BB0", "ITEM-001-NN0"),
                AdaptationHint("organization", "Plant-A", "Plant-B"),
            ),
            confidence=0.95)
        record = verdict.to_record()
        assert json.dumps(record, sort_keys=True) == json.dumps({
            "matched": False,
            "matched_index": 0,
            "adaptations": [
                {"field": "item_code", "reference_value": "ITEM-001-BB0",
                 "current_value": "ITEM-001-NN0"},
                {"field": "organization", "reference_value": "Plant-A",
                 "current_value": "Plant-B"},
            ],
            "confidence": 0.95,
        }, sort_keys=True)
        assert EquivalenceVerdict.from_record(record) == verdict

    def test_matched_verdict_omits_empty_confidence_and_round_trips(self):
        verdict = EquivalenceVerdict(matched=True, matched_index=2,
                                     confidence=1.0)
        assert EquivalenceVerdict.from_record(verdict.to_record()) == verdict

    def test_invariants(self):
        with pytest.raises(ValueError):
            EquivalenceVerdict(matched=True, matched_index=0,
                               adaptations=(AdaptationHint("f", "a", "b"),))
        with pytest.raises(ValueError):
            EquivalenceVerdict(matched=True, matched_index=None)
        with pytest.raises(ValueError):
            EquivalenceVerdict(matched=False,
                               adaptations=(AdaptationHint("f", "a", "b"),))

    def test_hint_invariants(self):
        with pytest.raises(ValueError):
            AdaptationHint("", "a", "b")
        with pytest.raises(ValueError):
            AdaptationHint("field", "same", "same")


class TestMockEquivalence:
    def test_worked_pair_yields_both_adaptations(self, lexicon, embedder,
                                                 worked_entry):
        oracle = MockEquivalenceOracle(lexicon)
        verdict = check_equivalence(WORKED_CUR, [worked_entry], oracle)
        assert not verdict.matched
        assert verdict.matched_index == 0
        assert [h.to_record() for h in verdict.adaptations] == [
            {"field": "item_code", "reference_value": "ITEM-001-BB0",
             "current_value": "ITEM-001-NN0"},
            {"field": "organization", "reference_value": "Plant-A",
             "current_value": "Plant-B"},
        ]
        assert verdict.confidence == 0.95

    def test_exact_duplicate_matches_candidate_zero(self, lexicon, embedder,
                                                    worked_entry):
        oracle = MockEquivalenceOracle(lexicon)
        verdict = check_equivalence(WORKED_REF, [worked_entry], oracle)
        assert verdict.matched and verdict.matched_index == 0
        assert verdict.adaptations == ()

    def test_value_swap_is_not_an_outright_match(self, lexicon, embedder):
        # Identical wording with different literals must produce
        # adaptations, never a direct match.
        entry = make_entry(WORKED_REF, embedder, lexicon)
        query = WORKED_REF.replace("ITEM-001-BB0", "ITEM-777-KK8")
        verdict = check_equivalence(query, [entry],
                                    MockEquivalenceOracle(lexicon))
        assert not verdict.matched
        assert [h.field for h in verdict.adaptations] == ["item_code"]

    def test_distinct_keys_yield_empty_verdict(self, lexicon, embedder):
        entries = [
            make_entry("How many units of item ITEM-002-CC1 were consumed "
                       "in March 2025?", embedder, lexicon),
            make_entry("What is the total purchase order value for supplier "
                       "Vendor 12 in May 2024?", embedder, lexicon),
        ]
        verdict = check_equivalence("List aging buckets for fasteners",
                                    entries, MockEquivalenceOracle(lexicon))
        assert not verdict.matched
        assert verdict.matched_index is None
        assert verdict.adaptations == ()

    def test_empty_candidates_rejected(self, lexicon):
        with pytest.raises(ValueError):
            check_equivalence("anything", [], MockEquivalenceOracle(lexicon))

    def test_oracle_failure_degrades_to_no_match(self, lexicon, embedder,
                                                 worked_entry):
        class Brittle:
            def evaluate(self, query, candidates):
                raise RuntimeError("upstream LLM unavailable")

        verdict = check_equivalence(WORKED_CUR, [worked_entry], Brittle())
        assert verdict == EquivalenceVerdict(matched=False)

    def test_determinism(self, lexicon, embedder, worked_entry):
        oracle = MockEquivalenceOracle(lexicon)
        first = check_equivalence(WORKED_CUR, [worked_entry], oracle)
        for _ in range(5):
            assert check_equivalence(WORKED_CUR, [worked_entry], oracle) == first


class TestGuidance:
    def hints(self):
        return (AdaptationHint("item_code", "ITEM-001-BB0", "ITEM-001-NN0"),
                AdaptationHint("organization", "Plant-A", "Plant-B"))

    def test_worked_example_block_is_byte_exact(self, worked_entry):
        golden = (GOLDEN / "guidance_worked_example.txt").read_text(
            encoding="utf-8")
        assert format_guidance(worked_entry, self.hints(), 0.89) + "\n" == golden

    def test_no_adaptations_omits_section(self, worked_entry):
        text = format_guidance(worked_entry, (), 0.97)
        assert "Required Adaptations:" not in text
        assert text.split("\n")[2] == ""
        assert text.split("\n")[3] == "Reference Plan:"

    def test_three_hints_render_in_input_order(self, worked_entry):
        hints = (AdaptationHint("organization", "Plant-A", "Plant-C"),
                 AdaptationHint("item_code", "ITEM-001-BB0", "ITEM-002-CC1"),
                 AdaptationHint("metric", "STOCK_VALUE", "QUANTITY"))
        lines = format_guidance(worked_entry, hints, 0.75).split("\n")
        start = lines.index("Required Adaptations:") + 1
        assert lines[start:start + 3] == [
            "- organization: Plant-A -> Plant-C",
            "- item_code: ITEM-001-BB0 -> ITEM-002-CC1",
            "- metric: STOCK_VALUE -> QUANTITY",
        ]

    def test_round_trip_through_reference_parser(self, worked_entry):
        for hints in ((), self.hints()):
            text = format_guidance(worked_entry, hints, 0.89)
            similarity, parsed_hints, steps = parse_guidance_reference(text)
            assert similarity == 0.89
            assert len(parsed_hints) == len(hints)
            assert len(steps) == len(worked_entry.plan)

    def test_parse_guidance_inverts_format(self, worked_entry):
        text = format_guidance(worked_entry, self.hints(), 0.89)
        similarity, hints, steps = parse_guidance(text)
        assert similarity == 0.89
        assert tuple(hints) == self.hints()
        assert steps[1] == "Filter by ITEM_CODE = '[item_code]'"

    def test_parse_guidance_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_guidance("not a guidance block")


class TestMatchDecisionInvariants:
    def test_return_requires_candidate_without_guidance(self, worked_entry):
        with pytest.raises(ValueError):
            MatchDecision(mode=Mode.RETURN, candidate=None)
        with pytest.raises(ValueError):
            MatchDecision(mode=Mode.RETURN, candidate=worked_entry,
                          guidance="nope")

    def test_generate_carries_nothing(self, worked_entry):
        with pytest.raises(ValueError):
            MatchDecision(mode=Mode.GENERATE, candidate=worked_entry)

    def test_record_round_trip(self, worked_entry):
        decision = MatchDecision(mode=Mode.RETURN, candidate=worked_entry,
                                 s_base=0.999, s_adj=0.99, structural=1.0)
        restored = MatchDecision.from_record(decision.to_record())
        assert restored.mode is Mode.RETURN
        assert restored.candidate.id == worked_entry.id
        assert restored.s_base == 0.999


class TestMatchReference:
    def test_empty_store_generates(self, lexicon, embedder):
        store = CacheStore(dim=64)
        decision = match_reference(
            WORKED_CUR, extract_signature(WORKED_CUR, lexicon),
            embedder.embed(WORKED_CUR), store, lexicon,
            MockEquivalenceOracle(lexicon))
        assert decision.mode is Mode.GENERATE
        assert decision.s_base == 0.0

    def test_exact_duplicate_returns(self, lexicon, embedder, worked_store,
                                     worked_entry):
        decision = match_reference(
            WORKED_REF, extract_signature(WORKED_REF, lexicon),
            embedder.embed(WORKED_REF), worked_store, lexicon,
            MockEquivalenceOracle(lexicon))
        assert decision.mode is Mode.RETURN
        assert decision.candidate.id == worked_entry.id
        assert decision.s_base >= 0.995
        assert decision.guidance is None

    def test_worked_example_guides_with_adaptations(self, lexicon, embedder,
                                                    worked_store):
        decision = match_reference(
            WORKED_CUR, extract_signature(WORKED_CUR, lexicon),
            embedder.embed(WORKED_CUR), worked_store, lexicon,
            MockEquivalenceOracle(lexicon))
        assert decision.mode is Mode.GUIDE
        assert 0.50 <= decision.s_adj < 0.995
        assert decision.structural == pytest.approx(1.0)
        assert [h.field for h in decision.adaptations] == [
            "item_code", "organization"]
        assert decision.guidance.startswith("=== REFERENCE GUIDANCE ===")
        assert "- item_code: ITEM-001-BB0 -> ITEM-001-NN0" in decision.guidance

    def test_unrelated_query_generates(self, lexicon, embedder, worked_store):
        query = "Rank forecast bias for planning horizon 12 weeks in zone Z9"
        decision = match_reference(
            query, extract_signature(query, lexicon), embedder.embed(query),
            worked_store, lexicon, MockEquivalenceOracle(lexicon))
        assert decision.mode is Mode.GENERATE
        assert decision.candidate is None
