"""Per-query pipeline: guard, intent, cache match, then conditional
generation with retry-with-feedback and checkpointing.

The stage sequence is a function of accumulated state only, so a run
restored from any checkpoint continues exactly where it stopped and, under
deterministic agents, finishes with a byte-identical response. Return-mode
matches short-circuit the generation stages entirely; executor failures
regenerate code with the error context appended, at most twice.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .agents import AgentSuite, ExecutionResult, InsightsRecord, IntentResult
from .domain import DomainLexicon, default_lexicon
from .embedding import Embedder
from .matching import (
    DEFAULT_BOOST_INCREMENT,
    EquivalenceOracle,
    MatchDecision,
    Mode,
    MockEquivalenceOracle,
    Thresholds,
    match_reference,
)
from .prompts import PromptRepository, assemble, filter_by_tables
from .schema import SchemaCatalog
from .signature import QuerySignature
from .store import CacheEntry, CacheStore, entry_id_for

MAX_RETRIES = 2

RETRY_HEADER = "PREVIOUS ATTEMPT FAILED:"


class UnknownCheckpointError(KeyError):
    """restore() was asked for a checkpoint id that was never written."""


class CheckpointStore(Protocol):
    """Id-addressable storage for serialized pipeline states."""

    def put(self, checkpoint_id: str, record: dict[str, Any]) -> None: ...

    def get(self, checkpoint_id: str) -> dict[str, Any]: ...


class InMemoryCheckpointStore:
    """Dict-backed checkpoint store; safe for concurrent writers."""

    def __init__(self) -> None:
        self._records: dict[str, dict[str, Any]] = {}
        self._lock = threading.Lock()

    def put(self, checkpoint_id: str, record: dict[str, Any]) -> None:
        with self._lock:
            self._records[checkpoint_id] = record

    def get(self, checkpoint_id: str) -> dict[str, Any]:
        with self._lock:
            if checkpoint_id not in self._records:
                raise UnknownCheckpointError(checkpoint_id)
            return self._records[checkpoint_id]


class FileCheckpointStore:
    """Append-only JSONL checkpoint log, one self-describing record per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()

    def put(self, checkpoint_id: str, record: dict[str, Any]) -> None:
        line = json.dumps({"checkpoint_id": checkpoint_id, "state": record},
                          sort_keys=True, separators=(",", ":"))
        with self._lock:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")

    def get(self, checkpoint_id: str) -> dict[str, Any]:
        found: dict[str, Any] | None = None
        with self._lock:
            if self.path.exists():
                with self.path.open("r", encoding="utf-8") as handle:
                    for line in handle:
                        if not line.strip():
                            continue
                        record = json.loads(line)
                        if record["checkpoint_id"] == checkpoint_id:
                            found = record["state"]
        if found is None:
            raise UnknownCheckpointError(checkpoint_id)
        return found


@dataclass
class PipelineState:
    """The evolving per-query record threaded through all stages."""

    query: str
    guard_verdict: str = ""
    guard_guidance: str | None = None
    intent: str = ""
    tables: frozenset[str] = frozenset()
    signature: QuerySignature | None = None
    match: MatchDecision | None = None
    plan: tuple[str, ...] | None = None
    code: str | None = None
    execution: ExecutionResult | None = None
    summary: str | None = None
    insights: InsightsRecord | None = None
    retry_count: int = 0
    checkpoint_id: str = ""
    stage: str = ""
    terminal: bool = False
    response: str | None = None
    error: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "guard_verdict": self.guard_verdict,
            "guard_guidance": self.guard_guidance,
            "intent": self.intent,
            "tables": sorted(self.tables),
            "signature": None if self.signature is None else self.signature.to_record(),
            "match": None if self.match is None else self.match.to_record(),
            "plan": None if self.plan is None else list(self.plan),
            "code": self.code,
            "execution": None if self.execution is None else self.execution.to_record(),
            "summary": self.summary,
            "insights": None if self.insights is None else self.insights.to_record(),
            "retry_count": self.retry_count,
            "checkpoint_id": self.checkpoint_id,
            "stage": self.stage,
            "terminal": self.terminal,
            "response": self.response,
            "error": self.error,
            "extras": self.extras,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "PipelineState":
        return cls(
            query=record["query"],
            guard_verdict=record["guard_verdict"],
            guard_guidance=record["guard_guidance"],
            intent=record["intent"],
            tables=frozenset(record["tables"]),
            signature=(None if record["signature"] is None
                       else QuerySignature.from_record(record["signature"])),
            match=(None if record["match"] is None
                   else MatchDecision.from_record(record["match"])),
            plan=None if record["plan"] is None else tuple(record["plan"]),
            code=record["code"],
            execution=(None if record["execution"] is None
                       else ExecutionResult.from_record(record["execution"])),
            summary=record["summary"],
            insights=(None if record["insights"] is None
                      else InsightsRecord.from_record(record["insights"])),
            retry_count=record["retry_count"],
            checkpoint_id=record["checkpoint_id"],
            stage=record["stage"],
            terminal=record["terminal"],
            response=record["response"],
            error=record["error"],
            extras=dict(record["extras"]),
        )


@dataclass
class PipelineConfig:
    """Everything a run needs beyond the agents themselves."""

    embedder: Embedder
    schema_hash: str = ""
    lexicon: DomainLexicon = field(default_factory=default_lexicon)
    thresholds: Thresholds = field(default_factory=Thresholds)
    k: int = 5
    boost_increment: float = DEFAULT_BOOST_INCREMENT
    populate: bool = True
    oracle: EquivalenceOracle | None = None
    schema: SchemaCatalog | None = None

    def equivalence_oracle(self) -> EquivalenceOracle:
        if self.oracle is None:
            self.oracle = MockEquivalenceOracle(self.lexicon)
        return self.oracle


def checkpoint(state: PipelineState, store: CheckpointStore,
               checkpoint_id: str) -> str:
    """Persist the state under `checkpoint_id` and stamp it on the state."""
    state.checkpoint_id = checkpoint_id
    store.put(checkpoint_id, state.to_record())
    return checkpoint_id


def restore(checkpoint_id: str, store: CheckpointStore) -> PipelineState:
    """Rehydrate a previously checkpointed state."""
    return PipelineState.from_record(store.get(checkpoint_id))


def record_outcome(state: PipelineState, cache: CacheStore,
                   config: PipelineConfig) -> CacheEntry | None:
    """Feed a terminal state back into the cache.

    Return-mode outcomes bump the winning entry's return counter; guide
    and generate successes insert a new entry built from the state (when
    population is enabled), with guide mode also crediting the reference.
    Failed runs and guard short-circuits leave the cache untouched.
    """
    if not state.terminal or state.match is None or state.error is not None:
        return None
    decision = state.match
    if decision.mode is Mode.RETURN:
        assert decision.candidate is not None
        cache.note_hit(decision.candidate.id, "return")
        return None
    if decision.mode is Mode.GUIDE and decision.candidate is not None:
        cache.note_hit(decision.candidate.id, "guide")
    if (not config.populate or state.response is None
            or state.plan is None or state.code is None
            or state.signature is None):
        return None
    entry = CacheEntry(
        id=entry_id_for(state.query, config.schema_hash),
        question=state.query,
        signature=state.signature,
        embedding=config.embedder.embed(state.query),
        plan=state.plan,
        code=state.code,
        response=state.response,
        schema_hash=config.schema_hash,
    )
    cache.insert(entry)
    return entry


def _next_stage(state: PipelineState, suite: AgentSuite) -> str | None:
    """Pure routing: which stage runs next, given what state holds so far."""
    stage = state.stage
    if stage == "":
        return "guard"
    if stage == "guard":
        return "finalize" if state.guard_verdict == "off_domain" else "intent"
    if stage == "intent":
        return "match"
    if stage == "match":
        assert state.match is not None
        return "finalize" if state.match.mode is Mode.RETURN else "plan"
    if stage == "plan":
        return "codegen"
    if stage == "codegen":
        return "execute"
    if stage == "execute":
        assert state.execution is not None
        if not state.execution.ok:
            return "codegen" if state.extras.get("retry_pending") else "finalize"
        if suite.summarizer is not None:
            return "summarize"
        if suite.insights_generator is not None:
            return "insights"
        return "finalize"
    if stage == "summarize":
        return "insights" if suite.insights_generator is not None else "finalize"
    if stage == "insights":
        return "finalize"
    if stage == "finalize":
        return None
    raise ValueError(f"unknown stage {stage!r}")


class _Runner:
    """Drives one query through the stage machine."""

    def __init__(self, suite: AgentSuite, cache: CacheStore,
                 prompts: PromptRepository | None, config: PipelineConfig,
                 checkpoints: CheckpointStore, run_id: str,
                 fixture_id: str | None) -> None:
        self.suite = suite
        self.cache = cache
        self.prompts = prompts
        self.config = config
        self.checkpoints = checkpoints
        self.run_id = run_id
        self.fixture_id = fixture_id
        self.seq = 0

    def _context(self, state: PipelineState, audience: str) -> str:
        """Intent-filtered prompt context; also books token accounting."""
        if self.prompts is None or self.config.schema is None:
            return ""
        tables = sorted(state.tables)
        selected = filter_by_tables(self.prompts, audience, tables)
        descriptions = self.config.schema.description_blocks(tables)
        samples = self.config.schema.sample_blocks(tables)
        filtered = assemble(selected, descriptions, samples)
        everything = sorted(self.prompts.for_audience(audience),
                            key=lambda f: (f.priority, f.id))
        full = assemble(everything, descriptions, samples)
        state.extras["tokens_full"] = (
            state.extras.get("tokens_full", 0) + full.token_count)
        state.extras["tokens_filtered"] = (
            state.extras.get("tokens_filtered", 0) + filtered.token_count)
        return filtered.text

    def _intent_result(self, state: PipelineState) -> IntentResult:
        assert state.signature is not None
        return IntentResult(intent=state.intent, tables=state.tables,
                            signature=state.signature)

    def _run_stage(self, state: PipelineState, stage: str) -> None:
        config = self.config
        if stage == "guard":
            verdict = self.suite.guard.review(state.query)
            state.guard_verdict = "relevant" if verdict.relevant else "off_domain"
            state.guard_guidance = verdict.guidance
        elif stage == "intent":
            result = self.suite.intent_classifier.classify(state.query)
            state.intent = result.intent
            state.tables = frozenset(result.tables)
            state.signature = result.signature
        elif stage == "match":
            assert state.signature is not None
            state.match = match_reference(
                state.query, state.signature,
                config.embedder.embed(state.query), self.cache,
                config.lexicon, config.equivalence_oracle(),
                thresholds=config.thresholds, k=config.k,
                boost_increment=config.boost_increment)
        elif stage == "plan":
            assert state.match is not None
            guidance = (state.match.guidance
                        if state.match.mode is Mode.GUIDE else None)
            context = self._context(state, "planner")
            state.plan = self.suite.planner.plan(
                state.query, self._intent_result(state), guidance, context)
        elif stage == "codegen":
            assert state.plan is not None
            state.extras["retry_pending"] = False
            context = self._context(state, "codegen")
            state.code = self.suite.code_generator.generate(
                state.query, state.plan, context,
                state.extras.get("retry_feedback"))
        elif stage == "execute":
            assert state.code is not None
            result = self.suite.executor.run(
                state.code, fixture_id=self.fixture_id,
                attempt=state.retry_count)
            state.execution = result
            if not result.ok and state.retry_count < MAX_RETRIES:
                state.retry_count += 1
                state.extras["retry_pending"] = True
                state.extras["retry_feedback"] = (
                    f"{RETRY_HEADER} {result.error_message or result.status}"
                    f"\n{state.code}")
        elif stage == "summarize":
            assert state.execution is not None
            if state.execution.ok:
                state.summary = self.suite.summarizer.summarize(
                    state.query, state.execution)
        elif stage == "insights":
            assert state.execution is not None
            if state.execution.ok:
                state.insights = self.suite.insights_generator.analyze(
                    state.execution)
        elif stage == "finalize":
            self._finalize(state)
        else:
            raise ValueError(f"unknown stage {stage!r}")

    def _finalize(self, state: PipelineState) -> None:
        if state.guard_verdict == "off_domain":
            state.response = state.guard_guidance
        elif state.match is not None and state.match.mode is Mode.RETURN:
            assert state.match.candidate is not None
            state.response = state.match.candidate.response
        elif state.execution is not None and state.execution.ok:
            state.response = (state.summary if state.summary is not None
                              else state.execution.text_out)
        else:
            message = "execution failed"
            if state.execution is not None:
                message = state.execution.error_message or state.execution.status
            state.error = message
            state.response = f"ERROR: {message}"
        state.terminal = True
        record_outcome(state, self.cache, self.config)

    def drive(self, state: PipelineState,
              stop_after: str | None = None) -> PipelineState:
        while True:
            stage = _next_stage(state, self.suite)
            if stage is None:
                return state
            self._run_stage(state, stage)
            state.stage = stage
            self.seq += 1
            checkpoint(state, self.checkpoints, f"{self.run_id}:{self.seq:03d}")
            if stop_after is not None and stage == stop_after:
                return state


def run(query: str, suite: AgentSuite, cache: CacheStore,
        prompts: PromptRepository | None, config: PipelineConfig, *,
        checkpoints: CheckpointStore | None = None, run_id: str | None = None,
        fixture_id: str | None = None,
        stop_after: str | None = None) -> tuple[str | None, PipelineState]:
    """Process one query end to end; returns (response, final state).

    `stop_after` abandons the run right after the named stage checkpoints,
    emulating a crash; `resume` picks it up from the stored checkpoint.
    """
    runner = _Runner(suite, cache, prompts, config,
                     checkpoints or InMemoryCheckpointStore(),
                     run_id or uuid.uuid4().hex[:12], fixture_id)
    state = runner.drive(PipelineState(query=query), stop_after=stop_after)
    return state.response, state


def resume(checkpoint_id: str, suite: AgentSuite, cache: CacheStore,
           prompts: PromptRepository | None, config: PipelineConfig, *,
           checkpoints: CheckpointStore, run_id: str | None = None,
           fixture_id: str | None = None) -> tuple[str | None, PipelineState]:
    """Continue an interrupted run from a checkpoint to completion."""
    state = restore(checkpoint_id, checkpoints)
    runner = _Runner(suite, cache, prompts, config, checkpoints,
                     run_id or f"{checkpoint_id.split(':', 1)[0]}-resumed",
                     fixture_id)
    state = runner.drive(state)
    return state.response, state
