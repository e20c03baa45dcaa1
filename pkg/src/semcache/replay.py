"""Offline replay of query logs through the mock-agent pipeline.

Replay loads a seeded cache, a prompt repository, and a schema, then
drives every log record through the pipeline with deterministic mocks,
emitting a per-record decision trace plus an aggregate report (mode mix,
cache utilization, similarity histogram, token accounting, expectation
mismatches). Two replays of the same inputs produce byte-identical
artifacts; the optional worker pool aggregates in input order so it
changes nothing but wall-clock time.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .agents import ExecutionResult, UnknownFixtureError, build_mock_suite
from .domain import DomainLexicon, default_lexicon, extract_signature
from .embedding import HashEmbedder
from .matching import Thresholds
from .pipeline import PipelineConfig, PipelineState, run
from .prompts import PromptRepository, ReductionReport, load_repository
from .schema import SchemaCatalog
from .store import CacheEntry, CacheStore, entry_id_for


class ReplayInputError(ValueError):
    """A replay input file or binding is unusable."""


@dataclass(frozen=True)
class QueryLogRecord:
    """One replayable query, optionally with expectations and a fixture."""

    query: str
    expected_mode: str | None = None
    expected_intent: str | None = None
    fixture_id: str | None = None

    def __post_init__(self) -> None:
        if not self.query:
            raise ValueError("query must be non-empty")


def load_query_log(path: str | Path) -> list[QueryLogRecord]:
    records: list[QueryLogRecord] = []
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            records.append(QueryLogRecord(
                query=raw["query"],
                expected_mode=raw.get("expected_mode"),
                expected_intent=raw.get("expected_intent"),
                fixture_id=raw.get("fixture_id"),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ReplayInputError(f"{path}:{lineno}: bad log record: {exc}") from exc
    return records


def load_fixtures(path: str | Path) -> dict[str, list[ExecutionResult]]:
    """Executor scripts: {fixture_id: [per-attempt execution results]}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return {fixture_id: [ExecutionResult.from_record(r) for r in results]
            for fixture_id, results in raw.items()}


HISTOGRAM_BINS: tuple[tuple[float, float, str], ...] = (
    (0.0, 0.30, "[0.00, 0.30)"),
    (0.30, 0.50, "[0.30, 0.50)"),
    (0.50, 0.70, "[0.50, 0.70)"),
    (0.70, 0.90, "[0.70, 0.90)"),
    (0.90, 0.99, "[0.90, 0.99)"),
    (0.99, 1.0, "[0.99, 1.00]"),
)


def histogram_bin(s_base: float) -> str:
    """Bin label for a base similarity; scores below 0 clamp into the
    lowest bin and 1.0 lands in the top (closed) bin."""
    for low, high, label in HISTOGRAM_BINS[:-1]:
        if s_base < high:
            return label
    return HISTOGRAM_BINS[-1][2]


@dataclass(frozen=True)
class ReplayReport:
    """Aggregate outcome of one replay."""

    total: int
    mode_counts: dict[str, int]
    guarded: int
    failures: int
    utilization_pct: float
    histogram: tuple[tuple[str, int], ...]
    token_reduction: ReductionReport
    expected_mode_counts: dict[str, int]
    mode_mismatches: int
    intent_mismatches: int
    mismatch_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        bucketed = sum(self.mode_counts.values()) + self.guarded
        if bucketed != self.total:
            raise ValueError(f"mode counts ({bucketed}) do not cover "
                             f"total ({self.total})")
        expected = self.compute_utilization(self.mode_counts, self.total)
        if abs(self.utilization_pct - expected) > 1e-9:
            raise ValueError("utilization_pct inconsistent with mode counts")
        if sum(count for _, count in self.histogram) != self.total:
            raise ValueError("histogram does not cover all records")

    @staticmethod
    def compute_utilization(mode_counts: dict[str, int], total: int) -> float:
        if total == 0:
            return 0.0
        return (mode_counts.get("return", 0) + mode_counts.get("guide", 0)) / total

    def to_record(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "mode_counts": dict(sorted(self.mode_counts.items())),
            "guarded": self.guarded,
            "failures": self.failures,
            "utilization_pct": self.utilization_pct,
            "histogram": [[label, count] for label, count in self.histogram],
            "token_reduction": {
                "full_tokens": self.token_reduction.full_tokens,
                "filtered_tokens": self.token_reduction.filtered_tokens,
                "reduction_pct": self.token_reduction.reduction_pct,
            },
            "expected_mode_counts": dict(sorted(self.expected_mode_counts.items())),
            "mode_mismatches": self.mode_mismatches,
            "intent_mismatches": self.intent_mismatches,
            "mismatch_indices": list(self.mismatch_indices),
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "ReplayReport":
        tr = record["token_reduction"]
        return cls(
            total=record["total"],
            mode_counts=dict(record["mode_counts"]),
            guarded=record["guarded"],
            failures=record["failures"],
            utilization_pct=record["utilization_pct"],
            histogram=tuple((label, count) for label, count in record["histogram"]),
            token_reduction=ReductionReport(
                full_tokens=tr["full_tokens"],
                filtered_tokens=tr["filtered_tokens"],
                reduction_pct=tr["reduction_pct"]),
            expected_mode_counts=dict(record["expected_mode_counts"]),
            mode_mismatches=record["mode_mismatches"],
            intent_mismatches=record["intent_mismatches"],
            mismatch_indices=tuple(record["mismatch_indices"]),
        )


def render_report(report: ReplayReport) -> str:
    """Human-readable aligned table for a replay report."""

    def pct(value: float) -> str:
        return f"{100.0 * value:5.1f}%"

    def share(count: int) -> str:
        return pct(count / report.total) if report.total else pct(0.0)

    lines = [
        "semcache replay report",
        "======================",
        f"total queries              {report.total:7d}",
    ]
    for mode in ("return", "guide", "generate"):
        count = report.mode_counts.get(mode, 0)
        expected = report.expected_mode_counts.get(mode, 0)
        lines.append(f"  {mode:<9s}                {count:7d}  {share(count)}"
                     f"   (expected {expected})")
    lines.extend([
        f"  guarded                  {report.guarded:7d}  {share(report.guarded)}",
        f"cache utilization                     {pct(report.utilization_pct)}",
        f"failures                   {report.failures:7d}",
        f"expected-mode mismatches   {report.mode_mismatches:7d}",
        f"expected-intent mismatches {report.intent_mismatches:7d}",
        "",
        "similarity histogram (best cached candidate)",
    ])
    for label, count in report.histogram:
        lines.append(f"  {label:<14s}           {count:7d}  {share(count)}")
    tr = report.token_reduction
    lines.extend([
        "",
        "token accounting (generation-stage prompts)",
        f"  full context             {tr.full_tokens:9d}",
        f"  intent-filtered          {tr.filtered_tokens:9d}",
        f"  reduction                   {pct(tr.reduction_pct)}",
    ])
    return "\n".join(lines) + "\n"


@dataclass
class ReplayConfig:
    """Knobs for one replay run."""

    thresholds: Thresholds = field(default_factory=Thresholds)
    k: int = 5
    boost_increment: float = 0.02
    populate: bool = False
    workers: int = 1
    embedder_seed: int = 0
    lexicon: DomainLexicon = field(default_factory=default_lexicon)
    fixtures: dict[str, list[ExecutionResult]] = field(default_factory=dict)
    with_summary: bool = True
    with_insights: bool = True


def _trace_row(index: int, record: QueryLogRecord,
               state: PipelineState) -> dict[str, Any]:
    if state.guard_verdict == "off_domain":
        mode = "guarded"
        s_base = s_adj = 0.0
        matched = None
    else:
        assert state.match is not None
        mode = state.match.mode.value
        s_base, s_adj = state.match.s_base, state.match.s_adj
        matched = (state.match.candidate.id
                   if state.match.candidate is not None else None)
    return {
        "index": index,
        "query": record.query,
        "mode": mode,
        "s_base": s_base,
        "s_adj": s_adj,
        "intent": state.intent,
        "matched_id": matched,
        "expected_mode": record.expected_mode,
        "expected_intent": record.expected_intent,
        "mode_ok": record.expected_mode is None or record.expected_mode == mode,
        "intent_ok": (record.expected_intent is None
                      or record.expected_intent == state.intent),
        "failure": state.error is not None,
        "tokens_full": state.extras.get("tokens_full", 0),
        "tokens_filtered": state.extras.get("tokens_filtered", 0),
    }


def aggregate_trace(rows: Iterable[dict[str, Any]]) -> ReplayReport:
    """Fold per-record trace rows into a report (also the recount path)."""
    rows = list(rows)
    mode_counts = {"return": 0, "guide": 0, "generate": 0}
    expected_counts: dict[str, int] = {}
    guarded = failures = mode_mismatches = intent_mismatches = 0
    histogram = {label: 0 for _, _, label in HISTOGRAM_BINS}
    tokens_full = tokens_filtered = 0
    mismatch_indices: list[int] = []
    for row in rows:
        if row["mode"] == "guarded":
            guarded += 1
        else:
            mode_counts[row["mode"]] += 1
        if row["expected_mode"] is not None:
            expected_counts[row["expected_mode"]] = (
                expected_counts.get(row["expected_mode"], 0) + 1)
        histogram[histogram_bin(row["s_base"])] += 1
        if row["failure"]:
            failures += 1
        if not row["mode_ok"]:
            mode_mismatches += 1
            mismatch_indices.append(row["index"])
        if not row["intent_ok"]:
            intent_mismatches += 1
        tokens_full += row["tokens_full"]
        tokens_filtered += row["tokens_filtered"]
    return ReplayReport(
        total=len(rows),
        mode_counts=mode_counts,
        guarded=guarded,
        failures=failures,
        utilization_pct=ReplayReport.compute_utilization(mode_counts, len(rows)),
        histogram=tuple((label, histogram[label])
                        for _, _, label in HISTOGRAM_BINS),
        token_reduction=ReductionReport.from_counts(tokens_full, tokens_filtered),
        expected_mode_counts=expected_counts,
        mode_mismatches=mode_mismatches,
        intent_mismatches=intent_mismatches,
        mismatch_indices=tuple(mismatch_indices),
    )


def replay(log_path: str | Path, cache_path: str | Path,
           repo_path: str | Path | None, schema_path: str | Path | None,
           config: ReplayConfig | None = None,
           trace_path: str | Path | None = None,
           report_path: str | Path | None = None,
           report_json_path: str | Path | None = None) -> ReplayReport:
    """Replay a query log against a saved cache; see module docstring."""
    config = config or ReplayConfig()
    records = load_query_log(log_path)
    store = CacheStore.load(cache_path)
    repo: PromptRepository | None = (
        load_repository(repo_path) if repo_path is not None else None)
    schema: SchemaCatalog | None = (
        SchemaCatalog.load(schema_path) if schema_path is not None else None)
    embedder = HashEmbedder(dim=store.dim, seed=config.embedder_seed,
                            lexicon=config.lexicon)
    pipeline_config = PipelineConfig(
        embedder=embedder,
        schema_hash=schema.hash() if schema is not None else "",
        lexicon=config.lexicon,
        thresholds=config.thresholds,
        k=config.k,
        boost_increment=config.boost_increment,
        populate=config.populate,
        schema=schema,
    )

    def process(indexed: tuple[int, QueryLogRecord]) -> dict[str, Any]:
        index, record = indexed
        suite = build_mock_suite(config.lexicon, fixtures=config.fixtures,
                                 with_summary=config.with_summary,
                                 with_insights=config.with_insights)
        try:
            _, state = run(record.query, suite, store, repo, pipeline_config,
                           run_id=f"replay-{index:06d}",
                           fixture_id=record.fixture_id)
        except UnknownFixtureError as exc:
            raise ReplayInputError(
                f"log record {index} ({record.query!r}) references unknown "
                f"fixture {record.fixture_id!r}") from exc
        return _trace_row(index, record, state)

    indexed = list(enumerate(records))
    if config.workers > 1 and not config.populate:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(process, indexed))
    else:
        # Population mutates the store mid-replay, so it stays sequential.
        rows = [process(item) for item in indexed]

    report = aggregate_trace(rows)
    if trace_path is not None:
        lines = [json.dumps(row, sort_keys=True, separators=(",", ":"))
                 for row in rows]
        Path(trace_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if report_path is not None:
        Path(report_path).write_text(render_report(report), encoding="utf-8")
    if report_json_path is not None:
        Path(report_json_path).write_text(
            json.dumps(report.to_record(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
    return report


def load_trace(path: str | Path) -> list[dict[str, Any]]:
    rows = []
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ReplayInputError(f"{path}:{lineno}: bad trace row: {exc}") from exc
    return rows


def seed_cache(corpus_path: str | Path, cache_path: str | Path,
               schema_path: str | Path, dim: int = 256,
               embedder_seed: int = 0,
               lexicon: DomainLexicon | None = None) -> int:
    """Embed, sign, and insert every corpus record; saves the store.

    Re-seeding the same corpus replaces entries by normalized question, so
    the operation is idempotent.
    """
    lexicon = lexicon or default_lexicon()
    schema = SchemaCatalog.load(schema_path)
    digest = schema.hash()
    embedder = HashEmbedder(dim=dim, seed=embedder_seed, lexicon=lexicon)
    cache = Path(cache_path)
    store = CacheStore.load(cache) if cache.exists() else CacheStore(dim=dim)
    if store.dim != dim:
        raise ReplayInputError(
            f"existing cache has dimension {store.dim}, requested {dim}")
    count = 0
    for lineno, line in enumerate(
            Path(corpus_path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            entry = CacheEntry(
                id=entry_id_for(raw["question"], digest),
                question=raw["question"],
                signature=extract_signature(raw["question"], lexicon),
                embedding=embedder.embed(raw["question"]),
                plan=tuple(raw["plan"]),
                code=raw["code"],
                response=raw["response"],
                schema_hash=digest,
                created_at=float(lineno),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ReplayInputError(
                f"{corpus_path}:{lineno}: bad corpus record: {exc}") from exc
        store.insert(entry)
        count += 1
    store.save(cache)
    return count
