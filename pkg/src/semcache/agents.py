"""Agent interfaces and the bundled deterministic mock implementations.

Each pipeline stage is a small interface taking the relevant state slice;
real deployments back them with LLM calls and a sandboxed interpreter.
The mocks are pure functions of their inputs (plus, for the executor,
scripted per-attempt fixtures), which is what makes offline replay and
the acceptance suite byte-reproducible.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

from .domain import (
    DomainLexicon,
    OFF_DOMAIN_GUIDANCE,
    extract_signature,
    extract_value_slots,
    infer_intent,
    is_on_domain,
)
from .matching import parse_guidance
from .signature import QuerySignature

# -- stage output types -------------------------------------------------------


@dataclass(frozen=True)
class GuardVerdict:
    """Early relevance screen: pass the query through or short-circuit."""

    relevant: bool
    guidance: str | None = None

    def to_record(self) -> dict[str, Any]:
        return {"relevant": self.relevant, "guidance": self.guidance}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "GuardVerdict":
        return cls(relevant=record["relevant"], guidance=record.get("guidance"))


@dataclass(frozen=True)
class IntentResult:
    """Intent token, identified tables, and the structural signature."""

    intent: str
    tables: frozenset[str]
    signature: QuerySignature

    def to_record(self) -> dict[str, Any]:
        return {"intent": self.intent, "tables": sorted(self.tables),
                "signature": self.signature.to_record()}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "IntentResult":
        return cls(intent=record["intent"],
                   tables=frozenset(record["tables"]),
                   signature=QuerySignature.from_record(record["signature"]))


@dataclass(frozen=True)
class TabularResult:
    """One tabular output captured from execution."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_record(self) -> dict[str, Any]:
        return {"name": self.name, "columns": list(self.columns),
                "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "TabularResult":
        return cls(name=record["name"], columns=tuple(record["columns"]),
                   rows=tuple(tuple(r) for r in record["rows"]))


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of running generated code: tables, text, or a failure."""

    status: str  # ok | error | timeout
    tables_out: tuple[TabularResult, ...] = ()
    text_out: str = ""
    error_message: str | None = None

    def __post_init__(self) -> None:
        if self.status not in ("ok", "error", "timeout"):
            raise ValueError(f"unknown execution status {self.status!r}")
        if self.status == "error" and not self.error_message:
            raise ValueError("error results must carry an error_message")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_record(self) -> dict[str, Any]:
        return {"status": self.status,
                "tables_out": [t.to_record() for t in self.tables_out],
                "text_out": self.text_out,
                "error_message": self.error_message}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "ExecutionResult":
        return cls(status=record["status"],
                   tables_out=tuple(TabularResult.from_record(t)
                                    for t in record["tables_out"]),
                   text_out=record["text_out"],
                   error_message=record.get("error_message"))


@dataclass(frozen=True)
class InsightsRecord:
    """Structured insights grounded exclusively in execution output."""

    metrics: tuple[tuple[str, float], ...] = ()
    insights: tuple[str, ...] = ()
    recommendations: tuple[str, ...] = ()
    followups: tuple[str, ...] = ()

    def to_record(self) -> dict[str, Any]:
        return {"metrics": [[n, v] for n, v in self.metrics],
                "insights": list(self.insights),
                "recommendations": list(self.recommendations),
                "followups": list(self.followups)}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "InsightsRecord":
        return cls(metrics=tuple((n, v) for n, v in record["metrics"]),
                   insights=tuple(record["insights"]),
                   recommendations=tuple(record["recommendations"]),
                   followups=tuple(record["followups"]))


# -- agent interfaces ---------------------------------------------------------


class GuardAgent(Protocol):
    def review(self, query: str) -> GuardVerdict: ...


class IntentClassifierAgent(Protocol):
    def classify(self, query: str) -> IntentResult: ...


class PlannerAgent(Protocol):
    def plan(self, query: str, intent: IntentResult,
             guidance: str | None, context: str) -> tuple[str, ...]: ...


class CodeGeneratorAgent(Protocol):
    def generate(self, query: str, plan: Sequence[str], context: str,
                 retry_feedback: str | None) -> str: ...


class ExecutorAgent(Protocol):
    def run(self, code: str, fixture_id: str | None = None,
            attempt: int = 0) -> ExecutionResult: ...


class SummarizerAgent(Protocol):
    def summarize(self, query: str, execution: ExecutionResult) -> str: ...


class InsightsAgent(Protocol):
    def analyze(self, execution: ExecutionResult) -> InsightsRecord: ...


@dataclass
class AgentSuite:
    """The pluggable agent roster one pipeline run executes over.

    summarizer and insights_generator are optional; disabled stages are
    skipped entirely rather than stubbed.
    """

    guard: GuardAgent
    intent_classifier: IntentClassifierAgent
    planner: PlannerAgent
    code_generator: CodeGeneratorAgent
    executor: ExecutorAgent
    summarizer: SummarizerAgent | None = None
    insights_generator: InsightsAgent | None = None


# -- deterministic mocks --------------------------------------------------------

_FILTER_COLUMNS = {
    "item_code": "ITEM_CODE",
    "organization": "ORGANIZATION",
    "time_period": "PERIOD",
}

_METRIC_COLUMNS = {
    "value": "STOCK_VALUE",
    "quantity": "QUANTITY",
    "count": "RECORD_COUNT",
}


class MockGuard:
    """Keyword relevance screen over the domain lexicon."""

    def __init__(self, lexicon: DomainLexicon) -> None:
        self.lexicon = lexicon
        self.calls = 0

    def review(self, query: str) -> GuardVerdict:
        self.calls += 1
        if is_on_domain(query, self.lexicon):
            return GuardVerdict(relevant=True)
        return GuardVerdict(relevant=False, guidance=OFF_DOMAIN_GUIDANCE)


class MockIntentClassifier:
    """Rule-based intent, table identification, and signature extraction."""

    def __init__(self, lexicon: DomainLexicon) -> None:
        self.lexicon = lexicon
        self.calls = 0

    def classify(self, query: str) -> IntentResult:
        self.calls += 1
        signature = extract_signature(query, self.lexicon)
        return IntentResult(intent=infer_intent(query),
                            tables=signature.tables,
                            signature=signature)


class MockPlanner:
    """Template planner; adapts reference plans when guidance is present."""

    def __init__(self, lexicon: DomainLexicon) -> None:
        self.lexicon = lexicon
        self.calls = 0

    def plan(self, query: str, intent: IntentResult,
             guidance: str | None, context: str) -> tuple[str, ...]:
        self.calls += 1
        if guidance is not None:
            _, hints, steps = parse_guidance(guidance)
            adapted = []
            for step in steps:
                for hint in hints:
                    step = step.replace(f"[{hint.field}]", hint.current_value)
                adapted.append(step)
            return tuple(adapted)
        sig = intent.signature
        steps = [f"Load {sig.primary_table} table"]
        for join in sig.required_joins:
            steps.append(f"Join {join} on ITEM_CODE")
        for fieldname, value in extract_value_slots(query, self.lexicon):
            column = _FILTER_COLUMNS.get(fieldname, fieldname.upper())
            steps.append(f"Filter by {column} = '{value}'")
        metric_column = _METRIC_COLUMNS[sig.primary_metric]
        if sig.aggregation == "sum":
            steps.append(f"Calculate sum of {metric_column}")
        elif sig.aggregation == "avg":
            steps.append(f"Calculate average of {metric_column}")
        elif sig.aggregation == "count":
            steps.append("Count matching rows")
        else:
            steps.append(f"Select {metric_column}")
        if sig.primary_metric == "value":
            steps.append("Format as currency output")
        else:
            steps.append("Format output table")
        return tuple(steps)


_STEP_LOAD = re.compile(r"^Load (\w+) table$")
_STEP_JOIN = re.compile(r"^Join (\w+) on (\w+)$")
_STEP_FILTER = re.compile(r"^Filter by (\w+) = '([^']*)'$")
_STEP_SUM = re.compile(r"^Calculate (sum|average) of (\w+)$")
_STEP_COUNT = re.compile(r"^Count matching rows$")


class MockCodeGenerator:
    """Renders pandas-style code from plan steps, line by line."""

    def __init__(self) -> None:
        self.calls = 0

    def generate(self, query: str, plan: Sequence[str], context: str,
                 retry_feedback: str | None) -> str:
        self.calls += 1
        lines = ["import pandas as pd", ""]
        result_col = "RESULT"
        for step in plan:
            if m := _STEP_LOAD.match(step):
                lines.append(f'df = pd.read_csv("{m.group(1).lower()}.csv")')
            elif m := _STEP_JOIN.match(step):
                lines.append(f'df = df.merge(pd.read_csv("{m.group(1).lower()}.csv"), '
                             f'on="{m.group(2)}")')
            elif m := _STEP_FILTER.match(step):
                lines.append(f'df = df[df["{m.group(1)}"] == "{m.group(2)}"]')
            elif m := _STEP_SUM.match(step):
                fn = "sum" if m.group(1) == "sum" else "mean"
                result_col = m.group(2)
                lines.append(f'result = df["{m.group(2)}"].{fn}()')
            elif _STEP_COUNT.match(step):
                result_col = "RECORD_COUNT"
                lines.append("result = len(df)")
            else:
                lines.append(f"# {step}")
        lines.append(f'print(f"{result_col}: {{result}}")')
        if retry_feedback:
            first = retry_feedback.split("\n", 1)[0]
            lines.append(f"# regenerated after: {first}")
        return "\n".join(lines)


class UnknownFixtureError(KeyError):
    """The executor was bound to a fixture id it does not know."""


_RESULT_COLUMN = re.compile(r'result = df\["(\w+)"\]')


class MockExecutor:
    """Scripted executor: fixtures drive per-attempt outcomes.

    Without a fixture id, execution deterministically succeeds with a
    single metric value derived from the code text. A fixture id selects a
    scripted sequence of results indexed by attempt number (the last
    result repeats once the script is exhausted).
    """

    def __init__(self, fixtures: dict[str, Sequence[ExecutionResult]] | None = None) -> None:
        self.fixtures = dict(fixtures or {})
        self.calls = 0

    def run(self, code: str, fixture_id: str | None = None,
            attempt: int = 0) -> ExecutionResult:
        self.calls += 1
        if fixture_id is not None:
            if fixture_id not in self.fixtures:
                raise UnknownFixtureError(fixture_id)
            script = self.fixtures[fixture_id]
            return script[min(attempt, len(script) - 1)]
        match = _RESULT_COLUMN.search(code)
        column = match.group(1) if match else "RESULT"
        digest = hashlib.sha256(code.encode("utf-8")).hexdigest()
        value = (int(digest[:8], 16) % 10_000_000) / 100.0
        cell = f"{value:.2f}"
        table = TabularResult(name="result", columns=(column,), rows=((cell,),))
        return ExecutionResult(status="ok", tables_out=(table,),
                               text_out=f"{column} = {cell}")


class MockSummarizer:
    """One-line summary of the captured execution output."""

    def __init__(self) -> None:
        self.calls = 0

    def summarize(self, query: str, execution: ExecutionResult) -> str:
        self.calls += 1
        if execution.tables_out:
            table = execution.tables_out[0]
            column = table.columns[0]
            cell = table.rows[0][0] if table.rows else "n/a"
            return (f"{column} comes to {cell} "
                    f"across {len(table.rows)} result row(s).")
        return f"Execution output: {execution.text_out}"


class MockInsightsGenerator:
    """Insights grounded in execution output cells, nothing else."""

    def __init__(self) -> None:
        self.calls = 0

    def analyze(self, execution: ExecutionResult) -> InsightsRecord:
        self.calls += 1
        metrics: list[tuple[str, float]] = []
        for table in execution.tables_out:
            for column, cell in zip(table.columns, table.rows[0] if table.rows else ()):
                try:
                    metrics.append((column, float(cell)))
                except ValueError:
                    continue
        names = [n for n, _ in metrics]
        return InsightsRecord(
            metrics=tuple(metrics),
            insights=tuple(f"{n} was computed directly from execution output"
                           for n in names),
            recommendations=tuple(f"Track {n} against planning targets"
                                  for n in names),
            followups=tuple(f"Break down {n} by organization" for n in names),
        )


def build_mock_suite(lexicon: DomainLexicon,
                     fixtures: dict[str, Sequence[ExecutionResult]] | None = None,
                     with_summary: bool = True,
                     with_insights: bool = True) -> AgentSuite:
    """A full deterministic suite over one lexicon."""
    return AgentSuite(
        guard=MockGuard(lexicon),
        intent_classifier=MockIntentClassifier(lexicon),
        planner=MockPlanner(lexicon),
        code_generator=MockCodeGenerator(),
        executor=MockExecutor(fixtures),
        summarizer=MockSummarizer() if with_summary else None,
        insights_generator=MockInsightsGenerator() if with_insights else None,
    )
