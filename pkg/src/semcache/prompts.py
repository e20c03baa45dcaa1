"""Prompt repository, intent-driven filtering, and token accounting.

Fragments are tagged with the tables they apply to (or GLOBAL); assembly
selects only the fragments whose tags intersect the tables identified for
a query, then appends the per-table description and sample-row blocks.
Token counts use a pluggable estimator so reduction ratios stay meaningful
without tying the artifact to one model's tokenizer. The module also
extracts compact operation patterns from cached code so guide mode can
inject structure instead of full scripts.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .signature import normalize_table

REPOSITORY_FORMAT = "semcache-prompts"
REPOSITORY_VERSION = 1

AUDIENCES = ("planner", "codegen")


class RepositoryFormatError(ValueError):
    """A prompt repository file could not be parsed or validated."""

    def __init__(self, path: str | Path, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class UnknownTableError(ValueError):
    """A table identifier outside the known schema was requested."""

    def __init__(self, offenders: Iterable[str]) -> None:
        self.offenders = sorted(offenders)
        super().__init__(f"unknown tables: {', '.join(self.offenders)}")


def estimate_tokens(text: str) -> int:
    """Default token estimator: one token per four characters, rounded up.

    Deterministic and monotone under concatenation. Swap in a real
    tokenizer via the estimator arguments where absolute counts matter;
    the reduction ratios this package asserts on are robust to the choice.
    """
    return math.ceil(len(text) / 4)


TokenEstimator = Callable[[str], int]


@dataclass(frozen=True)
class PromptFragment:
    """One prompt building block, tagged with the tables it applies to.

    An empty table set means GLOBAL: the fragment applies to every query.
    Lower priority sorts earlier in the assembled prompt.
    """

    id: str
    text: str
    audience: str
    priority: int = 100
    table_filter: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("fragment id must be non-empty")
        if not self.text:
            raise ValueError(f"fragment {self.id!r} has empty text")
        if self.audience not in AUDIENCES:
            raise ValueError(f"fragment {self.id!r} has unknown audience "
                             f"{self.audience!r}")
        object.__setattr__(self, "table_filter",
                           frozenset(normalize_table(t) for t in self.table_filter))

    @property
    def is_global(self) -> bool:
        return not self.table_filter


class PromptRepository:
    """Immutable collection of fragments indexed by audience and table."""

    def __init__(self, fragments: Iterable[PromptFragment],
                 known_tables: Iterable[str]) -> None:
        self.known_tables = frozenset(normalize_table(t) for t in known_tables)
        self.fragments: tuple[PromptFragment, ...] = tuple(fragments)
        seen: set[str] = set()
        for fragment in self.fragments:
            if fragment.id in seen:
                raise ValueError(f"duplicate fragment id: {fragment.id!r}")
            seen.add(fragment.id)
            stray = fragment.table_filter - self.known_tables
            if stray:
                raise ValueError(
                    f"fragment {fragment.id!r} tagged with unknown tables: "
                    f"{', '.join(sorted(stray))}")

    def __len__(self) -> int:
        return len(self.fragments)

    def for_audience(self, audience: str) -> list[PromptFragment]:
        return [f for f in self.fragments if f.audience == audience]


def load_repository(path: str | Path) -> PromptRepository:
    """Read a line-delimited repository file (header line, then fragments)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise RepositoryFormatError(path, 1, "empty repository file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise RepositoryFormatError(path, 1, f"bad header: {exc}") from exc
    if header.get("format") != REPOSITORY_FORMAT:
        raise RepositoryFormatError(path, 1,
                                    f"not a {REPOSITORY_FORMAT} file")
    if header.get("version") != REPOSITORY_VERSION:
        raise RepositoryFormatError(path, 1,
                                    f"unsupported repository version "
                                    f"{header.get('version')!r}")
    known_tables = header.get("tables", ())
    fragments: list[PromptFragment] = []
    ids: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RepositoryFormatError(path, lineno,
                                        f"malformed record: {exc}") from exc
        tables = record.get("tables", "GLOBAL")
        table_filter = frozenset() if tables == "GLOBAL" else frozenset(tables)
        try:
            fragment = PromptFragment(
                id=record["id"],
                text=record["text"],
                audience=record["audience"],
                priority=record.get("priority", 100),
                table_filter=table_filter,
            )
        except (KeyError, ValueError) as exc:
            raise RepositoryFormatError(path, lineno, str(exc)) from exc
        if fragment.id in ids:
            raise RepositoryFormatError(path, lineno,
                                        f"duplicate fragment id: {fragment.id!r}")
        ids.add(fragment.id)
        fragments.append(fragment)
    try:
        return PromptRepository(fragments, known_tables)
    except ValueError as exc:
        raise RepositoryFormatError(path, 1, str(exc)) from exc


def save_repository(repo: PromptRepository, path: str | Path) -> None:
    """Inverse of load_repository."""
    lines = [json.dumps({"format": REPOSITORY_FORMAT,
                         "version": REPOSITORY_VERSION,
                         "tables": sorted(repo.known_tables)},
                        sort_keys=True, separators=(",", ":"))]
    for f in repo.fragments:
        lines.append(json.dumps({
            "id": f.id,
            "audience": f.audience,
            "priority": f.priority,
            "tables": sorted(f.table_filter) if f.table_filter else "GLOBAL",
            "text": f.text,
        }, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def filter_by_tables(repo: PromptRepository, audience: str,
                     tables: Iterable[str]) -> list[PromptFragment]:
    """Fragments applicable to the given tables, in (priority, id) order.

    A fragment is included iff it is GLOBAL or its tag set intersects
    `tables`. Unknown table identifiers are rejected, listing offenders.
    """
    wanted = {normalize_table(t) for t in tables}
    unknown = wanted - repo.known_tables
    if unknown:
        raise UnknownTableError(unknown)
    selected = [f for f in repo.for_audience(audience)
                if f.is_global or f.table_filter & wanted]
    selected.sort(key=lambda f: (f.priority, f.id))
    return selected


@dataclass(frozen=True)
class AssembledPrompt:
    """A rendered prompt plus its provenance and token count."""

    text: str
    fragment_ids: tuple[str, ...]
    token_count: int
    tables: frozenset[str]

    def __post_init__(self) -> None:
        if len(set(self.fragment_ids)) != len(self.fragment_ids):
            raise ValueError("fragment_ids contain duplicates")


def assemble(fragments: Sequence[PromptFragment],
             table_descriptions: Mapping[str, str],
             sample_rows: Mapping[str, str],
             estimator: TokenEstimator = estimate_tokens) -> AssembledPrompt:
    """Concatenate fragments, then table descriptions, then sample rows.

    Fragments keep their given order; table blocks append in sorted table
    order. Sections are separated by blank lines. Deterministic: identical
    inputs yield byte-identical text.
    """
    parts = [f.text for f in fragments]
    parts.extend(table_descriptions[t] for t in sorted(table_descriptions))
    parts.extend(sample_rows[t] for t in sorted(sample_rows))
    text = "\n\n".join(p for p in parts if p)
    return AssembledPrompt(
        text=text,
        fragment_ids=tuple(f.id for f in fragments),
        token_count=estimator(text),
        tables=frozenset(normalize_table(t)
                         for t in (*table_descriptions, *sample_rows)),
    )


@dataclass(frozen=True)
class ReductionReport:
    """Token accounting for full-context vs intent-filtered assembly."""

    full_tokens: int
    filtered_tokens: int
    reduction_pct: float

    def __post_init__(self) -> None:
        expected = self.compute_pct(self.full_tokens, self.filtered_tokens)
        if abs(self.reduction_pct - expected) > 1e-9:
            raise ValueError(
                f"reduction_pct {self.reduction_pct!r} inconsistent with "
                f"counts (expected {expected!r})")

    @staticmethod
    def compute_pct(full_tokens: int, filtered_tokens: int) -> float:
        if full_tokens <= 0:
            return 0.0
        return 1.0 - filtered_tokens / full_tokens

    @classmethod
    def from_counts(cls, full_tokens: int, filtered_tokens: int) -> "ReductionReport":
        return cls(full_tokens=full_tokens, filtered_tokens=filtered_tokens,
                   reduction_pct=cls.compute_pct(full_tokens, filtered_tokens))


# -- reference pattern extraction ---------------------------------------------

PATTERN_VOCABULARY = ("load_data", "join_tables", "filter", "aggregate",
                      "visualize")

_OPERATION_MARKERS: dict[str, re.Pattern] = {
    "load_data": re.compile(
        r"\b(?:read_csv|read_parquet|read_excel|read_sql|read_table"
        r"|load_table|load_data)\s*\("),
    "join_tables": re.compile(r"\.(?:merge|join)\s*\(|\bpd\.merge\s*\("),
    "filter": re.compile(
        r"\.query\s*\(|\[.*?(?:==|!=|>=|<=|>|<).*?\]"),
    "aggregate": re.compile(
        r"\.(?:groupby|agg|aggregate|sum|mean|count|min|max)\s*\("),
    "visualize": re.compile(
        r"\.plot\s*\(|\bplt\.|\bsns\.|\bpx\.|savefig\s*\("),
}

_LOAD_ARG = re.compile(
    r"\b(?:read_csv|read_parquet|read_excel|read_sql|read_table|load_table"
    r"|load_data)\s*\(\s*['\"]([^'\"]+)['\"]")
_JOIN_KEYS = re.compile(r"\b(?:on|left_on|right_on)\s*=\s*(\[[^\]]*\]|['\"][^'\"]+['\"])")
_QUOTED = re.compile(r"['\"]([^'\"]+)['\"]")


@dataclass(frozen=True)
class ReferencePattern:
    """Compact structural summary of a cached script.

    Operations come from the fixed five-token vocabulary in order of first
    occurrence in the code; join keys and the table pattern are harvested
    from join-call arguments and data-load order.
    """

    operations: tuple[str, ...]
    join_keys: tuple[str, ...] = ()
    table_pattern: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        stray = set(self.operations) - set(PATTERN_VOCABULARY)
        if stray:
            raise ValueError(f"operations outside vocabulary: {sorted(stray)}")

    def to_text(self) -> str:
        """Render as the compact block injected instead of full code."""
        if not self.operations:
            return ""
        lines = ["operations: " + " -> ".join(self.operations)]
        if self.join_keys:
            lines.append("join_keys: " + ", ".join(self.join_keys))
        if self.table_pattern:
            lines.append("tables: " + " + ".join(self.table_pattern))
        return "\n".join(lines)


def _strip_comments(code: str) -> str:
    return "\n".join(re.sub(r"#.*$", "", line) for line in code.split("\n"))


def extract_reference_pattern(code: str) -> ReferencePattern:
    """Lexical scan of analysis code for its operation structure.

    Regex-grade by design: it recognizes common dataframe idioms rather
    than parsing the language. Unrecognizable code yields an empty
    operation list, which callers treat as "no pattern".
    """
    body = _strip_comments(code)
    first_hit: list[tuple[int, str]] = []
    for op, marker in _OPERATION_MARKERS.items():
        match = marker.search(body)
        if match is not None:
            first_hit.append((match.start(), op))
    first_hit.sort()
    operations = tuple(op for _, op in first_hit)

    join_keys: list[str] = []
    for match in _JOIN_KEYS.finditer(body):
        for key in _QUOTED.findall(match.group(1)):
            if key not in join_keys:
                join_keys.append(key)

    tables: list[str] = []
    for match in _LOAD_ARG.finditer(body):
        raw = match.group(1)
        if " " in raw:
            continue  # inline SQL text, not a table or file identifier
        name = normalize_table(Path(raw).stem)
        if name not in tables:
            tables.append(name)

    return ReferencePattern(operations=operations,
                            join_keys=tuple(join_keys),
                            table_pattern=tuple(tables))
