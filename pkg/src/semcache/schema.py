"""Relational schema catalog: table metadata, digests, prompt blocks.

The schema digest is a stable hash of the canonicalized table-to-columns
mapping; only equality of digests is ever tested, so any change to table
names or column lists invalidates cache entries built under the old shape.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from .signature import normalize_table


def schema_hash(columns_by_table: Mapping[str, Iterable[str]]) -> str:
    """Digest of a canonicalized table-name -> column-list mapping."""
    canonical = {
        normalize_table(name): [str(c).strip().upper() for c in cols]
        for name, cols in columns_by_table.items()
    }
    payload = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TableInfo:
    """One table: columns plus the prose used in prompt context blocks."""

    name: str
    columns: tuple[str, ...]
    description: str = ""
    sample_rows: tuple[tuple[str, ...], ...] = ()

    def description_block(self) -> str:
        cols = ", ".join(self.columns)
        text = f"Table {self.name} ({cols})"
        if self.description:
            text += f"\n{self.description}"
        return text

    def sample_block(self) -> str:
        if not self.sample_rows:
            return ""
        lines = [f"Sample rows from {self.name}:",
                 " | ".join(self.columns)]
        lines.extend(" | ".join(row) for row in self.sample_rows)
        return "\n".join(lines)


class SchemaCatalog:
    """All known tables, keyed by normalized name."""

    def __init__(self, tables: Iterable[TableInfo]) -> None:
        self.tables: dict[str, TableInfo] = {}
        for info in tables:
            name = normalize_table(info.name)
            if name in self.tables:
                raise ValueError(f"duplicate table {name}")
            self.tables[name] = info

    def names(self) -> frozenset[str]:
        return frozenset(self.tables)

    def column_mapping(self) -> dict[str, list[str]]:
        return {name: list(info.columns) for name, info in self.tables.items()}

    def hash(self) -> str:
        return schema_hash(self.column_mapping())

    def description_blocks(self, tables: Iterable[str] | None = None) -> dict[str, str]:
        names = self._select(tables)
        return {n: self.tables[n].description_block() for n in names}

    def sample_blocks(self, tables: Iterable[str] | None = None) -> dict[str, str]:
        names = self._select(tables)
        return {n: self.tables[n].sample_block() for n in names}

    def _select(self, tables: Iterable[str] | None) -> list[str]:
        if tables is None:
            return sorted(self.tables)
        names = [normalize_table(t) for t in tables]
        unknown = sorted(set(names) - set(self.tables))
        if unknown:
            raise KeyError(f"unknown tables: {', '.join(unknown)}")
        return sorted(set(names))

    def to_record(self) -> dict[str, Any]:
        return {
            "tables": {
                name: {
                    "columns": list(info.columns),
                    "description": info.description,
                    "sample_rows": [list(r) for r in info.sample_rows],
                }
                for name, info in sorted(self.tables.items())
            }
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "SchemaCatalog":
        return cls(
            TableInfo(
                name=name,
                columns=tuple(spec.get("columns", ())),
                description=spec.get("description", ""),
                sample_rows=tuple(tuple(r) for r in spec.get("sample_rows", ())),
            )
            for name, spec in record["tables"].items()
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_record(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SchemaCatalog":
        return cls.from_record(json.loads(Path(path).read_text(encoding="utf-8")))
