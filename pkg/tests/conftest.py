"""Shared fixtures: domain lexicon, embedders, and the worked example."""

from __future__ import annotations

import pytest

from semcache.domain import default_lexicon, extract_signature
from semcache.embedding import HashEmbedder
from semcache.schema import SchemaCatalog, TableInfo
from semcache.store import CacheEntry, CacheStore, entry_id_for

# The reference/current query pair the matcher documentation is built
# around: same structure, different item code and plant.
WORKED_REF = "What is the total stock value for item code ITEM-001-BB0 at Plant-A?"
WORKED_CUR = "Show me total stock value for item ITEM-001-NN0 at Plant-B"
WORKED_PLAN = (
    "Load INVENTORY_MASTER table",
    "Filter by ITEM_CODE = 'ITEM-001-BB0'",
    "Filter by ORGANIZATION = 'Plant-A'",
    "Calculate sum of STOCK_VALUE",
    "Format as currency output",
)
WORKED_RESPONSE = "Total stock value for ITEM-001-BB0 at Plant-A: $48,200.00"
WORKED_CODE = (
    "import pandas as pd\n\n"
    'df = pd.read_csv("inventory_master.csv")\n'
    'df = df[df["ITEM_CODE"] == "ITEM-001-BB0"]\n'
    'df = df[df["ORGANIZATION"] == "Plant-A"]\n'
    'result = df["STOCK_VALUE"].sum()\n'
    'print(f"STOCK_VALUE: {result}")'
)


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture()
def embedder(lexicon):
    return HashEmbedder(dim=64, seed=0, lexicon=lexicon)


def make_entry(question: str, embedder, lexicon, *, plan=WORKED_PLAN,
               code=WORKED_CODE, response=WORKED_RESPONSE,
               schema_hash: str = "schema-v1",
               created_at: float | None = None) -> CacheEntry:
    return CacheEntry(
        id=entry_id_for(question, schema_hash),
        question=question,
        signature=extract_signature(question, lexicon),
        embedding=embedder.embed(question),
        plan=plan,
        code=code,
        response=response,
        schema_hash=schema_hash,
        created_at=created_at,
    )


@pytest.fixture()
def worked_entry(embedder, lexicon) -> CacheEntry:
    return make_entry(WORKED_REF, embedder, lexicon)


@pytest.fixture()
def worked_store(worked_entry) -> CacheStore:
    store = CacheStore(dim=64)
    store.insert(worked_entry)
    return store


@pytest.fixture(scope="session")
def mini_schema() -> SchemaCatalog:
    """Three-table schema small enough for golden-file replay tests."""
    return SchemaCatalog([
        TableInfo(name="INVENTORY_MASTER",
                  columns=("ITEM_CODE", "ORGANIZATION", "STOCK_VALUE"),
                  description="Item-level stock positions per organization.",
                  sample_rows=(("ITEM-001-BB0", "Plant-A", "48200.00"),
                               ("ITEM-002-CC1", "Plant-B", "1150.75"))),
        TableInfo(name="WAREHOUSE_STOCK",
                  columns=("ITEM_CODE", "BIN", "QUANTITY"),
                  description="Bin-level quantities.",
                  sample_rows=(("ITEM-001-BB0", "B-04", "120"),)),
        TableInfo(name="CONSUMPTION_HISTORY",
                  columns=("ITEM_CODE", "PERIOD", "QUANTITY"),
                  description="Monthly consumption per item.",
                  sample_rows=(("ITEM-001-BB0", "March 2025", "75"),)),
    ])
