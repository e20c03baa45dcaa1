"""A six-query replay scenario small enough for golden-file assertions."""

from __future__ import annotations

import json
from pathlib import Path

from semcache.prompts import PromptFragment, PromptRepository, save_repository
from semcache.schema import SchemaCatalog, TableInfo

CORPUS = [
    {
        "question": "What is the total stock value for item code ITEM-001-BB0 at Plant-A?",
        "plan": ["Load INVENTORY_MASTER table",
                 "Filter by ITEM_CODE = 'ITEM-001-BB0'",
                 "Filter by ORGANIZATION = 'Plant-A'",
                 "Calculate sum of STOCK_VALUE",
                 "Format as currency output"],
        "code": ('import pandas as pd\n\n'
                 'df = pd.read_csv("inventory_master.csv")\n'
                 'df = df[df["ITEM_CODE"] == "ITEM-001-BB0"]\n'
                 'df = df[df["ORGANIZATION"] == "Plant-A"]\n'
                 'result = df["STOCK_VALUE"].sum()\n'
                 'print(f"STOCK_VALUE: {result}")'),
        "response": "Total stock value for ITEM-001-BB0 at Plant-A: $48,200.00",
    },
    {
        "question": "What is the current stock quantity for item code ITEM-002-CC1 at Plant-B?",
        "plan": ["Load INVENTORY_MASTER table",
                 "Join WAREHOUSE_STOCK on ITEM_CODE",
                 "Filter by ITEM_CODE = 'ITEM-002-CC1'",
                 "Filter by ORGANIZATION = 'Plant-B'",
                 "Calculate sum of QUANTITY",
                 "Format output table"],
        "code": ('import pandas as pd\n\n'
                 'df = pd.read_csv("inventory_master.csv")\n'
                 'df = df.merge(pd.read_csv("warehouse_stock.csv"), on="ITEM_CODE")\n'
                 'df = df[df["ITEM_CODE"] == "ITEM-002-CC1"]\n'
                 'result = df["QUANTITY"].sum()\n'
                 'print(f"QUANTITY: {result}")'),
        "response": "Current stock quantity for ITEM-002-CC1 at Plant-B: 118 units",
    },
    {
        "question": "How many units of item ITEM-003-DD2 were consumed in March 2025?",
        "plan": ["Load CONSUMPTION_HISTORY table",
                 "Filter by ITEM_CODE = 'ITEM-003-DD2'",
                 "Filter by PERIOD = 'March 2025'",
                 "Calculate sum of QUANTITY",
                 "Format output table"],
        "code": ('import pandas as pd\n\n'
                 'df = pd.read_csv("consumption_history.csv")\n'
                 'df = df[df["ITEM_CODE"] == "ITEM-003-DD2"]\n'
                 'result = df["QUANTITY"].sum()\n'
                 'print(f"QUANTITY: {result}")'),
        "response": "Consumption of ITEM-003-DD2 in March 2025: 75 units",
    },
]

QUERY_LOG = [
    {"query": "What is the total stock value for item code ITEM-001-BB0 at Plant-A?",
     "expected_mode": "return", "expected_intent": "valuation"},
    {"query": "Show me total stock value for item ITEM-001-NN0 at Plant-B",
     "expected_mode": "guide", "expected_intent": "valuation"},
    {"query": "What is the current stock quantity for item code ITEM-777-KK8 at Plant-B?",
     "expected_mode": "guide", "expected_intent": "stock_current"},
    {"query": "Rank reorder policy breaches by severity for zone Z4",
     "expected_mode": "generate"},
    {"query": "Forecast demand volatility for sku family F9 over the next 6 cycles",
     "expected_mode": "generate"},
    {"query": "What's the best pizza topping?"},
]


def mini_schema_catalog() -> SchemaCatalog:
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


def mini_repository() -> PromptRepository:
    tables = ("INVENTORY_MASTER", "WAREHOUSE_STOCK", "CONSUMPTION_HISTORY")
    fragments = [
        PromptFragment(id="plan-global-001", audience="planner", priority=10,
                       text="Answer with a numbered analytical plan."),
        PromptFragment(id="plan-im-001", audience="planner", priority=50,
                       table_filter=frozenset({"INVENTORY_MASTER"}),
                       text="Stock values live in INVENTORY_MASTER.STOCK_VALUE."),
        PromptFragment(id="plan-ch-001", audience="planner", priority=50,
                       table_filter=frozenset({"CONSUMPTION_HISTORY"}),
                       text="Consumption is recorded per period in CONSUMPTION_HISTORY."),
        PromptFragment(id="code-global-001", audience="codegen", priority=10,
                       text="Emit pandas code; print the final result."),
        PromptFragment(id="code-ws-001", audience="codegen", priority=50,
                       table_filter=frozenset({"WAREHOUSE_STOCK"}),
                       text="Join WAREHOUSE_STOCK on ITEM_CODE when quantities matter."),
    ]
    return PromptRepository(fragments, tables)


def write_scenario(root: Path) -> dict[str, Path]:
    """Materialize corpus, schema, repository, and query log under root."""
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": root / "corpus.jsonl",
        "schema": root / "schema.json",
        "repo": root / "prompts.jsonl",
        "log": root / "queries.jsonl",
        "cache": root / "cache.jsonl",
    }
    with paths["corpus"].open("w", encoding="utf-8") as handle:
        for record in CORPUS:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    mini_schema_catalog().save(paths["schema"])
    save_repository(mini_repository(), paths["repo"])
    with paths["log"].open("w", encoding="utf-8") as handle:
        for record in QUERY_LOG:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    return paths
