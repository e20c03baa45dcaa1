"""Deterministic synthetic fixtures: schema, prompt repository, seed
corpus, and engineered query logs.

Everything here is seeded, so repeated generation yields byte-identical
artifacts. The query-log generator builds a workload with a controlled
mode mix: a slice of exact duplicates of seeded questions (routed to
direct returns), a slice of value-substituted paraphrases (routed to
guided generation), and a slice of novel questions from a disjoint
vocabulary (routed to fresh generation).

Run `python -m semcache.synth --out DIR` to materialize a demo data set
for the CLI.
"""

from __future__ import annotations

import random
from typing import Any

from .domain import SCHEMA_TABLES, infer_intent
from .prompts import PromptFragment, PromptRepository
from .schema import SchemaCatalog, TableInfo

# Query classes used for token-reduction accounting, with the tables the
# intent classifier identifies for each.
QUERY_CLASSES: dict[str, tuple[str, ...]] = {
    "stock_inquiry": ("INVENTORY_MASTER", "WAREHOUSE_STOCK"),
    "valuation": ("INVENTORY_MASTER", "STOCK_VALUATION", "ITEM_CATALOG"),
    "aging_analysis": ("INVENTORY_AGING", "INVENTORY_MASTER"),
    "procurement": ("PURCHASE_ORDERS", "PURCHASE_ORDER_LINES", "SUPPLIERS",
                    "ITEM_CATALOG"),
}

_SYLLABLES = ("ra", "ve", "to", "li", "san", "dor", "mi", "ket", "bu", "na",
              "pol", "ze", "gar", "ti", "mo", "lus", "fen", "da", "rik", "su")


def _filler(rng: random.Random, n_chars: int) -> str:
    """Deterministic pseudo-prose of roughly n_chars characters."""
    words: list[str] = []
    length = 0
    while length < n_chars:
        word = "".join(rng.choice(_SYLLABLES)
                       for _ in range(rng.randint(2, 4)))
        words.append(word)
        length += len(word) + 1
    return " ".join(words)


def make_schema(seed: int = 101) -> SchemaCatalog:
    """The 17-table demo schema with prompt-block prose sized to produce
    full-context assemblies in the tens of thousands of tokens."""
    rng = random.Random(seed)
    tables = []
    for name in SCHEMA_TABLES:
        columns = tuple(f"{name[:4]}_COL{i}" for i in range(1, 7))
        description = (f"{name} holds operational records. "
                       + _filler(rng, 2300))
        rows = tuple(
            tuple(f"{c[-4:]}{rng.randint(100, 99999)}" for c in columns)
            for _ in range(90))
        tables.append(TableInfo(name=name, columns=columns,
                                description=description, sample_rows=rows))
    return SchemaCatalog(tables)


def make_prompt_repository(seed: int = 202) -> PromptRepository:
    """140 planner + 44 codegen fragments tagged across the demo schema."""
    rng = random.Random(seed)
    fragments: list[PromptFragment] = []

    def add(audience: str, index: int, tables: tuple[str, ...], chars: int) -> None:
        tag = "global" if not tables else tables[0].lower()
        fragments.append(PromptFragment(
            id=f"{audience[:4]}-{tag}-{index:03d}",
            audience=audience,
            priority=10 if not tables else 50,
            table_filter=frozenset(tables),
            text=(f"[{audience} rule {index}] " + _filler(rng, chars)),
        ))

    counter = 0
    for _ in range(8):
        counter += 1
        add("planner", counter, (), 980)
    for t_index, table in enumerate(SCHEMA_TABLES):
        per_table = 8 if t_index < 13 else 7
        for _ in range(per_table):
            counter += 1
            add("planner", counter, (table,), 700)

    counter = 0
    for _ in range(4):
        counter += 1
        add("codegen", counter, (), 980)
    for t_index, table in enumerate(SCHEMA_TABLES):
        per_table = 3 if t_index < 6 else 2
        for _ in range(per_table):
            counter += 1
            add("codegen", counter, (table,), 1180)

    return PromptRepository(fragments, SCHEMA_TABLES)


# -- seed corpus ---------------------------------------------------------------

_ITEM_SUFFIXES = ("AA0", "BB0", "CC1", "DD2", "EE3", "FF4", "GG5", "HH6",
                  "JJ7", "KK8")
_PLANTS = tuple(f"Plant-{c}" for c in "ABCDEF")
_MONTHS = ("January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December")
_YEARS = ("2024", "2025")
_CATEGORIES = ("chemicals", "fasteners", "lubricants", "packaging",
               "abrasives", "electricals")
_VENDORS = tuple(f"Vendor {n}" for n in range(11, 35))


def _item_code(rng: random.Random) -> str:
    return f"ITEM-{rng.randint(1, 400):03d}-{rng.choice(_ITEM_SUFFIXES)}"


def _money(rng: random.Random) -> str:
    return f"{rng.randint(10_000, 9_999_999) / 100:,.2f}"


def _families() -> tuple[dict[str, Any], ...]:
    """Question families: primary phrasing, paraphrases, plan/code builders."""
    return (
        {
            "name": "valuation",
            "question": "What is the total stock value for item code {code} at {plant}?",
            "paraphrases": (
                "Show me total stock value for item {code} at {plant}",
                "Give the total stock value for item code {code} at {plant}",
            ),
            "values": lambda rng: {"code": _item_code(rng),
                                   "plant": rng.choice(_PLANTS)},
            "plan": ("Load INVENTORY_MASTER table",
                     "Filter by ITEM_CODE = '{code}'",
                     "Filter by ORGANIZATION = '{plant}'",
                     "Calculate sum of STOCK_VALUE",
                     "Format as currency output"),
            "code": ('import pandas as pd\n\n'
                     'df = pd.read_csv("inventory_master.csv")\n'
                     'df = df[df["ITEM_CODE"] == "{code}"]\n'
                     'df = df[df["ORGANIZATION"] == "{plant}"]\n'
                     'result = df["STOCK_VALUE"].sum()\n'
                     'print(f"STOCK_VALUE: {{result}}")'),
            "response": "Total stock value for {code} at {plant}: ${amount}",
        },
        {
            "name": "stock",
            "question": "What is the current stock quantity for item code {code} at {plant}?",
            "paraphrases": (
                "Show me current stock quantity for item {code} at {plant}",
                "How much stock is on hand for item code {code} at {plant}?",
            ),
            "values": lambda rng: {"code": _item_code(rng),
                                   "plant": rng.choice(_PLANTS)},
            "plan": ("Load INVENTORY_MASTER table",
                     "Join WAREHOUSE_STOCK on ITEM_CODE",
                     "Filter by ITEM_CODE = '{code}'",
                     "Filter by ORGANIZATION = '{plant}'",
                     "Calculate sum of QUANTITY",
                     "Format output table"),
            "code": ('import pandas as pd\n\n'
                     'df = pd.read_csv("inventory_master.csv")\n'
                     'df = df.merge(pd.read_csv("warehouse_stock.csv"), on="ITEM_CODE")\n'
                     'df = df[df["ITEM_CODE"] == "{code}"]\n'
                     'df = df[df["ORGANIZATION"] == "{plant}"]\n'
                     'result = df["QUANTITY"].sum()\n'
                     'print(f"QUANTITY: {{result}}")'),
            "response": "Current stock quantity for {code} at {plant}: {amount} units",
        },
        {
            "name": "consumption",
            "question": "How many units of item {code} were consumed in {month} {year}?",
            "paraphrases": (
                "Show me units of item {code} consumed in {month} {year}",
                "Total consumption of item {code} during {month} {year}",
            ),
            "values": lambda rng: {"code": _item_code(rng),
                                   "month": rng.choice(_MONTHS),
                                   "year": rng.choice(_YEARS)},
            "plan": ("Load CONSUMPTION_HISTORY table",
                     "Join INVENTORY_MASTER on ITEM_CODE",
                     "Filter by ITEM_CODE = '{code}'",
                     "Filter by PERIOD = '{month} {year}'",
                     "Calculate sum of QUANTITY",
                     "Format output table"),
            "code": ('import pandas as pd\n\n'
                     'df = pd.read_csv("consumption_history.csv")\n'
                     'df = df.merge(pd.read_csv("inventory_master.csv"), on="ITEM_CODE")\n'
                     'df = df[df["ITEM_CODE"] == "{code}"]\n'
                     'df = df[df["PERIOD"] == "{month} {year}"]\n'
                     'result = df["QUANTITY"].sum()\n'
                     'print(f"QUANTITY: {{result}}")'),
            "response": "Consumption of {code} in {month} {year}: {amount} units",
        },
        {
            "name": "aging",
            "question": "What is the total aging value for item code {code} in category {cat} at {plant}?",
            "paraphrases": (
                "Show me total aging value for item {code} in category {cat} at {plant}",
                "Give the total aging value of {cat} item {code} at {plant}",
            ),
            "values": lambda rng: {"code": _item_code(rng),
                                   "cat": rng.choice(_CATEGORIES),
                                   "plant": rng.choice(_PLANTS)},
            "plan": ("Load INVENTORY_AGING table",
                     "Join INVENTORY_MASTER on ITEM_CODE",
                     "Filter by ITEM_CODE = '{code}'",
                     "Filter by CATEGORY = '{cat}'",
                     "Filter by ORGANIZATION = '{plant}'",
                     "Calculate sum of STOCK_VALUE",
                     "Format as currency output"),
            "code": ('import pandas as pd\n\n'
                     'df = pd.read_csv("inventory_aging.csv")\n'
                     'df = df.merge(pd.read_csv("inventory_master.csv"), on="ITEM_CODE")\n'
                     'df = df[df["ITEM_CODE"] == "{code}"]\n'
                     'df = df[df["CATEGORY"] == "{cat}"]\n'
                     'df = df[df["ORGANIZATION"] == "{plant}"]\n'
                     'result = df["STOCK_VALUE"].sum()\n'
                     'print(f"STOCK_VALUE: {{result}}")'),
            "response": "Aging value for {code} ({cat}) at {plant}: ${amount}",
        },
        {
            "name": "procurement",
            "question": "What is the total purchase order value for supplier {vendor} in {month} {year}?",
            "paraphrases": (
                "Show me total purchase order value for supplier {vendor} in {month} {year}",
                "Give the total purchase value from supplier {vendor} during {month} {year}",
            ),
            "values": lambda rng: {"vendor": rng.choice(_VENDORS),
                                   "month": rng.choice(_MONTHS),
                                   "year": rng.choice(_YEARS)},
            "plan": ("Load PURCHASE_ORDERS table",
                     "Join PURCHASE_ORDER_LINES on ITEM_CODE",
                     "Filter by SUPPLIER = '{vendor}'",
                     "Filter by PERIOD = '{month} {year}'",
                     "Calculate sum of STOCK_VALUE",
                     "Format as currency output"),
            "code": ('import pandas as pd\n\n'
                     'df = pd.read_csv("purchase_orders.csv")\n'
                     'df = df.merge(pd.read_csv("purchase_order_lines.csv"), on="ITEM_CODE")\n'
                     'df = df[df["SUPPLIER"] == "{vendor}"]\n'
                     'df = df[df["PERIOD"] == "{month} {year}"]\n'
                     'result = df["STOCK_VALUE"].sum()\n'
                     'print(f"STOCK_VALUE: {{result}}")'),
            "response": "Purchase order value for {vendor} in {month} {year}: ${amount}",
        },
    )


def make_seed_corpus(n: int = 1021, seed: int = 7) -> list[dict[str, Any]]:
    """Reference question/plan/code/response records, unique by question."""
    rng = random.Random(seed)
    families = _families()
    records: list[dict[str, Any]] = []
    seen: set[str] = set()
    attempts = 0
    while len(records) < n:
        attempts += 1
        if attempts > 50 * n:
            raise ValueError(f"could not generate {n} unique questions")
        family = families[len(records) % len(families)]
        values = family["values"](rng)
        question = family["question"].format(**values)
        if question in seen:
            continue
        seen.add(question)
        values["amount"] = _money(rng)
        records.append({
            "question": question,
            "intent": infer_intent(question),
            "plan": [step.format(**values) for step in family["plan"]],
            "code": family["code"].format(**values),
            "response": family["response"].format(**values),
        })
    return records


_NOVEL_TEMPLATES = (
    "Forecast demand volatility for sku family F{n} over the next {m} cycles",
    "Rank reorder policy breaches by severity for zone Z{n}",
    "Compare unit conversion discrepancies logged during audit window {n}",
    "Estimate forecast bias for planning horizon {m} weeks in zone Z{n}",
    "List movement anomalies flagged by dock {m} sensors this week",
)


def make_query_log(corpus: list[dict[str, Any]], n: int = 1000,
                   shares: tuple[float, float, float] = (0.23, 0.44, 0.33),
                   seed: int = 11) -> list[dict[str, Any]]:
    """An engineered query log with the requested return/guide/generate mix.

    Duplicates repeat seeded questions verbatim; paraphrases re-phrase a
    seeded question and substitute fresh values; novel queries come from a
    vocabulary disjoint from the corpus so they stay below the guide
    threshold.
    """
    rng = random.Random(seed)
    n_return = round(n * shares[0])
    n_guide = round(n * shares[1])
    n_generate = n - n_return - n_guide

    seen_questions = {r["question"] for r in corpus}
    records: list[dict[str, Any]] = []

    for record in rng.sample(corpus, n_return):
        records.append({"query": record["question"], "expected_mode": "return",
                        "expected_intent": record["intent"]})

    family_list = _families()
    used: set[str] = set()
    attempts = 0
    while len(used) < n_guide:
        attempts += 1
        if attempts > 100 * n:
            raise ValueError("paraphrase value space exhausted")
        family = family_list[rng.randrange(len(family_list))]
        phrasing = rng.choice(family["paraphrases"])
        values = family["values"](rng)
        query = phrasing.format(**values)
        if query in seen_questions or query in used:
            continue
        used.add(query)
        records.append({"query": query, "expected_mode": "guide",
                        "expected_intent": infer_intent(query)})

    novel_used: set[str] = set()
    attempts = 0
    while len(novel_used) < n_generate:
        attempts += 1
        if attempts > 100 * n:
            raise ValueError("novel-query value space exhausted")
        template = rng.choice(_NOVEL_TEMPLATES)
        query = template.format(n=rng.randint(1, 400), m=rng.randint(2, 52))
        if query in novel_used:
            continue
        novel_used.add(query)
        records.append({"query": query, "expected_mode": "generate",
                        "expected_intent": infer_intent(query)})

    rng.shuffle(records)
    return records


def _main() -> None:
    import argparse
    import json
    from pathlib import Path

    from .prompts import save_repository

    parser = argparse.ArgumentParser(
        prog="python -m semcache.synth",
        description="Generate a demo schema, prompt repository, seed corpus, "
                    "and engineered query log.")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--entries", type=int, default=1021)
    parser.add_argument("--queries", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    make_schema().save(out / "schema.json")
    save_repository(make_prompt_repository(), out / "prompts.jsonl")
    corpus = make_seed_corpus(args.entries, seed=args.seed)
    with (out / "corpus.jsonl").open("w", encoding="utf-8") as handle:
        for record in corpus:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    log = make_query_log(corpus, n=args.queries, seed=args.seed + 4)
    with (out / "queries.jsonl").open("w", encoding="utf-8") as handle:
        for record in log:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote schema.json, prompts.jsonl, corpus.jsonl ({len(corpus)}), "
          f"queries.jsonl ({len(log)}) under {out}")


if __name__ == "__main__":
    _main()
