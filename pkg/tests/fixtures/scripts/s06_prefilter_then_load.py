import pandas as pd

# The cycle-count worksheet arrives as an in-memory list of dicts from the
# upstream service. Suspicious counts are dropped before the reference
# extract is even read, so the row selection genuinely precedes any data
# load in this script.
worksheet = [row for row in COUNT_ROWS if row["COUNTED_QTY"] >= 0]
worksheet = [row for row in worksheet if row["STATUS"] != "VOID"]

reference = pd.read_csv("inventory_master.csv")

counted = pd.DataFrame(worksheet)
combined = counted.merge(reference, on="ITEM_CODE")

combined["DELTA"] = combined["COUNTED_QTY"] - combined["SYSTEM_QTY"]
total_delta = combined["DELTA"].sum()

print(f"Net count delta across worksheet: {total_delta:,.0f} units")
