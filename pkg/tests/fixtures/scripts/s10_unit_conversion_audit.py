import pandas as pd

# Unit-conversion audit: conversions are keyed by item and organization,
# so the join uses the composite key. Any line whose converted quantity
# disagrees with the stored base quantity by more than the tolerance is
# counted into the discrepancy total reported to the data stewards.
movements = pd.read_csv("stock_movements.csv")
conversions = pd.read_csv("unit_conversions.csv")

audit = movements.merge(conversions, on=["ITEM_CODE", "ORG_ID"])

audit["CONVERTED"] = audit["ENTERED_QTY"] * audit["FACTOR"]
audit = audit[(audit["CONVERTED"] - audit["BASE_QTY"]).abs() > 0.01]

discrepancies = audit["MOVEMENT_ID"].count()

print(f"Conversion discrepancies above tolerance: {discrepancies}")
