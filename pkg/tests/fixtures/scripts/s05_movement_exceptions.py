import pandas as pd

# Exception listing: stock movements posted against blocked storage
# locations. This is a pure filter job; the output is handed to the
# warehouse leads as-is, one row per suspicious posting, so no totals or
# charts are produced here. Sorting keeps repeat offenders adjacent.
movements = pd.read_csv("stock_movements.csv", parse_dates=["POSTED_AT"])

blocked = movements[movements["LOCATION_STATUS"] == "BLOCKED"]
blocked = blocked[blocked["MOVEMENT_TYPE"] != "ADJUSTMENT"]

blocked = blocked.sort_values(["LOCATION_ID", "POSTED_AT"])

for row in blocked.itertuples():
    print(f"{row.POSTED_AT:%Y-%m-%d}  {row.LOCATION_ID}  "
          f"{row.MOVEMENT_TYPE:<10s} {row.ITEM_CODE}")
