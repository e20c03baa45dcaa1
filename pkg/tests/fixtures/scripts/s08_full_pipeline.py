import pandas as pd
import matplotlib.pyplot as plt

# Full treatment for the quarterly review: join demand forecasts onto the
# stock position, keep the under-covered items, aggregate shortfall value
# by organization, and chart it. This is the widest query the review deck
# needs; everything else is a subset of this flow.
stock = pd.read_csv("inventory_master.csv")
forecasts = pd.read_csv("demand_forecasts.csv")

coverage = stock.merge(forecasts, on="ITEM_CODE")

coverage = coverage[coverage["FORECAST_QTY"] > coverage["ON_HAND_QTY"]]

coverage["SHORTFALL_VALUE"] = (
    (coverage["FORECAST_QTY"] - coverage["ON_HAND_QTY"]) * coverage["UNIT_COST"])
by_org = coverage.groupby("ORGANIZATION")["SHORTFALL_VALUE"].sum()

fig, ax = plt.subplots(figsize=(9, 4))
by_org.plot(ax=ax, kind="barh", color="#3b8a5e")
ax.set_title("Forecast shortfall value by organization")
fig.tight_layout()
fig.savefig("shortfall_by_org.png", dpi=150)

print(f"Organizations with shortfall: {len(by_org)}")
