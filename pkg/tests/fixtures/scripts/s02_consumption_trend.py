import pandas as pd
import matplotlib.pyplot as plt

# Twelve-month consumption trend for a single item. The history extract
# carries one row per issue transaction, so the series is rebuilt from raw
# movements instead of the pre-aggregated monthly table, which lags by a
# posting period and understates the current month.
history = pd.read_csv("consumption_history.csv", parse_dates=["ISSUE_DATE"])

history = history[history["ITEM_CODE"] == "ITEM-104-DD2"]

monthly = history.groupby(history["ISSUE_DATE"].dt.to_period("M"))
series = monthly["QUANTITY"].sum()

fig, ax = plt.subplots(figsize=(10, 4))
series.plot(ax=ax, kind="bar", color="#3b6fa0")
ax.set_title("Monthly consumption, ITEM-104-DD2")
ax.set_ylabel("Units issued")
fig.tight_layout()
fig.savefig("consumption_trend.png", dpi=150)

print(f"12-month total: {series.sum():,.0f} units")
