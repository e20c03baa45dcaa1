import pandas as pd
import sqlalchemy

# Reorder review straight from the warehouse database. The SQL pulls the
# joined policy/stock view maintained by the DBA team, so the script only
# narrows to the breaching rows and reports the average breach depth per
# category, matching the figure quoted in the weekly procurement call.
engine = sqlalchemy.create_engine("postgresql://analytics@dwh/inventory")
policies = pd.read_sql("SELECT * FROM reorder_policy_view", engine)

breaches = policies.query("ON_HAND_QTY < REORDER_POINT")

breach_depth = breaches.groupby("CATEGORY")["BREACH_QTY"].mean()

for category, depth in breach_depth.items():
    print(f"{category:<14s} average breach depth: {depth:,.1f} units")
