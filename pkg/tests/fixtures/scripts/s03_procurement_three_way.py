import pandas as pd

# Three-way procurement rollup: headers give the supplier and currency,
# lines give quantities and unit prices, and the supplier master provides
# the payment-term bucket the finance team groups by. Joining headers to
# lines first keeps the row count bounded before the wide supplier join.
orders = pd.read_csv("purchase_orders.csv")
lines = pd.read_csv("purchase_order_lines.csv")
suppliers = pd.read_csv("suppliers.csv")

po = orders.merge(lines, on="PO_ID")
po = po.merge(suppliers, on="SUPPLIER_ID")

# Only approved orders from the current fiscal year enter the rollup.
po = po[po["STATUS"] == "APPROVED"]
po = po[po["FISCAL_YEAR"] == 2025]

po["LINE_VALUE"] = po["ORDER_QTY"] * po["UNIT_PRICE"]
by_terms = po.groupby("PAYMENT_TERMS")["LINE_VALUE"].sum()

for terms, value in by_terms.items():
    print(f"{terms:>12s}: {value:,.2f}")
