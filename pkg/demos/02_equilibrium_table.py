"""
Counting unstable directions of the laser-off state
===================================================

Between consecutive centers the number of characteristic roots in the right half
plane is constant on every isotypic component.  Counting them with the argument
principle at the interval midpoints rebuilds the table of unstable dimensions.
"""

from ringhopf.bifurcation import CALIBRATED_PSI, reproduce_table, table_csv
from ringhopf.model import case_study_params

p = case_study_params(CALIBRATED_PSI)
table = reproduce_table(1, p)

# %%
# Counts are real dimensions: a split mode ``j = 1, 2, 3`` contributes two
# complex-conjugate copies, hence the even numbers in those rows.

# interval ends are in units of 1e-2
header = "      " + " ".join(f"{f'{lo:g}-{hi:g}':^13}" for lo, hi in table.intervals)
print(header)
for j, row in table.counts.items():
    cells = " ".join(f"{'(' + str(v) + ')' if m else str(v):^13}" for v, m in zip(row, table.markers[j]))
    print(f"U{j}    {cells}")
print("total " + " ".join(f"{v:^13}" for v in table.totals))
print(f"entries differing from the reference table: {len(table.mismatches())}")

# %%
# The same numbers in the CSV layout used by the command line tool.

print(table_csv(table).splitlines()[0])
