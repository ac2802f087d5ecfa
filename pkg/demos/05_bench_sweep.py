"""Runtime vs. the average-dwell bound, on positives of the planted data.

Tighter bounds prune more, so pattern counts fall as the bound rises; the
same sweep is available from the command line as ``dpmine bench``.
"""

# %%
import time

from dpmine import ConstraintSpec, MiningConfig, mine, split_by_label
from dpmine.synthetic import planted_database

pos, _ = split_by_label(planted_database(n=2000, seed=0))

rows = []
for bound in (10, 20, 30, 40, 50, 60):
    cfg = MiningConfig(0.3, (ConstraintSpec("order", "span", "<=", 10),
                             ConstraintSpec("time", "average", ">=", bound)), 2, 5)
    t0 = time.perf_counter()
    n = len(mine(pos, cfg))
    rows.append((bound, time.perf_counter() - t0, n))

# %%
print("bound  seconds  patterns")
for bound, sec, n in rows:
    print(f"{bound:5d}  {sec:7.2f}  {n:8d}")
