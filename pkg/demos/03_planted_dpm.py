"""Mine positives and negatives separately on a synthetic clickstream with
three planted purchase-leading patterns, then see where those land."""

# %%
import time

from dpmine import ConstraintSpec, MiningConfig, lift_report, run_dpm, split_by_label
from dpmine.synthetic import PLANTED, planted_database

db = planted_database(n=2000, positive_rate=0.1, seed=0)
pos, neg = split_by_label(db)
print(db.size, "sequences,", pos.size, "positive")

cfg = MiningConfig(
    min_frequency=0.3,
    constraints=(ConstraintSpec("order", "span", "<=", 10),
                 ConstraintSpec("time", "average", ">=", 20)),
    min_pattern_length=2,
    max_pattern_length=5,
)

# %%
t0 = time.perf_counter()
res = run_dpm(db, cfg)
print(f"mined in {time.perf_counter() - t0:.1f}s")
for k, v in res.sizes().items():
    print(f"  {k:13s} {v}")

unique = {m.pattern for m in res.pos_unique}
for p in PLANTED:
    print("planted", "-".join(p), "in pos_unique:", p in unique)

# %% lift: which union patterns separate the classes most
report = lift_report(res, pos, neg, cfg.constraints)
for r in report.rows[:8]:
    print(f"{'-'.join(r.pattern):12s} pos {r.pos_rate:.3f}  neg {r.neg_rate:.3f}  diff {r.diff:+.3f}")
