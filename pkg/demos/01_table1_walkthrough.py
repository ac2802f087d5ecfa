"""Walk through constrained sequential mining on a three-sequence toy database.

Run with ``python3 demos/01_table1_walkthrough.py``.
"""

# %%
from dpmine import ConstraintSpec, MiningConfig, constrained_support, mine
from dpmine.seqdb import table1

db = table1()
for s in db:
    print(s.id, " ".join(s.items), s.values("price"))

# %% plain mining: patterns of length >= 2 in at least 2 sequences
for m in mine(db, MiningConfig(min_frequency=2)):
    print(m.pattern, m.support)

# %% the threshold can be a fraction of the database
print(MiningConfig(min_frequency=0.5).resolve_threshold(db.size))  # ceil(1.5) -> 2
print(len(mine(db, MiningConfig(min_frequency=1))), "patterns at threshold 1")

# %% an average-price constraint drops patterns whose cheap embeddings are all we have
avg4 = ConstraintSpec("price", "average", ">=", 4)
for m in mine(db, MiningConfig(1, (avg4,))):
    print(m.pattern, m.support)

# support of a single pattern, with and without the constraint
print(constrained_support(db, ("A", "D")), constrained_support(db, ("A", "D"), (avg4,)))
