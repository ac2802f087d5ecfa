"""Each constraint aggregate on the same small database, next to the
brute-force reference miner so the two can be eyeballed side by side."""

# %%
from dpmine import ConstraintSpec, MiningConfig, mine, mine_bruteforce
from dpmine.seqdb import attach_order_attribute, table1

db = attach_order_attribute(table1())
print(db.schema)

constraints = [
    ConstraintSpec("price", "average", ">=", 4),
    ConstraintSpec("price", "span", "<=", 2),
    ConstraintSpec("timestamp", "gap", "<=", 2),   # consecutive events at most 2 apart
    ConstraintSpec("order", "span", "<=", 2),      # a window of 3 consecutive events
    ConstraintSpec("price", "value", ">=", 2),
]

# %%
for c in constraints:
    cfg = MiningConfig(1, (c,))
    fast = mine(db, cfg)
    slow = mine_bruteforce(db, cfg)
    assert fast == slow
    print(f"{str(c):28s} {len(fast):3d} patterns  e.g. {[m.pattern for m in fast[:3]]}")

# %% constraints combine conjunctively, on the same embedding
both = MiningConfig(1, (constraints[0], constraints[3]))
print([m.pattern for m in mine(db, both)])
