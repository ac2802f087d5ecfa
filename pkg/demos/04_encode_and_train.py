"""Turn the union of class-wise patterns into binary features and run the
repeated-split logistic baseline on them."""

# %%
import numpy as np

from dpmine import ConstraintSpec, MiningConfig, ModelConfig, Protocol, encode, run_dpm, train
from dpmine.baseline import evaluate_matrix, loss_and_grad
from dpmine.synthetic import planted_database

db = planted_database(n=2000, seed=0)
cfg = MiningConfig(0.3, (ConstraintSpec("order", "span", "<=", 10),
                         ConstraintSpec("time", "average", ">=", 20)), 2, 5)
patterns = run_dpm(db, cfg).union_patterns
X = encode(db, patterns)
print("feature matrix", X.shape, "density", X.values.mean().round(3))

# %% constrained mode only counts embeddings that satisfy the constraints
Xc = encode(db, patterns, "constrained", cfg.constraints)
print("constrained density", Xc.values.mean().round(3), "<= plain:", bool((Xc.values <= X.values).all()))

# %% one model on everything, just to look at the loss curve
model = train(X, ModelConfig(epochs=200))
print("loss", np.round(model.loss_history[::50], 4))

# %% the protocol: 10 random 80/20 splits, threshold tuned on 10% of train
report = evaluate_matrix(X, ModelConfig(seed=0), Protocol(splits=10))
print(report.to_table())

# %% sanity: analytic gradient vs central differences on a random point
rng = np.random.default_rng(1)
w, b = rng.normal(size=X.shape[1]) * 0.1, 0.2
Xf, y = X.values[:200].astype(float), X.labels[:200]
_, gw, _ = loss_and_grad(w, b, Xf, y, 1e-3)
e = np.zeros_like(w)
e[0] = 1e-6
num = (loss_and_grad(w + e, b, Xf, y, 1e-3)[0] - loss_and_grad(w - e, b, Xf, y, 1e-3)[0]) / 2e-6
print("d loss / d w0:", gw[0], num)
