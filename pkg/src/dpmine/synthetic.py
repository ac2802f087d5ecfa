"""Synthetic clickstream-like databases.

Event symbols follow the usual clickstream coding (1 page view, 2 detail,
3 add, 4 remove, 5 purchase, 6 search click); every event carries a
``time`` attribute (dwell seconds). ``planted_database`` inserts chosen
patterns into positive sequences so that a pipeline can be checked for
recovering them.
"""

from __future__ import annotations

import numpy as np

from .seqdb import Event, Sequence, SequenceDatabase

SYMBOLS = ("1", "2", "3", "4", "5", "6")
# page views dominate; add/remove are rare
BACKGROUND_P = (0.55, 0.25, 0.03, 0.02, 0.0, 0.15)

PLANTED = (("3", "1", "4"), ("2", "3", "3"), ("4", "6", "2"))


def _background(rng, length_range, probs):
    n = int(rng.integers(length_range[0], length_range[1] + 1))
    items = list(rng.choice(SYMBOLS, size=n, p=probs))
    times = list(np.round(rng.exponential(25.0, size=n), 1))
    return items, times


def _plant(rng, items, times, pattern, dwell):
    # insert the pattern's items at sorted random slots, keeping order
    slots = np.sort(rng.integers(0, len(items) + 1, size=len(pattern)))
    for offset, (slot, x) in enumerate(zip(slots, pattern)):
        items.insert(int(slot) + offset, x)
        times.insert(int(slot) + offset, float(np.round(rng.uniform(*dwell), 1)))


def planted_database(
    n: int = 2000,
    positive_rate: float = 0.1,
    patterns=PLANTED,
    plant_prob_pos: float = 0.75,
    plant_prob_neg: float = 0.01,
    length_range=(5, 15),
    seed: int = 0,
    with_order: bool = True,
) -> SequenceDatabase:
    """Labeled database where each planted pattern appears in a positive
    sequence with probability ``plant_prob_pos`` (at least one per positive)
    and in a negative sequence with probability ``plant_prob_neg``."""
    rng = np.random.default_rng(seed)
    n_pos = int(round(positive_rate * n))
    labels = np.zeros(n, dtype=bool)
    labels[rng.choice(n, size=n_pos, replace=False)] = True
    seqs = []
    for i in range(n):
        items, times = _background(rng, length_range, BACKGROUND_P)
        if labels[i]:
            chosen = [p for p in patterns if rng.random() < plant_prob_pos]
            if not chosen:
                chosen = [patterns[int(rng.integers(len(patterns)))]]
        else:
            chosen = [p for p in patterns if rng.random() < plant_prob_neg]
        for p in chosen:
            _plant(rng, items, times, p, (20.0, 60.0))
        events = []
        for k, (x, t) in enumerate(zip(items, times), 1):
            attrs = {"time": float(t)}
            if with_order:
                attrs["order"] = float(k)
            events.append(Event(str(x), attrs))
        seqs.append(Sequence(f"s{i:05d}", tuple(events), bool(labels[i])))
    return SequenceDatabase(tuple(seqs))


def clickstream_database(n: int = 1000, length_range=(5, 30), seed: int = 0,
                         label: bool | None = True) -> SequenceDatabase:
    """Unplanted background sequences, e.g. as a stand-in for one class in
    runtime sweeps."""
    rng = np.random.default_rng(seed)
    probs = np.array((0.5, 0.25, 0.08, 0.04, 0.03, 0.10))
    seqs = []
    for i in range(n):
        items, times = _background(rng, length_range, probs / probs.sum())
        events = tuple(
            Event(str(x), {"time": float(t), "order": float(k)})
            for k, (x, t) in enumerate(zip(items, times), 1)
        )
        seqs.append(Sequence(f"c{i:05d}", events, label))
    return SequenceDatabase(tuple(seqs))
