"""Dichotomic pattern mining: mine each outcome class separately and compare.

The positive and negative frequent sets are split three ways (unique to
positives, unique to negatives, shared) and joined into their union, which is
the column set used for pattern embeddings.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass

from .miner import MinedPattern, MiningConfig, constrained_support, mine
from .seqdb import SequenceDatabase, split_by_label

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassPattern:
    """A pattern with its support in each class; ``None`` where the pattern
    was not frequent in that class."""

    pattern: tuple
    pos_support: int | None
    neg_support: int | None

    def sort_key(self):
        return (-((self.pos_support or 0) + (self.neg_support or 0)), self.pattern)

    def to_dict(self) -> dict:
        return {"pattern": list(self.pattern), "pos_support": self.pos_support,
                "neg_support": self.neg_support}


@dataclass(frozen=True)
class DpmResult:
    pos_frequent: list[MinedPattern]
    neg_frequent: list[MinedPattern]
    pos_unique: list[MinedPattern]
    neg_unique: list[MinedPattern]
    shared: list[ClassPattern]
    union: list[ClassPattern]
    pos_size: int = 0
    neg_size: int = 0
    pos_threshold: int | None = None
    neg_threshold: int | None = None

    @property
    def union_patterns(self) -> list[tuple]:
        return [p.pattern for p in self.union]

    def sizes(self) -> dict[str, int]:
        return {k: len(getattr(self, k)) for k in
                ("pos_frequent", "neg_frequent", "pos_unique", "neg_unique", "shared", "union")}

    def to_json(self) -> str:
        # one pattern per line keeps large results diffable
        head = {
            "sizes": self.sizes(),
            "class_sizes": {"pos": self.pos_size, "neg": self.neg_size},
            "thresholds": {"pos": self.pos_threshold, "neg": self.neg_threshold},
        }
        parts = [f" {json.dumps(k)}: {json.dumps(v)}" for k, v in head.items()]
        for k in ("pos_frequent", "neg_frequent", "pos_unique", "neg_unique", "shared", "union"):
            rows = [json.dumps(p.to_dict(), ensure_ascii=False) for p in getattr(self, k)]
            body = "[\n" + ",\n".join("  " + r for r in rows) + "\n ]" if rows else "[]"
            parts.append(f" {json.dumps(k)}: {body}")
        return "{\n" + ",\n".join(parts) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> "DpmResult":
        doc = json.loads(text)

        def mined(rows):
            return [MinedPattern(tuple(r["pattern"]), r["support"]) for r in rows]

        def shared(rows):
            return [ClassPattern(tuple(r["pattern"]), r["pos_support"], r["neg_support"]) for r in rows]

        return cls(mined(doc["pos_frequent"]), mined(doc["neg_frequent"]),
                   mined(doc["pos_unique"]), mined(doc["neg_unique"]),
                   shared(doc["shared"]), shared(doc["union"]),
                   doc["class_sizes"]["pos"], doc["class_sizes"]["neg"],
                   doc["thresholds"]["pos"], doc["thresholds"]["neg"])


def compare_sets(pos_frequent: list[MinedPattern], neg_frequent: list[MinedPattern]):
    """Set algebra on pattern identity; supports are carried along, not compared."""
    pos = {p.pattern: p.support for p in pos_frequent}
    neg = {p.pattern: p.support for p in neg_frequent}
    pos_unique = [p for p in pos_frequent if p.pattern not in neg]
    neg_unique = [p for p in neg_frequent if p.pattern not in pos]
    shared = sorted((ClassPattern(k, pos[k], neg[k]) for k in pos.keys() & neg.keys()),
                    key=ClassPattern.sort_key)
    union = sorted((ClassPattern(k, pos.get(k), neg.get(k)) for k in pos.keys() | neg.keys()),
                   key=ClassPattern.sort_key)
    return pos_unique, neg_unique, shared, union


def run_dpm(db: SequenceDatabase, config: MiningConfig, threshold_scope: str = "class",
            workers: int = 1) -> DpmResult:
    """Split by label, mine both classes, and compare the frequent sets.

    With ``threshold_scope="class"`` a fractional ``min_frequency`` is taken
    against each class size; ``"full"`` resolves it once against the whole
    database and applies that count to both classes.
    """
    if threshold_scope not in ("class", "full"):
        raise ValueError(f"threshold_scope must be 'class' or 'full', got {threshold_scope!r}")
    pos_db, neg_db = split_by_label(db)
    if threshold_scope == "full":
        config = MiningConfig(config.resolve_threshold(db.size), config.constraints,
                              config.min_pattern_length, config.max_pattern_length)

    def one(side, sub):
        if sub.size == 0:
            log.warning("%s class is empty; its frequent set is empty", side)
            return [], None
        return mine(sub, config, workers=workers), config.resolve_threshold(sub.size)

    pos_frequent, pos_theta = one("positive", pos_db)
    neg_frequent, neg_theta = one("negative", neg_db)
    pos_unique, neg_unique, shared, union = compare_sets(pos_frequent, neg_frequent)
    log.info("dpm: pos=%d neg=%d pos_unique=%d neg_unique=%d shared=%d union=%d",
             len(pos_frequent), len(neg_frequent), len(pos_unique), len(neg_unique),
             len(shared), len(union))
    return DpmResult(pos_frequent, neg_frequent, pos_unique, neg_unique, shared, union,
                     pos_db.size, neg_db.size, pos_theta, neg_theta)


# -- lift ----------------------------------------------------------------------


@dataclass(frozen=True)
class LiftRow:
    pattern: tuple
    pos_support: int
    neg_support: int
    pos_rate: float
    neg_rate: float

    @property
    def diff(self) -> float:
        return self.pos_rate - self.neg_rate

    @property
    def ratio(self) -> float:
        if self.neg_rate == 0:
            return math.inf if self.pos_rate > 0 else math.nan
        return self.pos_rate / self.neg_rate


@dataclass(frozen=True)
class LiftReport:
    rows: list[LiftRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pattern", "pos_rate", "neg_rate", "diff", "ratio"])
        for r in self.rows:
            w.writerow(["-".join(r.pattern), repr(r.pos_rate), repr(r.neg_rate),
                        repr(r.diff), repr(r.ratio)])
        return buf.getvalue()

    def to_json(self) -> str:
        def num(x):
            return x if math.isfinite(x) else None

        rows = [{"pattern": list(r.pattern), "pos_support": r.pos_support,
                 "neg_support": r.neg_support, "pos_rate": r.pos_rate, "neg_rate": r.neg_rate,
                 "diff": r.diff, "ratio": num(r.ratio)} for r in self.rows]
        return json.dumps(rows, indent=1, ensure_ascii=False) + "\n"


def lift_report(result: DpmResult, pos_db: SequenceDatabase, neg_db: SequenceDatabase,
                constraints=()) -> LiftReport:
    """Per union pattern, the share of each class that supports it.

    A support missing because the pattern was not frequent in a class is
    computed exactly on that class rather than taken as zero.
    """
    def rate(s, n):
        return s / n if n else 0.0

    rows = []
    for cp in result.union:
        ps = cp.pos_support if cp.pos_support is not None else constrained_support(pos_db, cp.pattern, constraints)
        ns = cp.neg_support if cp.neg_support is not None else constrained_support(neg_db, cp.pattern, constraints)
        rows.append(LiftRow(cp.pattern, ps, ns, rate(ps, pos_db.size), rate(ns, neg_db.size)))
    rows.sort(key=lambda r: -abs(r.diff))  # stable: ties keep union order
    return LiftReport(rows)
