"""Constraint-based sequential pattern mining.

A sequence supports a pattern when at least one embedding of the pattern
(strictly increasing positions with matching items) satisfies every
attribute constraint. Four aggregates are supported:

``average``  mean of the embedded values
``span``     max - min of the embedded values
``gap``      next - previous value, for every consecutive embedded pair
``value``    every embedded value individually

``mine`` grows patterns depth-first by prefix projection. Each projected
sequence keeps the non-dominated partial embeddings of the current prefix
(last position plus the running sums / extrema the constraints need), so the
constrained support of every candidate is exact. Growth is pruned only by
the prefix-safe support (value, gap and span <= constraints), which is
anti-monotone; average constraints never prune growth.
"""

from __future__ import annotations

import bisect
import itertools
import json
import logging
import math
import sys
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence as Seq

from .seqdb import Sequence, SequenceDatabase, SeqDBError

log = logging.getLogger(__name__)

GE, LE = ">=", "<="
AGGREGATES = ("average", "span", "gap", "value")
_RELATION_ALIASES = {">=": GE, "≥": GE, "ge": GE, "<=": LE, "≤": LE, "le": LE}

Pattern = tuple  # tuple[str, ...]


class MiningError(SeqDBError):
    pass


class ConstraintError(MiningError):
    pass


class AttributeMissingError(MiningError):
    pass


@dataclass(frozen=True)
class ConstraintSpec:
    attribute: str
    aggregate: str
    relation: str
    bound: float

    def __post_init__(self):
        if self.aggregate not in AGGREGATES:
            raise ConstraintError(f"unknown aggregate {self.aggregate!r}; expected one of {AGGREGATES}")
        rel = _RELATION_ALIASES.get(self.relation)
        if rel is None:
            raise ConstraintError(f"unknown relation {self.relation!r}; expected '>=' or '<='")
        object.__setattr__(self, "relation", rel)
        try:
            bound = float(self.bound)
        except (TypeError, ValueError):
            raise ConstraintError(f"bound must be a number, got {self.bound!r}") from None
        if not math.isfinite(bound):
            raise ConstraintError(f"bound must be finite, got {self.bound!r}")
        object.__setattr__(self, "bound", bound)

    def holds(self, x: float) -> bool:
        return x >= self.bound if self.relation == GE else x <= self.bound

    @property
    def prefix_safe(self) -> bool:
        """True when every prefix of a satisfying embedding also satisfies it."""
        if self.aggregate in ("value", "gap"):
            return True
        return self.aggregate == "span" and self.relation == LE

    def to_dict(self) -> dict:
        return {"attribute": self.attribute, "aggregate": self.aggregate,
                "relation": self.relation, "bound": self.bound}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSpec":
        try:
            return cls(d["attribute"], d["aggregate"], d["relation"], d["bound"])
        except KeyError as e:
            raise ConstraintError(f"constraint missing key {e.args[0]!r}: {d!r}") from None

    def __str__(self):
        return f"{self.aggregate}({self.attribute}) {self.relation} {self.bound:g}"


@dataclass(frozen=True)
class MiningConfig:
    """``min_frequency`` is an absolute count when given as an int and a
    fraction of the mined database size when given as a float."""

    min_frequency: int | float = 2
    constraints: tuple[ConstraintSpec, ...] = ()
    min_pattern_length: int = 2
    max_pattern_length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        f = self.min_frequency
        if isinstance(f, bool) or not isinstance(f, (int, float)):
            raise ConstraintError(f"min_frequency must be a number, got {f!r}")
        if isinstance(f, int):
            if f < 1:
                raise ConstraintError(f"absolute min_frequency must be >= 1, got {f}")
        elif not (0 < f <= 1):
            raise ConstraintError(f"fractional min_frequency must be in (0, 1], got {f}")
        if self.min_pattern_length < 1:
            raise ConstraintError("min_pattern_length must be >= 1")
        if self.max_pattern_length is not None and self.max_pattern_length < self.min_pattern_length:
            raise ConstraintError("max_pattern_length must be >= min_pattern_length")

    def resolve_threshold(self, size: int) -> int:
        f = self.min_frequency
        if isinstance(f, int):
            return f
        # Fraction(str(.)) keeps 0.3 * 10 at exactly 3
        return max(1, math.ceil(Fraction(str(f)) * size))

    def to_dict(self) -> dict:
        return {
            "min_frequency": self.min_frequency,
            "constraints": [c.to_dict() for c in self.constraints],
            "min_pattern_length": self.min_pattern_length,
            "max_pattern_length": self.max_pattern_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MiningConfig":
        return cls(
            min_frequency=d.get("min_frequency", 2),
            constraints=tuple(ConstraintSpec.from_dict(c) for c in d.get("constraints", ())),
            min_pattern_length=d.get("min_pattern_length", 2),
            max_pattern_length=d.get("max_pattern_length"),
        )


@dataclass(frozen=True, order=True)
class MinedPattern:
    pattern: Pattern
    support: int

    def sort_key(self):
        return (-self.support, self.pattern)

    def to_dict(self) -> dict:
        return {"pattern": list(self.pattern), "support": self.support}


def canonical(patterns: Iterable[MinedPattern]) -> list[MinedPattern]:
    return sorted(patterns, key=MinedPattern.sort_key)


def _check_attributes(schema, constraints, where="database") -> None:
    missing = sorted({c.attribute for c in constraints} - set(schema))
    if missing:
        raise AttributeMissingError(f"constraint attribute(s) {missing} not in {where} schema {sorted(schema)}")


# -- single sequence check -----------------------------------------------------


def embedding_satisfies(seq: Sequence, pattern: Seq[str], constraints: Seq[ConstraintSpec] = ()) -> bool:
    """Is there an embedding of ``pattern`` in ``seq`` satisfying every constraint?

    Depth-first over embeddings. Each average constraint gets a suffix table
    of the best achievable remaining sum, used as an admissible bound; a
    lone average constraint is answered by the table directly.
    """
    pattern = tuple(pattern)
    if not pattern:
        raise ValueError("pattern must be non-empty")
    _check_attributes(seq.schema, constraints, f"sequence {seq.id!r}")
    m, n = len(pattern), len(seq)
    values = {a: seq.values(a) for a in {c.attribute for c in constraints}}
    value_cs = [c for c in constraints if c.aggregate == "value"]
    avg_cs = [c for c in constraints if c.aggregate == "average"]
    span_cs = [c for c in constraints if c.aggregate == "span"]
    gap_cs = [c for c in constraints if c.aggregate == "gap"]

    items = seq.items
    allowed = [all(c.holds(values[c.attribute][j]) for c in value_cs) for j in range(n)]
    cands = [[j for j in range(n) if items[j] == x and allowed[j]] for x in pattern]
    if any(not c for c in cands):
        return False

    if not (avg_cs or span_cs or gap_cs):
        p = -1
        for c in cands:
            k = bisect.bisect_right(c, p)
            if k == len(c):
                return False
            p = c[k]
        return True

    # best[c][k][j]: best sum over embeddings of pattern[k:] into seq[j:]
    tables = []
    for c in avg_cs:
        v = values[c.attribute]
        pick = max if c.relation == GE else min
        worst = -math.inf if c.relation == GE else math.inf
        table = [[worst] * (n + 1) for _ in range(m)] + [[0.0] * (n + 1)]
        for k in range(m - 1, -1, -1):
            member = set(cands[k])
            row, nxt = table[k], table[k + 1]
            for j in range(n - 1, -1, -1):
                best = row[j + 1]
                if j in member and math.isfinite(nxt[j + 1]):
                    best = pick(best, v[j] + nxt[j + 1])
                row[j] = best
        tables.append(table)

    if len(avg_cs) == 1 and not (span_cs or gap_cs):
        total = tables[0][0][0]
        return math.isfinite(total) and avg_cs[0].holds(total / m)

    span_attrs = sorted({c.attribute for c in span_cs})

    def slack_fails(c, mean):
        tol = 1e-9 * max(1.0, abs(c.bound))
        return mean < c.bound - tol if c.relation == GE else mean > c.bound + tol

    def dfs(k, prev, sums, lo, hi):
        if k == m:
            if any(not c.holds(sums[i] / m) for i, c in enumerate(avg_cs)):
                return False
            return all(c.holds(hi[c.attribute] - lo[c.attribute]) for c in span_cs)
        for j in cands[k][bisect.bisect_right(cands[k], prev):]:
            if k and any(not c.holds(values[c.attribute][j] - values[c.attribute][prev]) for c in gap_cs):
                continue
            nlo, nhi = dict(lo), dict(hi)
            for a in span_attrs:
                x = values[a][j]
                nlo[a] = min(nlo[a], x)
                nhi[a] = max(nhi[a], x)
            if any(c.relation == LE and not c.holds(nhi[c.attribute] - nlo[c.attribute]) for c in span_cs):
                continue
            nsums = [s + values[c.attribute][j] for s, c in zip(sums, avg_cs)]
            pruned = False
            for i, c in enumerate(avg_cs):
                rest = tables[i][k + 1][j + 1]
                if not math.isfinite(rest) or slack_fails(c, (nsums[i] + rest) / m):
                    pruned = True
                    break
            if pruned:
                continue
            if dfs(k + 1, j, nsums, nlo, nhi):
                return True
        return False

    return dfs(0, -1, [0.0] * len(avg_cs),
               {a: math.inf for a in span_attrs}, {a: -math.inf for a in span_attrs})


def constrained_support(db: SequenceDatabase, pattern: Seq[str], constraints: Seq[ConstraintSpec] = ()) -> int:
    return sum(embedding_satisfies(s, pattern, constraints) for s in db)


# -- pattern growth ------------------------------------------------------------


class _Plan:
    """Constraint bookkeeping shared by every projected sequence.

    A partial-embedding state is a tuple ``(pos, *vec)`` where ``vec`` holds
    one running sum per averaged attribute followed by (min, max) per spanned
    attribute. ``dirs`` gives the preferred direction of each vec slot for
    dominance: +1 larger is better, -1 smaller is better, 0 must be equal.
    """

    def __init__(self, constraints):
        self.value_cs = [c for c in constraints if c.aggregate == "value"]
        self.gap_cs = [c for c in constraints if c.aggregate == "gap"]
        self.avg_cs = [c for c in constraints if c.aggregate == "average"]
        self.span_cs = [c for c in constraints if c.aggregate == "span"]
        self.avg_attrs = sorted({c.attribute for c in self.avg_cs})
        self.span_attrs = sorted({c.attribute for c in self.span_cs})
        self.attrs = sorted({c.attribute for c in constraints})

        def direction(rels, up):
            if len(rels) == 2:
                return 0
            return up if GE in rels else -up

        dirs = []
        for a in self.avg_attrs:
            dirs.append(direction({c.relation for c in self.avg_cs if c.attribute == a}, 1))
        for a in self.span_attrs:
            rels = {c.relation for c in self.span_cs if c.attribute == a}
            dirs.append(direction(rels, -1))  # min: narrower is better for <=
            dirs.append(direction(rels, 1))   # max
        self.dirs = tuple(dirs)
        self.simple = not dirs and not self.gap_cs
        self.span_le = [(self.span_attrs.index(c.attribute), c) for c in self.span_cs if c.relation == LE]
        self.span_ge = [(self.span_attrs.index(c.attribute), c) for c in self.span_cs if c.relation == GE]
        self.avg_final = [(self.avg_attrs.index(c.attribute), c) for c in self.avg_cs]
        self.root_vec = (0.0,) * len(self.avg_attrs) + (math.inf, -math.inf) * len(self.span_attrs)
        self.needs_final = bool(self.avg_cs or self.span_ge)


class _Projected:
    __slots__ = ("items", "by_item", "vals")

    def __init__(self, seq: Sequence, plan: _Plan):
        self.items = seq.items
        self.vals = {a: seq.values(a) for a in plan.attrs}
        self.by_item: dict[str, list[int]] = defaultdict(list)
        for j, x in enumerate(self.items):
            if all(c.holds(self.vals[c.attribute][j]) for c in plan.value_cs):
                self.by_item[x].append(j)


def _dominates(a, b, dirs, same_pos) -> bool:
    if same_pos:
        if a[0] != b[0]:
            return False
    elif a[0] > b[0]:
        return False
    for i, d in enumerate(dirs, 1):
        if d > 0:
            if a[i] < b[i]:
                return False
        elif d < 0:
            if a[i] > b[i]:
                return False
        elif a[i] != b[i]:
            return False
    return True


class _Grower:
    def __init__(self, db: SequenceDatabase, config: MiningConfig, theta: int):
        self.config = config
        self.theta = theta
        self.plan = _Plan(config.constraints)
        self.seqs = [_Projected(s, self.plan) for s in db]
        self.max_len = config.max_pattern_length
        self.out: list[MinedPattern] = []

    def root(self):
        if self.plan.simple:
            return [(i, -1) for i in range(len(self.seqs))]
        start = ((-1,) + self.plan.root_vec,)
        return [(i, start) for i in range(len(self.seqs))]

    def extend(self, i, states, x):
        positions = self.seqs[i].by_item.get(x)
        if not positions:
            return None
        if self.plan.simple:
            k = bisect.bisect_right(positions, states)
            return positions[k] if k < len(positions) else None
        plan = self.plan
        vals = self.seqs[i].vals
        same_pos = bool(plan.gap_cs)
        navg = len(plan.avg_attrs)
        kept: list[tuple] = []
        first = states[0][0]
        for j in positions[bisect.bisect_right(positions, first):]:
            for st in states:
                p = st[0]
                if p >= j:
                    break
                if p >= 0 and any(not c.holds(vals[c.attribute][j] - vals[c.attribute][p]) for c in plan.gap_cs):
                    continue
                vec = list(st[1:])
                for s, a in enumerate(plan.avg_attrs):
                    vec[s] += vals[a][j]
                for s, a in enumerate(plan.span_attrs):
                    x_ = vals[a][j]
                    lo, hi = navg + 2 * s, navg + 2 * s + 1
                    if x_ < vec[lo]:
                        vec[lo] = x_
                    if x_ > vec[hi]:
                        vec[hi] = x_
                if any(not c.holds(vec[navg + 2 * s + 1] - vec[navg + 2 * s]) for s, c in plan.span_le):
                    continue
                new = (j, *vec)
                if any(_dominates(o, new, plan.dirs, same_pos) for o in kept):
                    continue
                kept = [o for o in kept if not _dominates(new, o, plan.dirs, same_pos)]
                kept.append(new)
        if not kept:
            return None
        kept.sort()
        return kept

    def final_ok(self, states, m) -> bool:
        plan = self.plan
        navg = len(plan.avg_attrs)
        for st in states:
            vec = st[1:]
            if all(c.holds(vec[s] / m) for s, c in plan.avg_final) and all(
                c.holds(vec[navg + 2 * s + 1] - vec[navg + 2 * s]) for s, c in plan.span_ge
            ):
                return True
        return False

    def support(self, proj, m) -> int:
        if not self.plan.needs_final:
            return len(proj)
        return sum(1 for i, st in proj if self.final_ok(st, m))

    def candidate_items(self, proj) -> list[str]:
        counts: Counter = Counter()
        simple = self.plan.simple
        for i, st in proj:
            first = st if simple else st[0][0]
            counts.update(set(self.seqs[i].items[first + 1:]))
        return sorted(x for x, c in counts.items() if c >= self.theta)

    def grow(self, prefix, proj):
        m = len(prefix)
        if m >= self.config.min_pattern_length:
            sup = self.support(proj, m)
            if sup >= self.theta:
                self.out.append(MinedPattern(prefix, sup))
        if self.max_len is not None and m >= self.max_len:
            return
        for x in self.candidate_items(proj):
            nxt = []
            for i, st in proj:
                ext = self.extend(i, st, x)
                if ext is not None:
                    nxt.append((i, ext))
            if len(nxt) >= self.theta:
                self.grow(prefix + (x,), nxt)

    def branch(self, x):
        proj = []
        for i, st in self.root():
            ext = self.extend(i, st, x)
            if ext is not None:
                proj.append((i, ext))
        if len(proj) >= self.theta:
            self.grow((x,), proj)


_worker_grower: _Grower | None = None


def _init_worker(db, config, theta):
    global _worker_grower
    _worker_grower = _Grower(db, config, theta)


def _run_branch(x):
    g = _worker_grower
    g.out = []
    g.branch(x)
    return g.out


def mine(db: SequenceDatabase, config: MiningConfig, workers: int = 1) -> list[MinedPattern]:
    """All patterns meeting the length bounds whose constrained support is at
    least the resolved threshold, in canonical order (support descending,
    then item list ascending)."""
    if db.size == 0:
        return []
    _check_attributes(db.schema, config.constraints)
    theta = config.resolve_threshold(db.size)
    if theta > db.size:
        return []
    depth = max(len(s) for s in db) + 100
    if sys.getrecursionlimit() < depth:
        sys.setrecursionlimit(depth)

    grower = _Grower(db, config, theta)
    top = grower.candidate_items(grower.root())
    if workers <= 1 or len(top) <= 1:
        for x in top:
            grower.branch(x)
        found = grower.out
    else:
        found = []
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(db, config, theta)) as ex:
            for part in ex.map(_run_branch, top):
                found.extend(part)
    return canonical(found)


# -- brute-force oracle --------------------------------------------------------


def _embedding_ok(vals: dict, idx: tuple, constraints) -> bool:
    for c in constraints:
        xs = [vals[c.attribute][i] for i in idx]
        if c.aggregate == "average":
            ok = c.holds(sum(xs) / len(xs))
        elif c.aggregate == "span":
            ok = c.holds(max(xs) - min(xs))
        elif c.aggregate == "gap":
            ok = all(c.holds(b - a) for a, b in zip(xs, xs[1:]))
        else:
            ok = all(c.holds(x) for x in xs)
        if not ok:
            return False
    return True


def mine_bruteforce(db: SequenceDatabase, config: MiningConfig) -> list[MinedPattern]:
    """Same contract as ``mine``, by enumerating every index combination of
    every sequence. Exponential in sequence length; for small inputs only."""
    if db.size == 0:
        return []
    _check_attributes(db.schema, config.constraints)
    theta = config.resolve_threshold(db.size)
    hi_len = config.max_pattern_length
    support: Counter = Counter()
    for seq in db:
        n = len(seq)
        items = seq.items
        vals = {c.attribute: seq.values(c.attribute) for c in config.constraints}
        ok: set[tuple] = set()
        top = n if hi_len is None else min(n, hi_len)
        for r in range(config.min_pattern_length, top + 1):
            for idx in itertools.combinations(range(n), r):
                key = tuple(items[i] for i in idx)
                if key not in ok and _embedding_ok(vals, idx, config.constraints):
                    ok.add(key)
        support.update(ok)
    return canonical(MinedPattern(p, s) for p, s in support.items() if s >= theta)


# -- serialization -------------------------------------------------------------


def patterns_to_json(patterns: Iterable[MinedPattern]) -> str:
    rows = [json.dumps(p.to_dict(), ensure_ascii=False) for p in patterns]
    if not rows:
        return "[]\n"
    return "[\n" + ",\n".join("  " + r for r in rows) + "\n]\n"


def patterns_from_json(text: str) -> list[MinedPattern]:
    return [MinedPattern(tuple(str(x) for x in d["pattern"]), int(d["support"])) for d in json.loads(text)]
