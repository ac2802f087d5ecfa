"""Sequence databases: events with numeric attributes, optional binary labels.

Loaders (JSONL and long-format CSV) validate strictly and raise; ``validate``
collects violations into a report instead, so a database built by hand can
still be inspected.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping


class SeqDBError(ValueError):
    """Base class for sequence database errors."""


class ParseError(SeqDBError):
    pass


class SchemaError(SeqDBError):
    pass


class ValidationError(SeqDBError):
    pass


class LabelError(SeqDBError):
    pass


class ConfigError(SeqDBError):
    pass


@dataclass(frozen=True)
class Event:
    item: str
    attrs: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Sequence:
    id: str
    events: tuple[Event, ...]
    label: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    @property
    def items(self) -> list[str]:
        return [e.item for e in self.events]

    @property
    def schema(self) -> frozenset[str]:
        if not self.events:
            return frozenset()
        return frozenset(self.events[0].attrs)

    def values(self, attribute: str) -> list[float]:
        return [e.attrs[attribute] for e in self.events]


@dataclass(frozen=True)
class SequenceDatabase:
    """Ordered, immutable collection of sequences.

    ``schema`` is the union of attribute names seen across all events; for a
    valid database every event carries exactly this set.
    """

    sequences: tuple[Sequence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))

    @property
    def schema(self) -> frozenset[str]:
        names: set[str] = set()
        for seq in self.sequences:
            for ev in seq.events:
                names.update(ev.attrs)
        return frozenset(names)

    @property
    def size(self) -> int:
        return len(self.sequences)

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sequences]

    @property
    def labels(self) -> list[bool | None]:
        return [s.label for s in self.sequences]


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # schema | duplicate_id | length | non_finite | empty
    seq_id: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_text(self) -> str:
        if not self.violations:
            return "valid: no violations\n"
        lines = [f"{len(self.violations)} violation(s)"]
        lines += [f"{v.kind}\t{v.seq_id}\t{v.detail}" for v in self.violations]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"ok": self.ok, "violations": [v.__dict__ for v in self.violations]},
            indent=2,
        )


def validate(
    db: SequenceDatabase, length_bounds: tuple[int | None, int | None] | None = None
) -> ValidationReport:
    """Report schema mismatches, duplicate ids, non-finite values, and
    optionally sequence lengths outside ``length_bounds`` (inclusive)."""
    report = ValidationReport()
    schema = db.schema
    seen: set[str] = set()
    lo, hi = length_bounds if length_bounds else (None, None)
    for seq in db:
        if seq.id in seen:
            report.violations.append(Violation("duplicate_id", seq.id, "id repeated"))
        seen.add(seq.id)
        if not seq.events:
            report.violations.append(Violation("empty", seq.id, "no events"))
            continue
        for pos, ev in enumerate(seq.events, 1):
            if set(ev.attrs) != schema:
                report.violations.append(
                    Violation(
                        "schema",
                        seq.id,
                        f"event {pos} has attributes {sorted(ev.attrs)}, expected {sorted(schema)}",
                    )
                )
                break
        for pos, ev in enumerate(seq.events, 1):
            bad = [k for k, v in ev.attrs.items() if not _is_finite_number(v)]
            for k in sorted(bad):
                report.violations.append(
                    Violation("non_finite", seq.id, f"event {pos} attribute {k!r} = {ev.attrs[k]!r}")
                )
        n = len(seq)
        if (lo is not None and n < lo) or (hi is not None and n > hi):
            report.violations.append(
                Violation("length", seq.id, f"length {n} outside [{lo}, {hi}]")
            )
    return report


def _is_finite_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_strict(db: SequenceDatabase) -> None:
    report = validate(db)
    for kind, exc in (("schema", SchemaError), ("duplicate_id", ValidationError),
                      ("non_finite", ValidationError), ("empty", ValidationError)):
        found = report.of_kind(kind)
        if found:
            v = found[0]
            raise exc(f"{kind} violation in sequence {v.seq_id!r}: {v.detail}")


# -- JSONL ---------------------------------------------------------------------


def _parse_label(raw, where: str) -> bool | None:
    if raw is None:
        return None
    if raw in (0, 1) and not isinstance(raw, float):
        return bool(raw)
    raise ParseError(f"{where}: label must be 0 or 1, got {raw!r}")


def _parse_attrs(raw, where: str) -> dict[str, float]:
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: attrs must be an object")
    out = {}
    for k, v in raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{where}: attribute {k!r} is not numeric: {v!r}")
        out[str(k)] = float(v)
    return out


def _record_to_sequence(rec, where: str) -> Sequence:
    if not isinstance(rec, dict):
        raise ParseError(f"{where}: record must be an object")
    for key in ("id", "events"):
        if key not in rec:
            raise ParseError(f"{where}: missing field {key!r}")
    raw_events = rec["events"]
    if not isinstance(raw_events, list) or not raw_events:
        raise ParseError(f"{where}: events must be a non-empty list")
    events = []
    for k, ev in enumerate(raw_events, 1):
        if not isinstance(ev, dict) or "item" not in ev:
            raise ParseError(f"{where}: event {k} lacks 'item'")
        item = str(ev["item"])
        if not item:
            raise ParseError(f"{where}: event {k} has an empty item")
        events.append(Event(item, _parse_attrs(ev.get("attrs", {}), f"{where}, event {k}")))
    return Sequence(str(rec["id"]), tuple(events), _parse_label(rec.get("label"), where))


def load_jsonl(path) -> SequenceDatabase:
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}: line {lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{where}: invalid JSON ({e.msg})") from e
            seqs.append(_record_to_sequence(rec, where))
    db = SequenceDatabase(tuple(seqs))
    _check_strict(db)
    return db


def sequence_to_record(seq: Sequence) -> dict:
    rec: dict = {"id": seq.id}
    if seq.label is not None:
        rec["label"] = int(seq.label)
    rec["events"] = [{"item": e.item, "attrs": dict(e.attrs)} for e in seq.events]
    return rec


def write_jsonl(db: SequenceDatabase, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in db:
            fh.write(json.dumps(sequence_to_record(seq)) + "\n")


# -- CSV -----------------------------------------------------------------------

DEFAULT_CSV_MAPPING = {"seq_id": "seq_id", "item": "item", "label": "label"}


def load_csv(path, mapping: Mapping | None = None) -> SequenceDatabase:
    """Load a long-format CSV, one row per event.

    ``mapping`` assigns column roles: ``seq_id``, ``item``, optional ``label``
    and optional ``attributes`` (list of column names; default is every
    column not used by another role). Rows of one sequence must be
    contiguous and in event order.
    """
    user = dict(mapping or {})
    mapping = {**DEFAULT_CSV_MAPPING, **user}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return SequenceDatabase()
        cols = {name: i for i, name in enumerate(header)}
        for role in ("seq_id", "item"):
            if mapping[role] not in cols:
                raise ConfigError(f"{path}: mapped {role} column {mapping[role]!r} not in header")
        label_col = mapping.get("label")
        if label_col is not None and label_col not in cols:
            if "label" in user:
                raise ConfigError(f"{path}: mapped label column {label_col!r} not in header")
            label_col = None
        attributes = mapping.get("attributes")
        used = {mapping["seq_id"], mapping["item"], label_col}
        if attributes is None:
            attributes = [c for c in header if c not in used]
        for a in attributes:
            if a not in cols:
                raise ConfigError(f"{path}: mapped attribute column {a!r} not in header")

        seqs: list[Sequence] = []
        done: set[str] = set()
        cur_id, cur_events, cur_label = None, [], None

        def flush():
            if cur_id is not None:
                seqs.append(Sequence(cur_id, tuple(cur_events), cur_label))
                done.add(cur_id)

        for rowno, row in enumerate(reader, 1):
            where = f"{path}: row {rowno} (line {rowno + 1})"
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{where}: expected {len(header)} cells, got {len(row)}")
            sid = row[cols[mapping["seq_id"]]]
            label = None
            if label_col is not None:
                cell = row[cols[label_col]].strip()
                if cell not in ("0", "1", ""):
                    raise ParseError(f"{where}: label must be 0 or 1, got {cell!r}")
                label = None if cell == "" else cell == "1"
            if sid != cur_id:
                if sid in done:
                    raise ParseError(f"{where}: rows for sequence {sid!r} are not contiguous")
                flush()
                cur_id, cur_events, cur_label = sid, [], label
            elif label != cur_label:
                raise ParseError(f"{where}: label changes within sequence {sid!r}")
            item = row[cols[mapping["item"]]]
            if not item:
                raise ParseError(f"{where}: empty item")
            attrs = {}
            for a in attributes:
                cell = row[cols[a]]
                try:
                    attrs[a] = float(cell)
                except ValueError:
                    raise ParseError(f"{where}: attribute {a!r} is not numeric: {cell!r}") from None
            cur_events.append(Event(item, attrs))
        flush()
    db = SequenceDatabase(tuple(seqs))
    _check_strict(db)
    return db


# -- transforms ----------------------------------------------------------------


def attach_order_attribute(db: SequenceDatabase, name: str = "order") -> SequenceDatabase:
    """Give every event its 1-based position within its sequence."""
    if name in db.schema:
        raise SchemaError(f"attribute {name!r} already present in schema")
    return SequenceDatabase(
        tuple(
            Sequence(
                s.id,
                tuple(Event(e.item, {**e.attrs, name: float(i)}) for i, e in enumerate(s.events, 1)),
                s.label,
            )
            for s in db
        )
    )


def split_by_label(db: SequenceDatabase) -> tuple[SequenceDatabase, SequenceDatabase]:
    unlabeled = [s.id for s in db if s.label is None]
    if unlabeled:
        shown = ", ".join(unlabeled[:10]) + (" ..." if len(unlabeled) > 10 else "")
        raise LabelError(f"{len(unlabeled)} unlabeled sequence(s): {shown}")
    pos = SequenceDatabase(tuple(s for s in db if s.label))
    neg = SequenceDatabase(tuple(s for s in db if not s.label))
    return pos, neg


def from_records(records: Iterable[dict]) -> SequenceDatabase:
    """Build a database from JSONL-shaped dicts (handy in scripts and tests)."""
    db = SequenceDatabase(
        tuple(_record_to_sequence(r, f"record {i}") for i, r in enumerate(records, 1))
    )
    _check_strict(db)
    return db


def from_item_lists(item_lists, labels=None, **attr_lists) -> SequenceDatabase:
    """Build a database from parallel lists: items per sequence and, per
    attribute name, values per sequence."""
    seqs = []
    for i, items in enumerate(item_lists):
        events = tuple(
            Event(str(it), {a: float(vals[i][k]) for a, vals in attr_lists.items()})
            for k, it in enumerate(items)
        )
        label = None if labels is None else bool(labels[i])
        seqs.append(Sequence(str(i), events, label))
    return SequenceDatabase(tuple(seqs))


def table1() -> SequenceDatabase:
    """The three-sequence (item, price, timestamp) toy database."""
    rows = [
        [("A", 5, 1), ("A", 5, 1), ("B", 3, 2), ("A", 8, 3), ("D", 2, 3)],
        [("C", 1, 3), ("B", 3, 8), ("A", 3, 9)],
        [("C", 4, 2), ("A", 5, 5), ("C", 2, 5), ("D", 1, 7)],
    ]
    return SequenceDatabase(
        tuple(
            Sequence(
                str(i),
                tuple(Event(it, {"price": float(p), "timestamp": float(t)}) for it, p, t in row),
            )
            for i, row in enumerate(rows, 1)
        )
    )


def read_path(path, fmt: str | None = None, mapping: Mapping | None = None) -> SequenceDatabase:
    fmt = fmt or Path(path).suffix.lstrip(".").lower()
    if fmt == "jsonl":
        return load_jsonl(path)
    if fmt == "csv":
        return load_csv(path, mapping)
    raise ConfigError(f"unknown input format {fmt!r} (expected jsonl or csv)")
