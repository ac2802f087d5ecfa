"""One-hot pattern embeddings: one binary column per pattern."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .miner import embedding_satisfies
from .seqdb import Sequence, SequenceDatabase


class EncodingError(ValueError):
    pass


def contains(seq: Sequence, pattern) -> bool:
    """Plain subsequence containment by one greedy left-to-right scan."""
    pattern = tuple(pattern)
    k = 0
    for e in seq.events:
        if k < len(pattern) and e.item == pattern[k]:
            k += 1
    return k == len(pattern)


def column_name(pattern) -> str:
    return "-".join(pattern)


@dataclass
class FeatureMatrix:
    row_ids: list[str]
    columns: list[tuple]
    values: np.ndarray  # uint8, (rows, columns)
    labels: np.ndarray | None = None  # uint8 or None

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None
            and np.array_equal(self.labels, other.labels))
        return (self.row_ids == other.row_ids and self.columns == other.columns
                and np.array_equal(self.values, other.values) and same_labels)


def _encode_rows(seqs, patterns, constraints):
    out = np.zeros((len(seqs), len(patterns)), dtype=np.uint8)
    for i, s in enumerate(seqs):
        for j, p in enumerate(patterns):
            if constraints is None:
                out[i, j] = contains(s, p)
            else:
                out[i, j] = embedding_satisfies(s, p, constraints)
    return out


def encode(db: SequenceDatabase, patterns, mode: str = "plain", constraints=None,
           workers: int = 1) -> FeatureMatrix:
    """Entry (i, j) is 1 when sequence i contains pattern j.

    ``mode="plain"`` uses subsequence containment; ``mode="constrained"``
    additionally requires a constraint-satisfying embedding.
    """
    patterns = [tuple(p) for p in patterns]
    if not patterns:
        raise EncodingError("pattern list is empty")
    if len(set(patterns)) != len(patterns):
        dup = next(p for p in patterns if patterns.count(p) > 1)
        raise EncodingError(f"duplicate pattern {column_name(dup)!r}")
    if mode == "plain":
        cs = None
    elif mode == "constrained":
        if not constraints:
            raise EncodingError("constrained mode needs at least one constraint")
        cs = tuple(constraints)
    else:
        raise EncodingError(f"unknown mode {mode!r}; expected 'plain' or 'constrained'")

    seqs = list(db)
    if workers > 1 and len(seqs) > 1:
        chunks = np.array_split(np.arange(len(seqs)), workers)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_encode_rows, [[seqs[i] for i in c] for c in chunks],
                                [patterns] * len(chunks), [cs] * len(chunks)))
        values = np.vstack(parts)
    else:
        values = _encode_rows(seqs, patterns, cs)

    labels = None
    if seqs and all(s.label is not None for s in seqs):
        labels = np.array([int(s.label) for s in seqs], dtype=np.uint8)
    return FeatureMatrix([s.id for s in seqs], patterns, values, labels)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_csv_text(matrix: FeatureMatrix) -> str:
    header = ["id"] + [column_name(c) for c in matrix.columns]
    if matrix.labels is not None:
        header.append("label")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, rid in enumerate(matrix.row_ids):
        row = [rid] + matrix.values[i].tolist()
        if matrix.labels is not None:
            row.append(int(matrix.labels[i]))
        w.writerow(row)
    return buf.getvalue()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".columns.json")


def export_csv(matrix: FeatureMatrix, path, sidecar: bool = True) -> Path:
    """Write the matrix as CSV (id, one column per pattern, label last when
    present) plus a JSON sidecar listing the column patterns in order."""
    try:
        _atomic_write(path, to_csv_text(matrix))
        if sidecar:
            doc = {"columns": [list(c) for c in matrix.columns]}
            _atomic_write(sidecar_path(path), json.dumps(doc, ensure_ascii=False) + "\n")
    except OSError as e:
        raise OSError(f"cannot write feature matrix to {path}: {e.strerror or e}") from e
    return Path(path)


def read_csv(path) -> FeatureMatrix:
    """Inverse of ``export_csv``. Column patterns come from the sidecar when
    it exists, otherwise from splitting header names on "-"."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["id"]:
        raise EncodingError(f"{path}: not a feature matrix CSV (header must start with 'id')")
    header = rows[0]
    has_label = header[-1] == "label"
    names = header[1:-1] if has_label else header[1:]
    side = sidecar_path(path)
    if side.exists():
        columns = [tuple(c) for c in json.loads(side.read_text(encoding="utf-8"))["columns"]]
        if [column_name(c) for c in columns] != names:
            raise EncodingError(f"{side}: columns do not match the CSV header")
    else:
        columns = [tuple(n.split("-")) for n in names]
    body = rows[1:]
    ids = [r[0] for r in body]
    width = len(names)
    values = np.array([[int(x) for x in r[1:1 + width]] for r in body], dtype=np.uint8).reshape(len(body), width)
    labels = np.array([int(r[-1]) for r in body], dtype=np.uint8) if has_label else None
    return FeatureMatrix(ids, columns, values, labels)
