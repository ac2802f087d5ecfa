"""Command-line runs driven by a JSON config file.

    dpmine mine   --config run.json
    dpmine dpm    --config run.json
    dpmine encode --config run.json --patterns out/dpm.json
    dpmine train  --config run.json --features out/features.csv
    dpmine bench  --config run.json --bounds 10 20 30

Every command writes its outputs plus ``<command>.manifest.json`` into the
output directory. A manifest can be passed back as ``--config`` to repeat
the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baseline import ModelConfig, Protocol, evaluate_matrix
from .dpm import DpmResult, lift_report, run_dpm
from .encoder import _atomic_write, encode, export_csv, read_csv
from .miner import ConstraintSpec, MiningConfig, mine, patterns_from_json, patterns_to_json
from .seqdb import ConfigError, SequenceDatabase, attach_order_attribute, read_path, split_by_label

log = logging.getLogger("dpmine")


@dataclass
class RunConfig:
    input_path: str | None = None
    input_format: str | None = None
    mapping: dict = field(default_factory=dict)
    attach_order: bool = False
    constraints: list[dict] = field(default_factory=list)
    min_frequency: int | float = 2
    min_pattern_length: int = 2
    max_pattern_length: int | None = None
    threshold_scope: str = "class"
    encoder_mode: str = "plain"
    protocol: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    workers: int = 1
    bench: dict = field(default_factory=dict)

    def mining(self) -> MiningConfig:
        return MiningConfig(
            self.min_frequency,
            tuple(ConstraintSpec.from_dict(c) for c in self.constraints),
            self.min_pattern_length,
            self.max_pattern_length,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(**{**self.model, "seed": self.seed})

    def protocol_config(self) -> Protocol:
        return Protocol(**self.protocol)

    def validate(self) -> None:
        self.mining()
        self.model_config()
        self.protocol_config()
        if self.threshold_scope not in ("class", "full"):
            raise ConfigError(f"threshold_scope must be 'class' or 'full', got {self.threshold_scope!r}")
        if self.encoder_mode not in ("plain", "constrained"):
            raise ConfigError(f"encoder_mode must be 'plain' or 'constrained', got {self.encoder_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.input_path and Path(self.input_path).resolve() == Path(self.output_dir).resolve():
            raise ConfigError("input path and output directory must differ")

    def to_dict(self) -> dict:
        return {
            "input": {"path": self.input_path, "format": self.input_format, "mapping": self.mapping},
            "attach_order": self.attach_order,
            "constraints": [ConstraintSpec.from_dict(c).to_dict() for c in self.constraints],
            "min_frequency": self.min_frequency,
            "min_pattern_length": self.min_pattern_length,
            "max_pattern_length": self.max_pattern_length,
            "threshold_scope": self.threshold_scope,
            "encoder_mode": self.encoder_mode,
            "protocol": self.protocol,
            "model": self.model,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "workers": self.workers,
            "bench": self.bench,
        }


_KNOWN = {"input", "attach_order", "constraints", "min_frequency", "min_pattern_length",
          "max_pattern_length", "threshold_scope", "encoder_mode", "protocol", "model",
          "output_dir", "seed", "workers", "bench"}


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg}, line {e.lineno})") from None
    if "config" in doc and "command" in doc:  # a run manifest
        doc = doc["config"]
    unknown = set(doc) - _KNOWN
    if unknown:
        raise ConfigError(f"{path}: unknown config key(s) {sorted(unknown)}")
    inp = doc.get("input") or {}
    if isinstance(inp, str):
        inp = {"path": inp}
    ipath = inp.get("path")
    if ipath is not None and not Path(ipath).is_absolute():
        ipath = str((path.parent / ipath).resolve())
    out = doc.get("output_dir", "out")
    cfg = RunConfig(
        input_path=ipath,
        input_format=inp.get("format"),
        mapping=inp.get("mapping") or {},
        attach_order=bool(doc.get("attach_order", False)),
        constraints=list(doc.get("constraints", [])),
        min_frequency=doc.get("min_frequency", 2),
        min_pattern_length=doc.get("min_pattern_length", 2),
        max_pattern_length=doc.get("max_pattern_length"),
        threshold_scope=doc.get("threshold_scope", "class"),
        encoder_mode=doc.get("encoder_mode", "plain"),
        protocol=dict(doc.get("protocol", {})),
        model=dict(doc.get("model", {})),
        output_dir=str(out),
        seed=int(doc.get("seed", 0)),
        workers=int(doc.get("workers", 1)),
        bench=dict(doc.get("bench", {})),
    )
    return cfg


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    mapping = {
        "input": "input_path", "format": "input_format", "out": "output_dir",
        "workers": "workers", "seed": "seed", "min_frequency": "min_frequency",
        "min_pattern_length": "min_pattern_length", "max_pattern_length": "max_pattern_length",
        "encoder_mode": "encoder_mode", "threshold_scope": "threshold_scope",
    }
    changes = {}
    for arg, key in mapping.items():
        val = getattr(args, arg, None)
        if val is not None:
            changes[key] = str(Path(val).resolve()) if arg == "input" else val
    if getattr(args, "splits", None) is not None:
        changes["protocol"] = {**cfg.protocol, "splits": args.splits}
    return replace(cfg, **changes)


# -- shared plumbing -----------------------------------------------------------


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _load_db(cfg: RunConfig) -> SequenceDatabase:
    if not cfg.input_path:
        raise ConfigError("no input path configured")
    if not Path(cfg.input_path).exists():
        raise ConfigError(f"input file not found: {cfg.input_path}")
    db = read_path(cfg.input_path, cfg.input_format, cfg.mapping)
    if cfg.attach_order:
        db = attach_order_attribute(db)
    return db


class _Run:
    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.timings: dict[str, float] = {}
        self.counts: dict = {}
        self.outputs: list[str] = []
        self.extra_inputs: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        _atomic_write(path, text)
        self.outputs.append(name)
        return path

    def manifest(self) -> Path:
        cfg_doc = self.cfg.to_dict()
        cfg_text = json.dumps(cfg_doc, sort_keys=True)
        doc = {
            "command": self.command,
            "config": cfg_doc,
            "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
            "input_sha256": _sha256_file(self.cfg.input_path) if self.cfg.input_path
            and Path(self.cfg.input_path).exists() else None,
            "extra_inputs": self.extra_inputs,
            "seed": self.cfg.seed,
            "versions": {"dpmine": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "timings_seconds": self.timings,
            "counts": self.counts,
            "outputs": self.outputs,
        }
        path = self.out / f"{self.command}.manifest.json"
        _atomic_write(path, json.dumps(doc, indent=1) + "\n")
        return path


# -- commands ------------------------------------------------------------------


def cmd_mine(cfg: RunConfig) -> Path:
    run = _Run("mine", cfg)
    db = _load_db(cfg)
    mining = cfg.mining()
    t0 = time.perf_counter()
    found = mine(db, mining, workers=cfg.workers)
    run.timings["mine"] = time.perf_counter() - t0
    run.counts = {"sequences": db.size, "threshold": mining.resolve_threshold(db.size) if db.size else None,
                  "patterns": len(found)}
    path = run.write("patterns.json", patterns_to_json(found))
    run.manifest()
    return path


def cmd_dpm(cfg: RunConfig) -> Path:
    run = _Run("dpm", cfg)
    db = _load_db(cfg)
    mining = cfg.mining()
    t0 = time.perf_counter()
    result = run_dpm(db, mining, cfg.threshold_scope, workers=cfg.workers)
    run.timings["mine"] = time.perf_counter() - t0
    pos_db, neg_db = split_by_label(db)
    report = lift_report(result, pos_db, neg_db, mining.constraints)
    run.counts = {"pos_sequences": pos_db.size, "neg_sequences": neg_db.size, **result.sizes()}
    path = run.write("dpm.json", result.to_json())
    run.write("lift.csv", report.to_csv())
    run.write("lift.json", report.to_json())
    run.manifest()
    return path


def read_patterns(path) -> list[tuple]:
    """Patterns from either a mine output (list) or a dpm output (its union)."""
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if isinstance(doc, dict) and "union" in doc:
        return DpmResult.from_json(text).union_patterns
    if isinstance(doc, list):
        return [p.pattern for p in patterns_from_json(text)]
    raise ConfigError(f"{path}: not a pattern file (expected a pattern list or a dpm result)")


def cmd_encode(cfg: RunConfig, patterns_path) -> Path:
    run = _Run("encode", cfg)
    run.extra_inputs["patterns"] = _sha256_file(patterns_path)
    db = _load_db(cfg)
    patterns = read_patterns(patterns_path)
    constraints = cfg.mining().constraints if cfg.encoder_mode == "constrained" else None
    t0 = time.perf_counter()
    matrix = encode(db, patterns, cfg.encoder_mode, constraints, workers=cfg.workers)
    run.timings["encode"] = time.perf_counter() - t0
    path = run.out / "features.csv"
    export_csv(matrix, path)
    run.outputs += ["features.csv", "features.csv.columns.json"]
    run.counts = {"rows": matrix.shape[0], "columns": matrix.shape[1]}
    run.manifest()
    return path


def cmd_train(cfg: RunConfig, features_path) -> Path:
    run = _Run("train", cfg)
    run.extra_inputs["features"] = _sha256_file(features_path)
    matrix = read_csv(features_path)
    t0 = time.perf_counter()
    report = evaluate_matrix(matrix, cfg.model_config(), cfg.protocol_config())
    run.timings["evaluate"] = time.perf_counter() - t0
    run.counts = {"rows": report.n_rows, "features": report.n_features, "splits": len(report.splits)}
    path = run.write("eval.json", report.to_json())
    run.write("eval.txt", report.to_table())
    run.manifest()
    return path


def cmd_bench(cfg: RunConfig, bounds=None) -> Path:
    """Mine once per bound of a swept constraint; rows of (bound, seconds, patterns)."""
    run = _Run("bench", cfg)
    b = cfg.bench
    for key in ("attribute", "aggregate", "relation"):
        if key not in b:
            raise ConfigError(f"bench config needs {key!r}")
    bounds = list(bounds if bounds is not None else b.get("bounds", []))
    if not bounds:
        raise ConfigError("bench needs at least one bound")
    if any(y <= x for x, y in zip(bounds, bounds[1:])):
        raise ConfigError(f"bench bounds must be strictly increasing, got {bounds}")
    db = _load_db(cfg)
    if b.get("label") is not None:
        db = split_by_label(db)[0 if b["label"] else 1]
    base = cfg.mining()
    swept = ConstraintSpec(b["attribute"], b["aggregate"], b["relation"], bounds[0])
    fixed = tuple(c for c in base.constraints
                  if (c.attribute, c.aggregate, c.relation) != (swept.attribute, swept.aggregate, swept.relation))
    lines = ["bound,seconds,patterns"]
    counts = []
    for bound in bounds:
        c = replace(swept, bound=float(bound))
        mc = replace(base, constraints=fixed + (c,))
        t0 = time.perf_counter()
        found = mine(db, mc, workers=cfg.workers)
        dt = time.perf_counter() - t0
        counts.append(len(found))
        lines.append(f"{bound:g},{dt:.6f},{len(found)}")
        log.info("bench %s: %.3fs, %d patterns", c, dt, len(found))
    run.timings["total"] = sum(float(l.split(",")[1]) for l in lines[1:])
    run.counts = {"sequences": db.size, "bounds": len(bounds), "patterns": counts}
    path = run.write("bench.csv", "\n".join(lines) + "\n")
    run.manifest()
    return path


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpmine", description="Dichotomic constrained sequential pattern mining.")
    p.add_argument("--version", action="version", version=f"dpmine {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run config (or a manifest)")
        sp.add_argument("--out", help="output directory (output_dir)")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--input", help="input sequence file (input.path)")
        sp.add_argument("--format", choices=["jsonl", "csv"], help="input.format")
        sp.add_argument("--min-frequency", dest="min_frequency", type=_number)
        sp.add_argument("--min-pattern-length", dest="min_pattern_length", type=int)
        sp.add_argument("--max-pattern-length", dest="max_pattern_length", type=int)
        sp.add_argument("--threshold-scope", dest="threshold_scope", choices=["class", "full"])
        sp.add_argument("--encoder-mode", dest="encoder_mode", choices=["plain", "constrained"])
        sp.add_argument("--splits", type=int, help="protocol.splits")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    common(sub.add_parser("mine", help="mine frequent constrained patterns"))
    common(sub.add_parser("dpm", help="dichotomic mining with set algebra and lift report"))
    enc = common(sub.add_parser("encode", help="one-hot encode sequences over a pattern set"))
    enc.add_argument("--patterns", required=True, help="patterns.json or dpm.json")
    tr = common(sub.add_parser("train", help="evaluate the logistic baseline"))
    tr.add_argument("--features", required=True, help="feature CSV from encode")
    be = common(sub.add_parser("bench", help="runtime / pattern-count sweep over one constraint bound"))
    be.add_argument("--bounds", type=float, nargs="+", help="overrides bench.bounds")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        cfg.validate()
        if args.command == "mine":
            path = cmd_mine(cfg)
        elif args.command == "dpm":
            path = cmd_dpm(cfg)
        elif args.command == "encode":
            path = cmd_encode(cfg, args.patterns)
        elif args.command == "train":
            path = cmd_train(cfg, args.features)
        else:
            path = cmd_bench(cfg, args.bounds)
    except (ValueError, OSError, KeyError, TypeError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"dpmine {args.command}: error: {msg}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
