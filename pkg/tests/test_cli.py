import csv
import json

import pytest

from dpmine.cli import load_config, main
from dpmine.dpm import DpmResult
from dpmine.miner import patterns_from_json
from dpmine.seqdb import write_jsonl
from dpmine.synthetic import clickstream_database, planted_database


def run(*argv):
    return main([str(a) for a in argv])


def test_mine_table1(configs_dir, tmp_path, capsys):
    assert run("mine", "--config", configs_dir / "table1_mine.json", "--out", tmp_path) == 0
    found = patterns_from_json((tmp_path / "patterns.json").read_text())
    assert [(m.pattern, m.support) for m in found] == [(("A", "D"), 2), (("B", "A"), 2), (("C", "A"), 2)]
    man = json.loads((tmp_path / "mine.manifest.json").read_text())
    assert man["counts"]["patterns"] == 3 and man["seed"] == 0
    assert len(man["input_sha256"]) == 64 and "numpy" in man["versions"]


def test_bad_fraction_exits_nonzero(configs_dir, tmp_path, capsys):
    code = run("mine", "--config", configs_dir / "table1_mine.json", "--out", tmp_path, "--min-frequency", "1.01")
    assert code != 0
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "min_frequency" in err


def test_mine_deterministic_and_worker_independent(configs_dir, tmp_path):
    db = planted_database(n=200, seed=3)
    data = tmp_path / "db.jsonl"
    write_jsonl(db, data)
    outs = []
    for k, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"o{k}"
        assert run("mine", "--config", configs_dir / "table1_mine.json", "--input", data,
                   "--out", out, "--workers", workers, "--min-frequency", "0.3") == 0
        outs.append((out / "patterns.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert len(json.loads(outs[0])) > 0


def test_rerun_from_manifest(configs_dir, tmp_path):
    a = tmp_path / "a"
    assert run("dpm", "--config", configs_dir / "table1_dpm.json", "--out", a) == 0
    manifest = a / "dpm.manifest.json"
    b = tmp_path / "b"
    assert run("dpm", "--config", manifest, "--out", b) == 0
    for name in ("dpm.json", "lift.csv", "lift.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dpm_table1(configs_dir, tmp_path):
    assert run("dpm", "--config", configs_dir / "table1_dpm.json", "--out", tmp_path) == 0
    res = DpmResult.from_json((tmp_path / "dpm.json").read_text())
    s = res.sizes()
    assert s["pos_unique"] + s["neg_unique"] + s["shared"] == s["union"]
    rows = list(csv.reader((tmp_path / "lift.csv").open()))
    assert rows[0] == ["pattern", "pos_rate", "neg_rate", "diff", "ratio"]
    assert len(rows) == s["union"] + 1


def test_dpm_unlabeled_names_id(configs_dir, tmp_path, capsys):
    code = run("dpm", "--config", configs_dir / "table1_mine.json", "--out", tmp_path)
    assert code != 0
    err = capsys.readouterr().err
    assert "unlabeled" in err and ": 1," in err


def test_encode_and_train(configs_dir, tmp_path):
    db = planted_database(n=400, seed=1)
    data = tmp_path / "db.jsonl"
    write_jsonl(db, data)
    cfg = {
        "input": {"path": str(data)},
        "constraints": [{"attribute": "time", "aggregate": "average", "relation": ">=", "bound": 20}],
        "min_frequency": 0.3, "max_pattern_length": 4,
        "protocol": {"splits": 3}, "model": {"epochs": 100},
        "output_dir": str(tmp_path / "out"), "seed": 1,
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    assert run("dpm", "--config", cfg_path) == 0
    out = tmp_path / "out"
    assert run("encode", "--config", cfg_path, "--patterns", out / "dpm.json") == 0
    union = DpmResult.from_json((out / "dpm.json").read_text()).union
    header = (out / "features.csv").read_text().splitlines()[0].split(",")
    assert len(header) == len(union) + 2 and header[-1] == "label"
    assert run("train", "--config", cfg_path, "--features", out / "features.csv") == 0
    rep = json.loads((out / "eval.json").read_text())
    assert len(rep["splits"]) == 3 and rep["n_features"] == len(union)
    assert "AUC(%)" in (out / "eval.txt").read_text()
    first = (out / "eval.json").read_bytes()
    assert run("train", "--config", cfg_path, "--features", out / "features.csv") == 0
    assert (out / "eval.json").read_bytes() == first
    # constrained encoding from a plain pattern list
    assert run("mine", "--config", cfg_path) == 0
    assert run("encode", "--config", cfg_path, "--patterns", out / "patterns.json",
               "--encoder-mode", "constrained") == 0


def _bench_config(tmp_path, n=300, label=None):
    db = clickstream_database(n=n, length_range=(5, 12), seed=2)
    data = tmp_path / "c.jsonl"
    write_jsonl(db, data)
    cfg = {
        "input": {"path": str(data)},
        "constraints": [{"attribute": "order", "aggregate": "span", "relation": "<=", "bound": 10}],
        "min_frequency": 0.05, "max_pattern_length": 4,
        "output_dir": str(tmp_path / "bench"),
        "bench": {"attribute": "time", "aggregate": "average", "relation": ">=",
                  "bounds": [10, 20, 30, 40], "label": label},
    }
    p = tmp_path / "bench.json"
    p.write_text(json.dumps(cfg))
    return p


def test_bench_counts_non_increasing(tmp_path):
    p = _bench_config(tmp_path, label=True)
    assert run("bench", "--config", p) == 0
    rows = list(csv.DictReader((tmp_path / "bench" / "bench.csv").open()))
    assert [float(r["bound"]) for r in rows] == [10, 20, 30, 40]
    counts = [int(r["patterns"]) for r in rows]
    assert counts[0] > 0
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_bench_single_bound(tmp_path):
    p = _bench_config(tmp_path, n=50)
    assert run("bench", "--config", p, "--bounds", "25") == 0
    assert len((tmp_path / "bench" / "bench.csv").read_text().splitlines()) == 2


def test_bench_rejects_unsorted(tmp_path):
    p = _bench_config(tmp_path, n=20)
    assert run("bench", "--config", p, "--bounds", "30", "20") != 0


def test_config_errors(tmp_path, configs_dir):
    bad = tmp_path / "bad.json"
    bad.write_text('{"min_frequency": 2, "colour": "red"}')
    assert run("mine", "--config", bad) != 0
    bad.write_text("{not json")
    assert run("mine", "--config", bad) != 0
    missing = tmp_path / "m.json"
    missing.write_text(json.dumps({"input": "nope.jsonl", "output_dir": str(tmp_path / "o")}))
    assert run("mine", "--config", missing) != 0


def test_shipped_configs_parse(configs_dir):
    for name in ("table1_mine.json", "table1_dpm.json", "clickstream.json", "clickstream_bench.json"):
        cfg = load_config(configs_dir / name)
        cfg.validate()
    full = load_config(configs_dir / "clickstream.json").mining()
    assert full.min_frequency == 0.3
    assert {(c.attribute, c.aggregate, c.relation, c.bound) for c in full.constraints} == {
        ("order", "span", "<=", 10.0), ("time", "average", ">=", 20.0)}
    assert load_config(configs_dir / "clickstream_bench.json").min_frequency == 2
