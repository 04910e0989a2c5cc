import csv
import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from gpmfs.cli import main
from gpmfs.dataset import to_arff, to_csv

from conftest import make_synthetic

jsonschema = pytest.importorskip("jsonschema")


def schema(name):
    return json.loads(resources.files("gpmfs").joinpath("schemas", name).read_text())


@pytest.fixture
def data(tmp_path):
    ds = make_synthetic(n=90, F=15, L=3, seed=4)
    (tmp_path / "d.arff").write_text(to_arff(ds))
    (tmp_path / "d.xml").write_text(
        "<labels>" + "".join(f'<label name="{n}"/>' for n in ds.label_names) + "</labels>")
    (tmp_path / "d.csv").write_text(to_csv(ds))
    return tmp_path


def arff_args(d):
    return ["--dataset", str(d / "d.arff"), "--xml", str(d / "d.xml")]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_select(data):
    out = data / "sel.json"
    assert main(["select", *arff_args(data), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, schema("selection.schema.json"))
    assert doc["schema_version"] == "1.0" and doc["kind"] == "selection"
    assert doc["summary"]["global_size"] == 3  # round(0.2 * 15)
    assert [g["name"] for g in doc["global"]] == [f"feature_{g['index']}" for g in doc["global"]]
    assert len(doc["objective_trace"]) <= 20
    assert doc["config"]["params"]["alpha"] == 1.0


def test_select_q_one(data):
    out = data / "sel.json"
    assert main(["select", *arff_args(data), "--q", "1.0", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert all(p["features"] == [] for p in doc["personalized"])
    assert doc["summary"]["mean_personalized"] == 0


def test_evaluate_and_determinism(data):
    a, b = data / "a.json", data / "b.json"
    for path in (a, b):
        assert main(["evaluate", "--format", "csv", "--dataset", str(data / "d.csv"),
                     "--label-count", "3", "--folds", "2", "--seed", "7", "--out", str(path)]) == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    jsonschema.validate(da, schema("cv_report.schema.json"))
    assert len(da["per_fold"]) == 2
    da.pop("created"), db.pop("created")
    da["config"].pop("dataset"), db["config"].pop("dataset")
    assert da == db
    rows = read_csv(a.with_suffix(".csv"))
    assert rows[-1][0] == "mean" and len(rows) == 4


def test_sweep_q(data):
    out = data / "sweep.csv"
    assert main(["sweep-q", *arff_args(data), "--folds", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0][:2] == ["q", "mean_personalized"]
    pf = [float(r[1]) for r in rows[1:]]
    assert [float(r[0]) for r in rows[1:]] == [0, 0.25, 0.5, 0.75, 1.0]
    assert all(b <= a for a, b in zip(pf, pf[1:])) and pf[-1] == 0
    assert main(["sweep-q", *arff_args(data), "--folds", "3", "--q-values", "0.3",
                 "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2


def test_sensitivity_grid(data):
    out = data / "sens.csv"
    assert main(["sensitivity", *arff_args(data), "--param", "lambda", "--folds", "2",
                 "--max-iter", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 71
    assert {r[0] for r in rows[1:]} == {"lambda"}
    assert all(0 <= float(r[3]) <= 1 for r in rows[1:])


def test_sensitivity_negative_value(data):
    assert main(["sensitivity", *arff_args(data), "--param", "beta", "--values", "1", "-0.5",
                 "--out", str(data / "x.csv")]) == 2


def test_trace(data):
    out = data / "trace.csv"
    dump = data / "structs"
    assert main(["trace", *arff_args(data), "--tol", "0", "--dump-structures", str(dump),
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["iteration", "objective"] and len(rows) == 21
    vals = [float(r[1]) for r in rows[1:]]
    assert all(b <= a * (1 + 1e-8) for a, b in zip(vals, vals[1:]))
    P = np.loadtxt(dump / "P.csv", delimiter=",")
    L = np.loadtxt(dump / "L.csv", delimiter=",")
    assert P.shape == (15, 15) and L.shape == (90, 90)
    assert main(["trace", *arff_args(data), "--tol", "1e-1", "--out", str(out)]) == 0
    assert len(read_csv(out)) <= 21


def test_stats(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["dataset," + ",".join(f"m{j}" for j in range(7))]
    lines += [f"d{i}," + ",".join(str(v) for v in rng.uniform(size=7)) for i in range(10)]
    (tmp_path / "s.csv").write_text("\n".join(lines) + "\n")
    out = tmp_path / "stats.json"
    assert main(["stats", "--scores", str(tmp_path / "s.csv"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, schema("stats.schema.json"))
    assert abs(doc["cd"] - 2.3128) <= 5e-5
    assert doc["n_methods"] == 7 and doc["n_datasets"] == 10


def test_stats_identical_columns(tmp_path):
    (tmp_path / "s.csv").write_text("dataset,a,b,c\nx,0.5,0.5,0.5\ny,0.2,0.2,0.2\n")
    out = tmp_path / "stats.json"
    assert main(["stats", "--scores", str(tmp_path / "s.csv"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["f_f"] == 0 and not doc["reject_null"]
    assert not any(doc["significant_vs_control"].values())


def test_stats_malformed(tmp_path):
    (tmp_path / "s.csv").write_text("dataset,a,b\nx,0.5\ny,0.2,0.1\n")
    assert main(["stats", "--scores", str(tmp_path / "s.csv"), "--out", str(tmp_path / "o")]) == 2


def test_exit_codes(tmp_path, data):
    assert main(["select", "--dataset", str(tmp_path / "nope.arff"), "--xml", str(data / "d.xml"),
                 "--out", str(tmp_path / "o.json")]) == 3
    (tmp_path / "bad.csv").write_text("1,2,1\n3,4\n")
    assert main(["evaluate", "--format", "csv", "--dataset", str(tmp_path / "bad.csv"),
                 "--label-count", "1", "--out", str(tmp_path / "o.json")]) == 2
    assert main(["select", "--dataset", str(data / "d.arff"), "--out", str(tmp_path / "o.json")]) == 2
    assert main(["select", *arff_args(data), "--p", "3", "--out", str(tmp_path / "o.json")]) == 2


def test_config_precedence(data):
    cfg = data / "cfg.json"
    cfg.write_text(json.dumps({"dataset": str(data / "d.arff"), "xml": str(data / "d.xml"),
                               "lambda": 0.25, "q": 0.7, "max-iter": 4}))
    out = data / "sel.json"
    assert main(["select", "--config", str(cfg), "--q", "0.3", "--out", str(out)]) == 0
    params = json.loads(out.read_text())["config"]["params"]
    assert params["lam"] == 0.25 and params["q"] == 0.3 and params["max_iter"] == 4
    assert params["beta"] == 1.0


def test_output_dir_env(data, monkeypatch):
    monkeypatch.setenv("GPMFS_OUTPUT_DIR", str(data / "outdir"))
    assert main(["select", *arff_args(data), "--max-iter", "2"]) == 0
    assert (data / "outdir" / "selection.json").is_file()


def test_module_entry_point(tmp_path):
    (tmp_path / "s.csv").write_text("dataset,a,b\nx,1,2\ny,1,3\n")
    r = subprocess.run([sys.executable, "-m", "gpmfs", "stats", "--scores", str(tmp_path / "s.csv"),
                        "--out", str(tmp_path / "o.json")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "o.json").read_text())["kind"] == "stats"
