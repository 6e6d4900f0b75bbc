import json

import numpy as np
import pytest

from tomokit.cli import main
from tomokit.io.jsonio import read_json, write_json


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    doc = json.loads(out.out) if out.out.strip() else None
    return rc, doc, out.err


def test_unknown_flag_exits_2(capsys):
    rc = main(["phantom", "--does-not-exist"])
    captured = capsys.readouterr()
    assert rc == 2
    assert "usage" in captured.err.lower()


def test_unknown_subcommand_exits_2():
    assert main(["frobnicate"]) == 2


def test_missing_file_is_data_error(capsys):
    rc, _, err = run(capsys, "density", "eval", "--run", "missing.json")
    assert rc == 1
    assert "error" in err


def test_phantom_creates_dataset(tmp_path, capsys):
    out_dir = tmp_path / "data"
    rc, doc, _ = run(
        capsys, "--deterministic", "phantom", "--seed", "1",
        "--out", str(out_dir), "--n-exams", "8",
    )
    assert rc == 0
    assert (out_dir / "manifest.json").exists()
    assert (out_dir / "records.json").exists()
    assert doc["task"] == "phantom"
    assert doc["config"]["seed"] == 1


def test_ingest_phantom_alias(tmp_path, capsys):
    rc, doc, _ = run(
        capsys, "ingest", "phantom", "--seed", "2",
        "--out", str(tmp_path / "d"), "--n-exams", "4",
    )
    assert rc == 0
    assert doc["task"] == "phantom"


def test_config_file_supplies_defaults_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    write_json(cfg, {"phantom": {"n-exams": 5, "seed": 9}})
    out_dir = tmp_path / "out"
    rc, doc, _ = run(
        capsys, "--config", str(cfg), "phantom", "--out", str(out_dir), "--seed", "3",
    )
    assert rc == 0
    assert doc["config"]["n_exams"] == 5   # from config file
    assert doc["config"]["seed"] == 3      # flag wins


def test_full_density_pipeline(tmp_path, capsys):
    data = tmp_path / "data"
    store = tmp_path / "store"
    run_json = tmp_path / "run.json"
    assert main(["--deterministic", "phantom", "--seed", "1", "--out", str(data),
                 "--n-exams", "40"]) == 0
    capsys.readouterr()
    assert main(["--deterministic", "embed", "--manifest", str(data / "manifest.json"),
                 "--store", str(store), "--seed", "2", "--density-sep", "4.0"]) == 0
    capsys.readouterr()
    assert main(["--deterministic", "density", "train", "--store", str(store),
                 "--manifest", str(data / "manifest.json"), "--seed", "3",
                 "--epochs", "15", "--out", str(run_json)]) == 0
    capsys.readouterr()
    rc, doc, _ = run(capsys, "--deterministic", "density", "eval",
                     "--run", str(run_json), "--split", "test")
    assert rc == 0
    assert doc["results"]["accuracy"] >= 0.8
    confusion = np.array(doc["results"]["confusion"])
    assert confusion.sum() == doc["results"]["n"]


def test_risk_train_eval_cli(tmp_path, capsys):
    data = tmp_path / "data"
    store = tmp_path / "store"
    head = tmp_path / "head.json"
    assert main(["phantom", "--seed", "4", "--out", str(data), "--n-exams", "60",
                 "--event-rate", "0.3"]) == 0
    capsys.readouterr()
    assert main(["embed", "--manifest", str(data / "manifest.json"), "--store",
                 str(store), "--seed", "5", "--risk-sep", "4.0"]) == 0
    capsys.readouterr()
    assert main(["--deterministic", "risk", "train", "--store", str(store),
                 "--records", str(data / "records.json"), "--seed", "6",
                 "--epochs", "30", "--out", str(head)]) == 0
    capsys.readouterr()
    rc, doc, _ = run(capsys, "--deterministic", "risk", "eval", "--head", str(head),
                     "--split", "test", "--by-density")
    assert rc == 0
    years = doc["results"]["years"]
    assert [y["year"] for y in years] == [1, 2, 3, 4, 5]
    assert "by_density" in doc["results"]


def test_stats_compare_mcnemar_and_delong(tmp_path, capsys):
    rows_a = [{"id": f"s{i}", "label": i % 2, "pred": i % 2, "score": 0.8 if i % 2 else 0.2}
              for i in range(30)]
    rows_b = [{"id": f"s{i}", "label": i % 2,
               "pred": (i % 2) if i % 5 else 1 - (i % 2),
               "score": 0.6 if i % 2 else 0.4}
              for i in range(30)]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_json(a, {"predictions": rows_a})
    write_json(b, {"predictions": rows_b})
    rc, doc, _ = run(capsys, "stats", "compare", "--preds-a", str(a),
                     "--preds-b", str(b), "--test", "mcnemar")
    assert rc == 0
    assert doc["results"]["accuracy_a"] == 1.0
    assert 0.0 <= doc["results"]["p"] <= 1.0
    rc, doc, _ = run(capsys, "stats", "compare", "--preds-a", str(a),
                     "--preds-b", str(b), "--test", "delong")
    assert rc == 0
    assert doc["results"]["auc_a"] == 1.0


def test_stats_subgroup_cli(tmp_path, capsys):
    preds = [{"id": f"s{i}", "label": i % 4, "pred": i % 4 if i < 20 else (i + 1) % 4}
             for i in range(40)]
    demo = [{"id": f"s{i}", "age_years": 45 if i < 20 else 75, "race": "White"}
            for i in range(40)]
    p, d = tmp_path / "p.json", tmp_path / "d.json"
    write_json(p, {"predictions": preds})
    write_json(d, {"demographics": demo})
    csv_out = tmp_path / "table.csv"
    rc, doc, _ = run(capsys, "stats", "subgroup", "--preds", str(p), "--demo", str(d),
                     "--key", "age_band", "--out-csv", str(csv_out))
    assert rc == 0
    groups = {r["group"]: r for r in doc["results"]["rows"]}
    assert groups["<50"]["accuracy"] == 1.0
    assert groups["70+"]["accuracy"] == 0.0
    assert csv_out.exists()
    assert "group,n,accuracy" in csv_out.read_text().splitlines()[0]


def test_detect_eval_cli(tmp_path, capsys):
    gt = {
        "volumes": ["v1", "v2"],
        "annotations": [
            {"volume_id": "v1", "slice_index": 0, "x": 100, "y": 100, "w": 40, "h": 30,
             "malignancy": "cancer"},
        ],
    }
    preds = {
        "predictions": [
            {"volume_id": "v1", "slice_index": 0, "x": 120, "y": 100, "w": 40, "h": 30,
             "score": 0.9},
            {"volume_id": "v2", "slice_index": 1, "x": 300, "y": 300, "w": 40, "h": 30,
             "score": 0.5},
        ]
    }
    g, p = tmp_path / "gt.json", tmp_path / "p.json"
    write_json(g, gt)
    write_json(p, preds)
    csv_out = tmp_path / "froc.csv"
    rc, doc, _ = run(capsys, "detect", "eval", "--preds", str(p), "--gt", str(g),
                     "--fp", "1,2,3,4", "--out-csv", str(csv_out))
    assert rc == 0
    assert doc["results"]["sensitivities"] == [1.0, 1.0, 1.0, 1.0]
    assert doc["results"]["n_volumes"] == 2
    assert csv_out.exists()


def test_deterministic_flag_omits_timestamp(tmp_path, capsys):
    data = tmp_path / "d"
    store = tmp_path / "s"
    out = tmp_path / "run.json"
    main(["phantom", "--seed", "1", "--out", str(data), "--n-exams", "12"])
    capsys.readouterr()
    main(["embed", "--manifest", str(data / "manifest.json"), "--store", str(store),
          "--seed", "1", "--density-sep", "3.0"])
    capsys.readouterr()
    main(["--deterministic", "density", "train", "--store", str(store), "--manifest",
          str(data / "manifest.json"), "--seed", "1", "--epochs", "3",
          "--out", str(out)])
    capsys.readouterr()
    doc = read_json(out)
    assert "generated_at" not in doc
    main(["density", "train", "--store", str(store), "--manifest",
          str(data / "manifest.json"), "--seed", "1", "--epochs", "3",
          "--out", str(out)])
    capsys.readouterr()
    assert "generated_at" in read_json(out)
