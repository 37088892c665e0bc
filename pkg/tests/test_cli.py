import csv
import json

import numpy as np
import pytest

from ttqnn.cli import main
from ttqnn.data import write_idx


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_lemma_check(tmp_path, capsys):
    assert main(["lemma-check", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "lemma_cases.csv")
    assert len(rows) == 16 + 16 + 2 * 240
    assert "PASS" in capsys.readouterr().out


def test_lemma_check_json_and_seed(tmp_path):
    assert main(["lemma-check", "--json", "--seed", "5", "--out", str(tmp_path)]) == 0
    cases = json.loads((tmp_path / "lemma_cases.json").read_text())
    assert all(c["passed"] for c in cases)


def test_verify_bounds_tt2(tmp_path):
    assert main(["verify-bounds", "--arch", "tt", "--n", "2", "--mode", "exact", "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "bounds.csv")
    assert float(row["lower"]) == 0.5 and row["satisfied"] == "True"


def test_verify_bounds_budget_exit_code(tmp_path, capsys):
    code = main(["verify-bounds", "--arch", "tt", "--n", "8", "--mode", "exact", "--out", str(tmp_path)])
    assert code == 2
    assert "Monte Carlo" in capsys.readouterr().err


def test_verify_bounds_sc_requires_nc(tmp_path):
    assert main(["verify-bounds", "--arch", "sc", "--n", "4", "--out", str(tmp_path)]) == 2


def test_verify_bounds_encoder(tmp_path):
    assert main(["verify-bounds", "--arch", "encoder", "--n", "4", "--L", "1", "--mode", "mc",
                 "--samples", "300", "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "bounds.csv")
    assert float(row["lower"]) == 0.25


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"arch": "sc", "n": 3, "n_c": 2}))
    out = tmp_path / "run"
    assert main(["verify-bounds", "--config", str(cfg), "--n", "4", "--out", str(out)]) == 0
    snap = json.loads((out / "config.json").read_text())
    assert snap["settings"]["n"] == 4 and snap["settings"]["arch"] == "sc"
    assert snap["schema"] == 1 and "seed" in snap["settings"]


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["lemma-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TTQNN_OUT", str(tmp_path / "envout"))
    assert main(["lemma-check", "--trials", "1"]) == 0
    assert (tmp_path / "envout" / "lemma_cases.csv").exists()


def test_train_encoder(tmp_path):
    vec = ",".join(["1"] + ["0"] * 15)
    assert main(["train-encoder", "--input-vector", vec, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "encoder_summary.csv")
    assert float(row["fidelity"]) >= 0.99
    doc = json.loads((tmp_path / "encoder.json").read_text())
    from ttqnn.circuits import CircuitSpec
    from ttqnn.learn import prepare_states

    u = CircuitSpec.from_dict(doc["circuit"])
    states = prepare_states(u, np.array(doc["betas"]))
    assert np.allclose(states, doc["states"], atol=1e-15)


def test_train_encoder_exact(tmp_path):
    assert main(["train-encoder", "--input-vector", "3,4", "--exact-encoding", "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "encoder_summary.csv")
    assert float(row["fidelity"]) == 1.0


def test_classify_random_match(tmp_path):
    assert main(["classify", "--arch", "random", "--match", "tt", "--per-class", "40",
                 "--iters", "8", "--out", str(tmp_path)]) == 0
    model = json.loads((tmp_path / "model.json").read_text())
    kinds = [g["kind"] for g in model["circuit"]["gates"]]
    assert kinds.count("RY") == 7 and kinds.count("CNOT") == 3
    hist = read_csv(tmp_path / "history.csv")
    assert len(hist) == 8 and set(hist[0]) == {"iteration", "loss", "grad_norm", "alpha", "test_error"}
    (metrics,) = read_csv(tmp_path / "metrics.csv")
    assert set(metrics) >= {"pair", "arch", "n", "train_acc", "test_acc", "f1_0", "f1_1"}


def test_classify_idx(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.tile([0, 1, 2], 20).astype(np.uint8)
    images = np.zeros((60, 28, 28), np.uint8)
    images[labels == 0, :14] = rng.integers(50, 255, (20, 14, 28))
    images[labels == 1, 14:] = rng.integers(50, 255, (20, 14, 28))
    images[labels == 2] = 5
    write_idx(images, labels, tmp_path / "img", tmp_path / "lab")
    out = tmp_path / "out"
    assert main(["classify", "--dataset", "idx", "--images", str(tmp_path / "img"),
                 "--labels", str(tmp_path / "lab"), "--pair", "0,1", "--side", "4",
                 "--iters", "30", "--batch", "5", "--out", str(out)]) == 0
    (metrics,) = read_csv(out / "metrics.csv")
    assert metrics["pair"] == "0-1" and float(metrics["test_acc"]) >= 0.9


def test_classify_idx_missing_paths(tmp_path):
    assert main(["classify", "--dataset", "idx", "--out", str(tmp_path)]) == 2


def test_barren_plateau_cli(tmp_path):
    assert main(["barren-plateau", "--n-list", "2,4", "--samples", "40", "--out", str(tmp_path)]) in (0, 1)
    assert len(read_csv(tmp_path / "barren_plateau.csv")) == 4


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["verify-bounds", "--arch", "mps"])
    assert err.value.code == 2
