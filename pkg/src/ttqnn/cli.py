"""Command-line entry point.

Every run resolves its settings as defaults < ``--config`` file < explicit
flags, writes the resolved settings to ``config.json`` in the output
directory and then writes its result files next to it.  Feeding that
``config.json`` back through ``--config`` reproduces the outputs byte for
byte.

Exit codes: 0 success, 1 verification failure, 2 configuration or budget error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import circuits, data as datamod, learn
from .simulator import init_basis_state
from .theory import bounds, densekit
from .theory.quadrature import DEFAULT_BUDGET, BudgetExceeded

CONFIG_SCHEMA = 1
OUT_ENV = "TTQNN_OUT"

DEFAULTS = {
    "lemma-check": {"seed": 0, "trials": 20, "format": "csv"},
    "verify-bounds": {
        "arch": "tt", "n": 2, "n_c": None, "L": 1, "mode": "exact", "samples": 500,
        "input": "zero", "n_inputs": 5, "budget": DEFAULT_BUDGET, "seed": 0, "format": "csv",
    },
    "barren-plateau": {
        "n_list": [4, 6, 8, 10], "depth_factor": 1, "samples": 500, "seed": 0, "format": "csv",
    },
    "train-encoder": {
        "input_vector": None, "dataset": None, "n": 4, "per_class": 5, "separation": 4.0,
        "L": 1, "iters": 100, "lr_schedule": list(learn.ENCODER_RATES), "exact_encoding": False,
        "seed": 0, "format": "csv",
    },
    "classify": {
        "dataset": "synthetic", "images": None, "labels": None, "pair": [0, 1], "side": 16,
        "arch": "tt", "match": None, "n_ry": None, "n_cnot": None, "n": 4, "n_c": 2,
        "per_class": 400, "separation": 4.0, "encoding": "exact", "L": 1,
        "shots_train": None, "shots_test": None, "iters": 100, "batch": 20,
        "lr_schedule": list(learn.CLASSIFIER_RATES), "seed": 0, "format": "csv",
    },
}


class ConfigError(ValueError):
    pass


# --- output helpers ----------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else v for k, v in _jsonable(row).items()})
    return buf.getvalue()


class Run:
    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        out.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, rows: list[dict]) -> Path:
        if self.fmt == "json":
            path = self.out / f"{name}.json"
            path.write_text(dumps(rows))
        else:
            path = self.out / f"{name}.csv"
            path.write_text(rows_to_csv(rows))
        return path

    def document(self, name: str, doc) -> Path:
        path = self.out / f"{name}.json"
        path.write_text(dumps(doc))
        return path


def _print_rows(rows: list[dict], keys=None) -> None:
    if not rows:
        return
    keys = keys or list(rows[0])
    print("  ".join(keys))
    for r in rows:
        print("  ".join(_fmt(r.get(k)) for k in keys))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# --- commands ----------------------------------------------------------------


def cmd_lemma_check(cfg: dict, run: Run) -> int:
    rows = []
    for gate in ("CNOT", "CZ"):
        for c in densekit.conjugation_cases(gate):
            rows.append({"check": f"{gate}-conjugation", "j": c.j, "k": c.k,
                         "error": c.error, "passed": c.passed})
    for c in densekit.integration_suite(cfg["seed"], cfg["trials"]):
        rows.append({"check": "integration-W", "j": c.j, "k": c.k, "error": c.w_error, "passed": c.passed})
        rows.append({"check": "integration-G", "j": c.j, "k": c.k, "error": c.g_error, "passed": c.passed})
    run.table("lemma_cases", rows)
    summary = {}
    for r in rows:
        s = summary.setdefault(r["check"], {"check": r["check"], "cases": 0, "failed": 0, "max_error": 0.0})
        s["cases"] += 1
        s["failed"] += not r["passed"]
        s["max_error"] = max(s["max_error"], r["error"])
    _print_rows(list(summary.values()))
    ok = all(r["passed"] for r in rows)
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _inputs(cfg: dict) -> list:
    n, spec = cfg["n"], cfg["input"]
    if spec == "zero":
        return [init_basis_state(n, "0" * n)]
    if spec == "random":
        rng = np.random.default_rng(cfg["seed"])
        return [init_basis_state(n, "0" * n)] + [
            bounds.random_real_state(n, rng) for _ in range(cfg["n_inputs"] - 1)
        ]
    if set(spec) <= {"0", "1"}:
        return [init_basis_state(n, spec)]
    raise ConfigError(f"--input must be zero, random or a bitstring, got {spec!r}")


def cmd_verify_bounds(cfg: dict, run: Run) -> int:
    arch = cfg["arch"].lower()
    if arch == "encoder":
        reps = [bounds.verify_encoder_alpha_bound(cfg["n"], cfg["L"], cfg["mode"], cfg["samples"],
                                                  cfg["seed"], cfg["budget"])]
    else:
        if arch == "sc" and cfg["n_c"] is None:
            raise ConfigError("--arch sc needs --n-c")
        reps = [
            bounds.verify_gradient_norm_bound(arch, cfg["n"], s, cfg["mode"], cfg["n_c"],
                                              cfg["samples"], cfg["seed"], cfg["budget"])
            for s in _inputs(cfg)
        ]
    rows = [r.to_row() for r in reps]
    run.table("bounds", rows)
    _print_rows(rows, ["arch", "n", "mode", "lower", "mean", "stderr", "upper", "satisfied"])
    return 0 if all(r.satisfied for r in reps) else 1


def cmd_barren_plateau(cfg: dict, run: Run) -> int:
    rows = bounds.barren_plateau_contrast(cfg["n_list"], cfg["depth_factor"], cfg["samples"], cfg["seed"])
    run.table("barren_plateau", rows)
    _print_rows(rows)
    tree_ok = all(r["mean"] >= r["lower"] - 3 * r["stderr"] for r in rows if r["lower"] is not None)
    rand = [r["mean"] for r in rows if r["arch"] == "RANDOM"]
    decreasing = all(a > b for a, b in zip(rand, rand[1:]))
    return 0 if tree_ok and decreasing else 1


def _parse_vector(text) -> np.ndarray:
    if isinstance(text, str):
        text = [float(t) for t in text.split(",") if t.strip()]
    return np.asarray(text, dtype=float)


def cmd_train_encoder(cfg: dict, run: Run) -> int:
    if cfg["input_vector"] is not None:
        vectors = _parse_vector(cfg["input_vector"])[None, :]
        labels = np.zeros(1, dtype=int)
    elif cfg["dataset"] == "synthetic":
        ds = datamod.generate_synthetic(cfg["n"], cfg["per_class"], cfg["separation"], cfg["seed"])
        vectors, labels = ds.vectors, ds.labels
    else:
        raise ConfigError("give --input-vector or --dataset synthetic")
    ds = datamod.RawDataset(vectors, labels, {})
    config = learn.TrainConfig(iterations=cfg["iters"], batch_size=1,
                               learning_rates=tuple(cfg["lr_schedule"]), seed=cfg["seed"])
    per_vector, hist_rows, circuit = [], [], None
    if cfg["exact_encoding"]:
        states = learn.encode_dataset(ds, exact=True)
    else:
        res = learn.train_encoders(ds.vectors, cfg["L"], config)
        states = learn.states_from_encoders(res, ds.labels, cfg["L"])
        circuit = res.circuit.to_dict()
        for i in range(len(ds)):
            for t, v in enumerate(res.history[i]):
                hist_rows.append({"vector": i, "iteration": t, "f_input": v})
            hist_rows.append({"vector": i, "iteration": cfg["iters"], "f_input": res.final_objective[i]})
    for i in range(len(ds)):
        per_vector.append({
            "vector": i,
            "label": int(states.labels[i]),
            "fidelity": float(states.fidelity[i]),
            "alpha": float(states.alpha[i]),
        })
    run.table("encoder_summary", per_vector)
    if hist_rows:
        run.table("encoder_history", hist_rows)
    run.document("encoder", {
        "mode": states.mode,
        "L": cfg["L"],
        "betas": None if states.betas is None else states.betas,
        "circuit": circuit,
        "states": states.states,
    })
    _print_rows(per_vector)
    return 0


def _classify_data(cfg: dict):
    if cfg["dataset"] == "synthetic":
        ds = datamod.generate_synthetic(cfg["n"], 2 * cfg["per_class"], cfg["separation"], cfg["seed"])
        return datamod.train_test_split(ds, cfg["per_class"])
    if cfg["dataset"] == "idx":
        if not (cfg["images"] and cfg["labels"]):
            raise ConfigError("--dataset idx needs --images and --labels")
        images, labels = datamod.parse_idx(cfg["images"], cfg["labels"])
        ds = datamod.downsample_and_filter(images, labels, tuple(cfg["pair"]), cfg["side"])
        rng = np.random.default_rng(cfg["seed"])
        ds = ds.subset(rng.permutation(len(ds)))
        per = min(cfg["per_class"], *(int(np.sum(ds.labels == c)) // 2 for c in (0, 1)))
        return datamod.train_test_split(ds, per)
    raise ConfigError(f"unknown dataset {cfg['dataset']!r}")


def _classify_circuit(cfg: dict, n: int) -> circuits.CircuitSpec:
    arch = cfg["arch"].lower()
    if arch != "random":
        return circuits.build_architecture(arch, n, n_c=cfg["n_c"])
    n_ry, n_cnot = cfg["n_ry"], cfg["n_cnot"]
    if cfg["match"]:
        ref = circuits.build_architecture(cfg["match"], n, n_c=cfg["n_c"])
        n_ry, n_cnot = ref.count("RY"), ref.count("CNOT")
    if n_ry is None or n_cnot is None:
        raise ConfigError("--arch random needs --match or --n-ry and --n-cnot")
    return circuits.build_random(n, n_ry, n_cnot, cfg["seed"])


def cmd_classify(cfg: dict, run: Run) -> int:
    train_raw, test_raw = _classify_data(cfg)
    enc = learn.encoder_config(seed=cfg["seed"])
    exact = cfg["encoding"] == "exact"
    train = learn.encode_dataset(train_raw, cfg["L"], enc, exact=exact)
    test = learn.encode_dataset(test_raw, cfg["L"], enc, exact=exact)
    circuit = _classify_circuit(cfg, train.n_qubits)
    config = learn.TrainConfig(
        iterations=cfg["iters"], batch_size=cfg["batch"], learning_rates=tuple(cfg["lr_schedule"]),
        shots_train=cfg["shots_train"], shots_test=cfg["shots_test"], seed=cfg["seed"],
    )
    model = learn.train_classifier(train, circuit, config, monitor=test)
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 1]))
    train_m = learn.evaluate(train, model, cfg["shots_test"], rng)
    test_m = learn.evaluate(test, model, cfg["shots_test"], rng)
    pair = "-".join(map(str, cfg["pair"])) if cfg["dataset"] == "idx" else "synthetic"
    metrics = [{
        "pair": pair, "arch": circuit.arch, "n": circuit.n_qubits,
        "train_acc": train_m.accuracy, "test_acc": test_m.accuracy,
        "f1_0": test_m.f1_class0, "f1_1": test_m.f1_class1,
        "f1_undefined": any(test_m.f1_undefined),
    }]
    history = [
        {"iteration": t, "loss": model.loss_history[t], "grad_norm": model.grad_norm_history[t],
         "alpha": model.alpha_history[t], "test_error": model.test_error_history[t]}
        for t in range(config.iterations)
    ]
    run.table("metrics", metrics)
    run.table("history", history)
    run.document("model", {**model.to_dict(), "test_metrics": test_m.to_dict(),
                           "train_metrics": train_m.to_dict()})
    _print_rows(metrics)
    return 0


COMMANDS = {
    "lemma-check": cmd_lemma_check,
    "verify-bounds": cmd_verify_bounds,
    "barren-plateau": cmd_barren_plateau,
    "train-encoder": cmd_train_encoder,
    "classify": cmd_classify,
}


# --- argument handling -------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _optional_int(text: str):
    return None if text.lower() in ("none", "exact") else int(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON settings file; explicit flags take precedence")
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./ttqnn-runs/<command>)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--json", action="store_const", const="json", dest="format")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="ttqnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, argument_default=argparse.SUPPRESS)

    p = add("lemma-check", "check the CNOT/CZ conjugation rules and single-angle integrals")
    p.add_argument("--trials", type=int)

    p = add("verify-bounds", "compare E||grad f||^2 (or encoder alpha) with its bounds")
    p.add_argument("--arch", choices=("tt", "sc", "dtt", "encoder"))
    p.add_argument("--n", type=int)
    p.add_argument("--n-c", dest="n_c", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--mode", choices=("exact", "mc", "grid"))
    p.add_argument("--samples", type=int)
    p.add_argument("--input", help="zero, random, or a bitstring")
    p.add_argument("--n-inputs", dest="n_inputs", type=int)
    p.add_argument("--budget", type=int)

    p = add("barren-plateau", "gradient norms of tree circuits vs deep random circuits")
    p.add_argument("--n-list", dest="n_list", type=_int_list)
    p.add_argument("--depth-factor", dest="depth_factor", type=int)
    p.add_argument("--samples", type=int)

    p = add("train-encoder", "train alternating-layer encoders")
    p.add_argument("--input-vector", dest="input_vector", help="comma-separated amplitudes")
    p.add_argument("--dataset", choices=("synthetic",))
    p.add_argument("--n", type=int)
    p.add_argument("--per-class", dest="per_class", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr-schedule", dest="lr_schedule", type=_float_list)
    p.add_argument("--exact-encoding", dest="exact_encoding", action="store_true")

    p = add("classify", "train and evaluate a binary classifier")
    p.add_argument("--dataset", choices=("synthetic", "idx"))
    p.add_argument("--images")
    p.add_argument("--labels")
    p.add_argument("--pair", type=_int_list)
    p.add_argument("--side", type=int)
    p.add_argument("--arch", choices=("tt", "sc", "dtt", "random"))
    p.add_argument("--match", choices=("tt", "sc", "dtt"))
    p.add_argument("--n-ry", dest="n_ry", type=int)
    p.add_argument("--n-cnot", dest="n_cnot", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--n-c", dest="n_c", type=int)
    p.add_argument("--per-class", dest="per_class", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--encoding", choices=("exact", "trained"))
    p.add_argument("--L", type=int)
    p.add_argument("--shots-train", dest="shots_train", type=_optional_int)
    p.add_argument("--shots-test", dest="shots_test", type=_optional_int)
    p.add_argument("--iters", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr-schedule", dest="lr_schedule", type=_float_list)
    return parser


def resolve(command: str, flags: dict) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    settings = dict(DEFAULTS[command])
    path = flags.pop("config", None)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if doc.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {doc.get('schema')}")
        if doc.get("command", command) != command:
            raise ConfigError(f"config is for {doc['command']!r}, not {command!r}")
        file_settings = doc.get("settings", doc)
        unknown = set(file_settings) - set(settings) - {"schema", "command"}
        if unknown:
            raise ConfigError(f"unknown settings in config: {sorted(unknown)}")
        settings.update({k: v for k, v in file_settings.items() if k in settings})
    flags.pop("out", None)
    settings.update(flags)
    if settings["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return settings


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    out = args.get("out") or os.environ.get(OUT_ENV) or os.path.join("ttqnn-runs", command)
    try:
        settings = resolve(command, args)
        run = Run(Path(out), settings["format"])
        run.document("config", {"schema": CONFIG_SCHEMA, "command": command, "settings": settings})
        return COMMANDS[command](settings, run)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
