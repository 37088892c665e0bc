"""Encoder training, classifier training, prediction and metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .circuits import CircuitSpec, build_alternating_w, build_encoder_u
from .data import RawDataset
from .gradients import Objective, classifier_loss_terms, shift_gradients
from .simulator import StateVector, run_gates_batch
from .theory.bounds import alpha_batch

CLASSIFIER_RATES = (1.00, 0.75, 0.50, 0.25)
ENCODER_RATES = (0.100, 0.075, 0.050, 0.025)


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings.  The rate list is spread over equal segments of ``iterations``."""

    iterations: int = 100
    batch_size: int = 20
    learning_rates: tuple[float, ...] = CLASSIFIER_RATES
    bias_learning_rates: tuple[float, ...] | None = None
    shots_train: int | None = None
    shots_test: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "learning_rates", tuple(float(r) for r in self.learning_rates))
        if self.bias_learning_rates is not None:
            object.__setattr__(self, "bias_learning_rates", tuple(float(r) for r in self.bias_learning_rates))
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for rates in (self.learning_rates, self.bias_learning_rates or (1.0,)):
            if not rates or min(rates) <= 0:
                raise ValueError("learning rates must be positive")
        for shots in (self.shots_train, self.shots_test):
            if shots is not None and shots < 1:
                raise ValueError("shot counts must be >= 1")

    @staticmethod
    def _at(rates, t: int, total: int) -> float:
        return rates[min(t * len(rates) // max(total, 1), len(rates) - 1)]

    def rate(self, t: int) -> float:
        return self._at(self.learning_rates, t, self.iterations)

    def bias_rate(self, t: int) -> float:
        return self._at(self.bias_learning_rates or self.learning_rates, t, self.iterations)

    def schedule(self) -> list[tuple[int, int, float]]:
        """``(start, stop, rate)`` segments covering ``[0, iterations)``."""
        k, t = len(self.learning_rates), self.iterations
        bounds = [-(-i * t // k) for i in range(k + 1)]
        return [(bounds[i], bounds[i + 1], self.learning_rates[i]) for i in range(k) if bounds[i] < bounds[i + 1]]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["learning_rates"] = list(self.learning_rates)
        if self.bias_learning_rates is not None:
            d["bias_learning_rates"] = list(self.bias_learning_rates)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["learning_rates"] = tuple(d.get("learning_rates", CLASSIFIER_RATES))
        if d.get("bias_learning_rates") is not None:
            d["bias_learning_rates"] = tuple(d["bias_learning_rates"])
        return cls(**d)


def encoder_config(iterations: int = 100, seed: int = 0) -> TrainConfig:
    return TrainConfig(iterations=iterations, batch_size=1, learning_rates=ENCODER_RATES, seed=seed)


# --- encoder ---------------------------------------------------------------


@dataclass
class EncoderResult:
    betas: np.ndarray  # (B, P)
    history: np.ndarray  # (B, T): f_input at each iterate before its update
    final_objective: np.ndarray  # (B,)
    fidelity: np.ndarray  # (B,)
    states: np.ndarray  # (B, D): U(beta*)|0...0>
    circuit: CircuitSpec = field(repr=False)


def _unit_rows(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"vector at index {zero[0]} has zero norm")
    return x / norms[:, None]


def prepare_states(u: CircuitSpec, betas: np.ndarray) -> np.ndarray:
    zero = np.zeros((betas.shape[0], 2**u.n_qubits))
    zero[:, 0] = 1.0
    return run_gates_batch(zero, u.gates, betas)


def train_encoders(vectors, L: int, config: TrainConfig | None = None) -> EncoderResult:
    """Gradient descent on f_input = mean_i <Z_i> of W(beta)|x>, one beta per row.

    All rows share the schedule, so they are advanced in lockstep; each row's
    trajectory is the same as training it alone with its own initial beta.
    """
    config = config or encoder_config()
    x = _unit_rows(vectors)
    n = x.shape[1].bit_length() - 1
    w = build_alternating_w(n, L)
    u = build_encoder_u(w)
    obj = Objective.mean_z(w)
    rng = np.random.default_rng(config.seed)
    betas = rng.uniform(0.0, 2 * np.pi, size=(x.shape[0], w.n_params))
    history = np.zeros((x.shape[0], config.iterations))
    for t in range(config.iterations):
        grad_f, f = shift_gradients(obj, betas, x, with_values=True)
        history[:, t] = 2 * f - 1
        betas = betas - config.rate(t) * 2 * grad_f  # d(2f - 1) = 2 df
    final = 2 * obj.evaluate(run_gates_batch(x, w.gates, betas)) - 1
    states = prepare_states(u, betas)
    fidelity = np.abs(np.einsum("bi,bi->b", x, states))
    return EncoderResult(betas, history, final, fidelity, states, u)


def train_encoder(x_in, L: int, config: TrainConfig | None = None):
    """Single-vector encoder training; returns ``(beta*, f_input history, EncoderResult)``."""
    res = train_encoders(np.asarray(x_in, dtype=float)[None, :], L, config)
    return res.betas[0], res.history[0], res


@dataclass
class LabeledStateSet:
    states: np.ndarray  # (N, D)
    labels: np.ndarray  # (N,)
    fidelity: np.ndarray
    alpha: np.ndarray
    betas: np.ndarray | None = None
    mode: str = "exact"
    L: int | None = None

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_qubits(self) -> int:
        return self.states.shape[1].bit_length() - 1

    def subset(self, idx) -> "LabeledStateSet":
        return LabeledStateSet(
            self.states[idx], self.labels[idx], self.fidelity[idx], self.alpha[idx],
            None if self.betas is None else self.betas[idx], self.mode, self.L,
        )

    def state(self, i: int) -> StateVector:
        return StateVector(self.n_qubits, self.states[i])


def encode_dataset(
    data: RawDataset, L: int = 1, config: TrainConfig | None = None, exact: bool = False
) -> LabeledStateSet:
    """Prepare input states either exactly (x / ||x||) or with trained encoders."""
    x = _unit_rows(data.vectors)
    labels = np.asarray(data.labels, dtype=int)
    if exact:
        return LabeledStateSet(x, labels, np.ones(len(x)), alpha_batch(x), None, "exact", None)
    return states_from_encoders(train_encoders(x, L, config), labels, L)


def states_from_encoders(res: EncoderResult, labels, L: int) -> LabeledStateSet:
    return LabeledStateSet(
        res.states, np.asarray(labels, dtype=int), res.fidelity, alpha_batch(res.states), res.betas, "trained", L
    )


# --- classifier -------------------------------------------------------------


@dataclass
class TrainedModel:
    theta: np.ndarray
    bias: float
    circuit: CircuitSpec
    config: TrainConfig
    loss_history: list = field(default_factory=list)
    grad_norm_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    test_error_history: list = field(default_factory=list)
    theta_history: list = field(default_factory=list)
    bias_history: list = field(default_factory=list)
    batch_history: list = field(default_factory=list)

    @property
    def objective(self) -> Objective:
        return Objective.for_circuit(self.circuit)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "bias": self.bias,
            "circuit": self.circuit.to_dict(),
            "config": self.config.to_dict(),
            "loss_history": list(self.loss_history),
            "grad_norm_history": list(self.grad_norm_history),
            "alpha_history": list(self.alpha_history),
            "test_error_history": list(self.test_error_history),
            "batch_history": [list(map(int, b)) for b in self.batch_history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        return cls(
            np.array(d["theta"], dtype=float),
            float(d["bias"]),
            CircuitSpec.from_dict(d["circuit"]),
            TrainConfig.from_dict(d["config"]),
            d.get("loss_history", []),
            d.get("grad_norm_history", []),
            d.get("alpha_history", []),
            d.get("test_error_history", []),
            batch_history=d.get("batch_history", []),
        )


def _streams(seed: int) -> list[np.random.Generator]:
    """Independent generators for init/batching, training shots and test shots."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def train_classifier(
    data: LabeledStateSet,
    circuit: CircuitSpec,
    config: TrainConfig | None = None,
    monitor: LabeledStateSet | None = None,
) -> TrainedModel:
    """Mini-batch SGD on mean (f_i - y_i + b)^2.

    ``monitor``, if given, is evaluated before every update to record the
    test-error curve (with ``shots_test`` when set).
    """
    config = config or TrainConfig()
    if len(data) == 0:
        raise ValueError("training data is empty")
    if config.batch_size > len(data):
        raise ValueError(f"batch size {config.batch_size} exceeds dataset size {len(data)}")
    if data.n_qubits != circuit.n_qubits:
        raise ValueError("data and circuit qubit counts differ")
    rng, shot_rng, test_rng = _streams(config.seed)
    template = Objective.for_circuit(circuit)
    theta = rng.uniform(0.0, 2 * np.pi, circuit.n_params)
    b = 0.0
    model = TrainedModel(theta, b, circuit, config)
    labels = data.labels.astype(float)
    for t in range(config.iterations):
        idx = rng.choice(len(data), size=config.batch_size, replace=False)
        if monitor is not None:
            pred = predict_batch(monitor.states, TrainedModel(theta, b, circuit, config), config.shots_test, test_rng)
            model.test_error_history.append(float(np.mean(pred != monitor.labels)))
        loss, g, gb, _ = classifier_loss_terms(
            theta, b, data.states[idx], labels[idx], template, config.shots_train, shot_rng
        )
        model.loss_history.append(loss)
        model.grad_norm_history.append(float(np.linalg.norm(g)))
        model.alpha_history.append(float(np.mean(data.alpha[idx])))
        model.theta_history.append(theta.copy())
        model.bias_history.append(b)
        model.batch_history.append(idx)
        theta = theta - config.rate(t) * g
        b = b - config.bias_rate(t) * gb
    model.theta, model.bias = theta, float(b)
    return model


def model_outputs(states: np.ndarray, model: TrainedModel, shots=None, rng=None) -> np.ndarray:
    """``f + b`` for each state."""
    thetas = np.broadcast_to(model.theta, (states.shape[0], model.theta.size))
    out = run_gates_batch(states, model.circuit.gates, thetas)
    return model.objective.evaluate(out, shots, rng) + model.bias


def predict_batch(states: np.ndarray, model: TrainedModel, shots=None, rng=None) -> np.ndarray:
    if shots is not None and rng is None:
        rng = np.random.default_rng(model.config.seed)
    return (model_outputs(np.atleast_2d(states), model, shots, rng) >= 0.5).astype(int)


def predict(state: StateVector, model: TrainedModel, shots=None, rng=None) -> int:
    """Class 1 when ``f + b >= 1/2`` (ties go to class 1)."""
    if state.n_qubits != model.circuit.n_qubits:
        raise ValueError("state and model qubit counts differ")
    return int(predict_batch(state.amplitudes[None, :], model, shots, rng)[0])


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1_class0: float
    f1_class1: float
    confusion: tuple[tuple[int, int], tuple[int, int]]  # [true][predicted]
    f1_undefined: tuple[bool, bool] = (False, False)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_0": self.f1_class0,
            "f1_1": self.f1_class1,
            "confusion": [list(r) for r in self.confusion],
            "f1_undefined": list(self.f1_undefined),
        }


def _f1(tp: int, fp: int, fn: int) -> tuple[float, bool]:
    if tp + fp == 0 or tp + fn == 0:
        return 0.0, True
    return 2 * tp / (2 * tp + fp + fn), False


def metrics_from_predictions(labels, predictions) -> Metrics:
    labels = np.asarray(labels, dtype=int)
    predictions = np.asarray(predictions, dtype=int)
    conf = [[int(np.sum((labels == t) & (predictions == p))) for p in (0, 1)] for t in (0, 1)]
    (t0p0, t0p1), (t1p0, t1p1) = conf
    f0, u0 = _f1(t0p0, t1p0, t0p1)
    f1, u1 = _f1(t1p1, t0p1, t1p0)
    acc = (t0p0 + t1p1) / len(labels) if len(labels) else 0.0
    return Metrics(acc, f0, f1, tuple(tuple(r) for r in conf), (u0, u1))


def evaluate(test: LabeledStateSet, model: TrainedModel, shots=None, rng=None) -> Metrics:
    return metrics_from_predictions(test.labels, predict_batch(test.states, model, shots, rng))


def dataset_loss(data: LabeledStateSet, model: TrainedModel) -> float:
    """Exact mean squared loss over a whole set."""
    r = model_outputs(data.states, model) - data.labels
    return float(np.mean(r**2))
