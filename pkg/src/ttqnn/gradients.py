"""Objectives, parameter-shift gradients and the classifier loss.

The objective is ``f = 1/2 + 1/2 * sum_i w_i <O_i>`` evaluated on
``V(theta)|psi_in>``.  With the full-angle RY convention every parameter
enters ``f`` as a degree-2 trigonometric polynomial, so
``df/dtheta = f(theta + pi/4) - f(theta - pi/4)`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import CircuitSpec
from .simulator import (
    PauliString,
    StateVector,
    apply_gate_batch,
    apply_ry_batch,
    pauli_expectation_batch,
    run_gates_batch,
    sample_counts_batch,
    z_diagonal,
)

# Tied to the full-angle RY(theta) = exp(-i theta Y).  A half-angle gate
# would need pi/2 here together with a factor 1/2 on the difference.
SHIFT = np.pi / 4
RY_ANGLE_SCALE = 1.0
assert RY_ANGLE_SCALE == 1.0 and SHIFT == np.pi / 4, "shift constant assumes full-angle RY"

FD_STEP = 1e-5


@dataclass(frozen=True)
class Objective:
    """Circuit plus weighted observables; ``input_state`` may be left unset for templates."""

    circuit: CircuitSpec
    observables: tuple[tuple[PauliString, float], ...]
    input_state: StateVector | None = None
    _diag: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        obs = tuple((PauliString(p.labels) if isinstance(p, PauliString) else PauliString(p), float(w))
                    for p, w in self.observables)
        object.__setattr__(self, "observables", obs)
        if not obs:
            raise ValueError("at least one observable is required")
        n = self.circuit.n_qubits
        if any(p.n_qubits != n for p, _ in obs):
            raise ValueError(f"observables must have {n} labels")
        weights = np.array([w for _, w in obs])
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("observable weights must be non-negative and sum to 1")
        if self.input_state is not None and self.input_state.n_qubits != n:
            raise ValueError("input state and circuit qubit counts differ")
        if all(p.is_diagonal() for p, _ in obs):
            object.__setattr__(self, "_diag", z_diagonal(n, obs))

    @classmethod
    def first_qubit_z(cls, circuit: CircuitSpec, input_state=None) -> "Objective":
        n = circuit.n_qubits
        return cls(circuit, ((PauliString.single(n, 1, "Z"), 1.0),), input_state)

    @classmethod
    def mean_z(cls, circuit: CircuitSpec, input_state=None) -> "Objective":
        n = circuit.n_qubits
        return cls(
            circuit,
            tuple((PauliString.single(n, q, "Z"), 1.0 / n) for q in range(1, n + 1)),
            input_state,
        )

    @classmethod
    def for_circuit(cls, circuit: CircuitSpec, input_state=None) -> "Objective":
        """Z on qubit 1 for the structured circuits, mean Z for random ones."""
        if circuit.arch == "random":
            return cls.mean_z(circuit, input_state)
        return cls.first_qubit_z(circuit, input_state)

    def with_input(self, state: StateVector) -> "Objective":
        return Objective(self.circuit, self.observables, state)

    @property
    def n_params(self) -> int:
        return self.circuit.n_params

    def raw_expectation(self, states: np.ndarray) -> np.ndarray:
        """Row-wise ``sum_i w_i <O_i>`` on output states."""
        if self._diag is not None:
            return (states * states) @ self._diag
        return sum(w * pauli_expectation_batch(states, p) for p, w in self.observables)

    def raw_from_counts(self, counts: np.ndarray, shots: int) -> np.ndarray:
        if self._diag is None:
            raise ValueError("shot estimates need Z-type observables")
        return counts @ self._diag / shots

    def evaluate(self, states: np.ndarray, shots: int | None = None, rng=None) -> np.ndarray:
        """``f`` for each output state, exactly or from ``shots`` samples."""
        if shots is None:
            raw = self.raw_expectation(states)
        else:
            if rng is None:
                raise ValueError("shot mode needs an rng")
            raw = self.raw_from_counts(sample_counts_batch(states, shots, rng), shots)
        return 0.5 + 0.5 * raw

    def input_batch(self, batch: int = 1) -> np.ndarray:
        if self.input_state is None:
            raise ValueError("objective has no input state")
        return np.broadcast_to(self.input_state.amplitudes, (batch, self.input_state.amplitudes.size))


@dataclass(frozen=True)
class GradientVector:
    values: np.ndarray
    mode: str = "exact"
    shots: int | None = None
    seed: int | None = None

    @property
    def norm_sq(self) -> float:
        return float(self.values @ self.values)

    def __len__(self) -> int:
        return len(self.values)


def _check_theta(obj: Objective, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != obj.n_params:
        raise ValueError(f"expected {obj.n_params} parameters, got {theta.shape[-1]}")
    return theta


def _rng(rng, seed):
    if rng is not None:
        return rng
    return np.random.default_rng(seed)


def objective_values(obj: Objective, thetas, states=None, shots=None, rng=None) -> np.ndarray:
    """Batched ``f``: ``thetas`` is ``(B, P)``; ``states`` defaults to the objective's input."""
    thetas = np.atleast_2d(_check_theta(obj, thetas))
    if states is None:
        states = obj.input_batch(thetas.shape[0])
    out = run_gates_batch(states, obj.circuit.gates, thetas)
    return obj.evaluate(out, shots, rng)


def objective_value(obj: Objective, theta, shots=None, rng=None) -> float:
    return float(objective_values(obj, theta, shots=shots, rng=rng)[0])


def shift_gradients(
    obj: Objective, thetas, states=None, shots=None, rng=None, with_values=False
):
    """Parameter-shift gradients for a batch of ``(theta, input)`` rows.

    For each RY occurrence the prefix state is shared, the gate is evaluated
    at ``phi +/- pi/4`` and only the suffix is re-run.  A slot used by several
    gates accumulates one shift pair per occurrence (product rule).

    Returns ``(B, P)`` gradients, and ``(B,)`` values of ``f`` when
    ``with_values`` is set.
    """
    thetas = np.atleast_2d(_check_theta(obj, thetas))
    b = thetas.shape[0]
    psi = obj.input_batch(b) if states is None else np.asarray(states, dtype=float)
    gates = obj.circuit.gates
    grads = np.zeros((b, obj.n_params))
    doubled = np.concatenate([thetas, thetas])
    for i, g in enumerate(gates):
        if g.kind == "RY":
            phi = g.angle_sign * thetas[:, g.param_slot]
            shifted = np.concatenate([
                apply_ry_batch(psi, g.qubits[0], phi + SHIFT),
                apply_ry_batch(psi, g.qubits[0], phi - SHIFT),
            ])
            f = obj.evaluate(run_gates_batch(shifted, gates[i + 1:], doubled), shots, rng)
            grads[:, g.param_slot] += g.angle_sign * (f[:b] - f[b:])
            psi = apply_ry_batch(psi, g.qubits[0], phi)
        else:
            psi = apply_gate_batch(psi, g)
    if with_values:
        return grads, obj.evaluate(psi, shots, rng)
    return grads


def parameter_shift_grad(obj: Objective, theta, shots=None, seed=None, rng=None) -> GradientVector:
    theta = _check_theta(obj, theta)
    if shots is not None:
        rng = _rng(rng, seed)
    values = shift_gradients(obj, theta[None, :], shots=shots, rng=rng)[0]
    mode = "exact" if shots is None else "shots"
    return GradientVector(values, mode, shots, seed)


def finite_difference_grad(obj: Objective, theta, h: float = FD_STEP) -> GradientVector:
    """Central differences, one full circuit run per shifted point."""
    if h <= 0:
        raise ValueError("h must be positive")
    theta = _check_theta(obj, theta)
    p = theta.size
    if p == 0:
        return GradientVector(np.zeros(0))
    steps = h * np.eye(p)
    f = objective_values(obj, np.concatenate([theta + steps, theta - steps]))
    return GradientVector((f[:p] - f[p:]) / (2 * h))


# --- classifier loss -------------------------------------------------------


def batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    """Accept a list of ``(StateVector, label)`` or a ``(states, labels)`` pair of arrays."""
    if isinstance(batch, tuple) and len(batch) == 2 and isinstance(batch[0], np.ndarray):
        states, labels = batch
    else:
        batch = list(batch)
        if not batch:
            raise ValueError("batch must not be empty")
        states = np.stack([s.amplitudes for s, _ in batch])
        labels = np.array([y for _, y in batch])
    states = np.asarray(states, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if states.shape[0] == 0:
        raise ValueError("batch must not be empty")
    if states.shape[0] != labels.shape[0]:
        raise ValueError("states and labels differ in length")
    return states, labels


def classifier_loss(theta, b: float, batch, template: Objective) -> float:
    """Mean of ``(f_i - y_i + b)**2`` over the batch, exact expectations."""
    states, labels = batch_arrays(batch)
    theta = _check_theta(template, theta)
    f = objective_values(template, np.broadcast_to(theta, (len(labels), theta.size)), states)
    return float(np.mean((f - labels + b) ** 2))


def classifier_loss_terms(theta, b, states, labels, template, shots=None, rng=None):
    """Shared core: returns ``(loss, dtheta, db, f)`` for one batch."""
    theta = _check_theta(template, theta)
    thetas = np.broadcast_to(theta, (len(labels), theta.size))
    df, f = shift_gradients(template, thetas, states, shots, rng, with_values=True)
    resid = f - labels + b
    m = len(labels)
    return float(np.mean(resid**2)), (2.0 / m) * resid @ df, float(2.0 / m * resid.sum()), f


def classifier_loss_grad(
    theta, b: float, batch, template: Objective, shots=None, seed=None, rng=None
) -> tuple[GradientVector, float]:
    """``(d loss / d theta, d loss / d b)`` using the shift rule for each ``f_i``."""
    states, labels = batch_arrays(batch)
    if shots is not None:
        rng = _rng(rng, seed)
    _, g, gb, _ = classifier_loss_terms(theta, b, states, labels, template, shots, rng)
    return GradientVector(g, "exact" if shots is None else "shots", shots, seed), gb


__all__ = [
    "Objective",
    "GradientVector",
    "objective_value",
    "objective_values",
    "parameter_shift_grad",
    "shift_gradients",
    "finite_difference_grad",
    "classifier_loss",
    "classifier_loss_grad",
    "classifier_loss_terms",
    "batch_arrays",
]
