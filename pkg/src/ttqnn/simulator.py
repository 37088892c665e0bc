"""Real-amplitude statevector simulator for the gate set {RY, X, CNOT, CZ}.

Conventions used throughout the package:

* Qubit 1 is the most significant bit of the amplitude index.
* RY uses the full-angle form ``exp(-i theta Y)``, i.e. the real rotation
  ``[[cos t, -sin t], [sin t, cos t]]``.  Most libraries use the half angle;
  the full angle is what makes a shift of ``pi/4`` the exact gradient rule.
* ``CNOT`` qubits are stored as ``(control, target)``.

Single-state functions wrap batched kernels (``*_batch``) that act on arrays
of shape ``(B, 2**n)``; the batched forms do the heavy lifting for gradients
and quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

GATE_KINDS = ("RY", "X", "CNOT", "CZ")
PAULI_LABELS = "IXYZ"
NORM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state with real amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = np.array(self.amplitudes, dtype=float)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2 ** self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = float(amps @ amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not unit norm (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "StateVector":
        """Amplitude-encode ``x / ||x||``."""
        x = np.asarray(x, dtype=float)
        n = int(round(np.log2(x.size))) if x.size else 0
        if x.ndim != 1 or x.size < 2 or 2**n != x.size:
            raise ValueError("vector length must be a power of two >= 2")
        norm = np.linalg.norm(x)
        if norm == 0:
            raise ValueError("cannot encode the zero vector")
        return cls(n, x / norm)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2


@dataclass(frozen=True)
class GateOp:
    """One gate. ``qubits`` are 1-based; CNOT is ``(control, target)``."""

    kind: str
    qubits: tuple[int, ...]
    param_slot: int | None = None
    angle_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in ("CNOT", "CZ") else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind} needs two distinct qubits")
        if min(self.qubits) < 1:
            raise ValueError("qubit indices are 1-based")
        if (self.param_slot is not None) != (self.kind == "RY"):
            raise ValueError("param_slot must be set exactly for RY gates")
        if self.param_slot is not None and self.param_slot < 0:
            raise ValueError("param_slot must be non-negative")
        if self.angle_sign not in (1, -1):
            raise ValueError("angle_sign must be +1 or -1")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "qubits": list(self.qubits),
            "slot": self.param_slot,
            "sign": self.angle_sign,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GateOp":
        return cls(d["kind"], tuple(d["qubits"]), d.get("slot"), d.get("sign", 1))


@dataclass(frozen=True)
class PauliString:
    labels: str

    def __post_init__(self):
        labels = "".join(self.labels).upper()
        if not labels or any(c not in PAULI_LABELS for c in labels):
            raise ValueError(f"invalid Pauli labels {self.labels!r}")
        object.__setattr__(self, "labels", labels)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @classmethod
    def single(cls, n: int, qubit: int, label: str) -> "PauliString":
        """``label`` on ``qubit`` (1-based), identity elsewhere."""
        if not 1 <= qubit <= n:
            raise ValueError("qubit out of range")
        return cls("I" * (qubit - 1) + label + "I" * (n - qubit))

    def is_diagonal(self) -> bool:
        return set(self.labels) <= {"I", "Z"}


@dataclass(frozen=True)
class ShotCounts:
    counts: dict
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")


# --- index helpers ---------------------------------------------------------


def _bit(n: int, qubit: int) -> int:
    """Bit position (from the LSB) of a 1-based qubit index."""
    return n - qubit


@lru_cache(maxsize=None)
def _bits(n: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**n)
    return (idx >> _bit(n, qubit)) & 1


@lru_cache(maxsize=None)
def _flip_perm(n: int, mask: int) -> np.ndarray:
    return np.arange(2**n) ^ mask


@lru_cache(maxsize=None)
def _cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    return idx ^ (_bits(n, control) << _bit(n, target))


@lru_cache(maxsize=None)
def _cz_sign(n: int, a: int, b: int) -> np.ndarray:
    return 1.0 - 2.0 * (_bits(n, a) & _bits(n, b))


def _check_qubits(gate: GateOp, n: int) -> None:
    if max(gate.qubits) > n:
        raise ValueError(f"gate {gate.kind}{gate.qubits} out of range for {n} qubits")


# --- batched kernels -------------------------------------------------------


def n_qubits_of(states: np.ndarray) -> int:
    dim = states.shape[-1]
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError("last axis must have length 2**n")
    return n


def apply_ry_batch(states: np.ndarray, qubit: int, angles) -> np.ndarray:
    """Rotate ``qubit`` of each row by its own angle (scalar or shape ``(B,)``)."""
    b, dim = states.shape
    n = n_qubits_of(states)
    view = states.reshape(b, 2 ** (qubit - 1), 2, 2 ** (n - qubit))
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (b,))
    c = np.cos(angles)[:, None, None]
    s = np.sin(angles)[:, None, None]
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    out = np.empty_like(view)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(b, dim)


def apply_gate_batch(states: np.ndarray, gate: GateOp, angles=None) -> np.ndarray:
    """Apply ``gate`` to every row; ``angles`` are the bound RY parameters."""
    n = n_qubits_of(states)
    _check_qubits(gate, n)
    if gate.kind == "RY":
        return apply_ry_batch(states, gate.qubits[0], gate.angle_sign * np.asarray(angles))
    if gate.kind == "X":
        return states[:, _flip_perm(n, 1 << _bit(n, gate.qubits[0]))]
    if gate.kind == "CNOT":
        return states[:, _cnot_perm(n, *gate.qubits)]
    return states * _cz_sign(n, *gate.qubits)


def _as_param_batch(params, batch: int, n_params: int) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.ndim == 1:
        params = np.broadcast_to(params, (batch, params.size))
    if params.shape[0] != batch:
        raise ValueError("parameter batch does not match state batch")
    if params.shape[1] < n_params:
        raise ValueError(
            f"circuit references slot {n_params - 1} but only {params.shape[1]} parameters given"
        )
    return params


def _max_slot(gates: Iterable[GateOp]) -> int:
    return max((g.param_slot for g in gates if g.param_slot is not None), default=-1)


def run_gates_batch(states: np.ndarray, gates: Sequence[GateOp], params) -> np.ndarray:
    """Run a gate list on a batch; ``params`` is ``(P,)`` or ``(B, P)``."""
    states = np.asarray(states, dtype=float)
    params = _as_param_batch(params, states.shape[0], _max_slot(gates) + 1)
    for g in gates:
        angles = params[:, g.param_slot] if g.kind == "RY" else None
        states = apply_gate_batch(states, g, angles)
    return states


def run_circuit_batch(states: np.ndarray, circuit, params) -> np.ndarray:
    if n_qubits_of(states) != circuit.n_qubits:
        raise ValueError("state and circuit qubit counts differ")
    return run_gates_batch(states, circuit.gates, params)


def pauli_expectation_batch(states: np.ndarray, obs: PauliString) -> np.ndarray:
    """Row-wise <psi|P|psi> for real states.

    For real psi the expectation of a string with an odd number of Y factors
    vanishes; with an even number it equals ``(-1)**(m/2)`` times the
    expectation of the string with every Y replaced by XZ.
    """
    n = n_qubits_of(states)
    if obs.n_qubits != n:
        raise ValueError(f"observable has {obs.n_qubits} labels, state has {n} qubits")
    n_y = obs.labels.count("Y")
    if n_y % 2:
        return np.zeros(states.shape[0])
    flip = 0
    sign = np.ones(2**n)
    for q, label in enumerate(obs.labels, start=1):
        if label in "XY":
            flip |= 1 << _bit(n, q)
        if label in "ZY":
            sign = sign * (1.0 - 2.0 * _bits(n, q))
    phase = (-1.0) ** (n_y // 2)
    # <psi| Xmask Zsign |psi> = sum_i psi[i ^ mask] * sign[i] * psi[i]
    return phase * np.einsum("bi,bi->b", states[:, _flip_perm(n, flip)], states * sign)


def z_diagonal(n: int, observables: Sequence[tuple[PauliString, float]]) -> np.ndarray:
    """Diagonal of ``sum_i w_i O_i`` for Z-type observables."""
    diag = np.zeros(2**n)
    for obs, w in observables:
        if not obs.is_diagonal():
            raise ValueError("z_diagonal needs I/Z observables")
        term = np.ones(2**n)
        for q, label in enumerate(obs.labels, start=1):
            if label == "Z":
                term = term * (1.0 - 2.0 * _bits(n, q))
        diag += w * term
    return diag


def sample_counts_batch(states: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts per row, shape ``(B, 2**n)``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = states**2
    probs = probs / probs.sum(axis=1, keepdims=True)
    return rng.multinomial(shots, probs)


# --- single-state API ------------------------------------------------------


def init_basis_state(n: int, bits: str) -> StateVector:
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring {bits!r} does not describe {n} qubits")
    amps = np.zeros(2**n)
    amps[int(bits, 2)] = 1.0
    return StateVector(n, amps)


def apply_gate(state: StateVector, gate: GateOp, params: Sequence[float] = ()) -> StateVector:
    angles = None
    if gate.kind == "RY":
        if gate.param_slot >= len(params):
            raise ValueError(f"param_slot {gate.param_slot} out of range")
        angles = params[gate.param_slot]
    out = apply_gate_batch(state.amplitudes[None, :], gate, angles)
    return StateVector(state.n_qubits, out[0])


def run_circuit(state: StateVector, circuit, params: Sequence[float] = ()) -> StateVector:
    out = run_circuit_batch(state.amplitudes[None, :], circuit, np.asarray(params, dtype=float))
    return StateVector(state.n_qubits, out[0])


def pauli_expectation(state: StateVector, obs: PauliString) -> float:
    return float(pauli_expectation_batch(state.amplitudes[None, :], obs)[0])


def sample_bitstrings(state: StateVector, shots: int, rng: np.random.Generator) -> ShotCounts:
    counts = sample_counts_batch(state.amplitudes[None, :], shots, rng)[0]
    n = state.n_qubits
    return ShotCounts(
        {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}, int(shots)
    )


def estimate_f_from_shots(counts: ShotCounts, qubit: int) -> float:
    """Fraction of outcomes where ``qubit`` (1-based) reads 0."""
    if counts.shots <= 0:
        raise ValueError("no shots recorded")
    zeros = sum(c for bits, c in counts.counts.items() if bits[qubit - 1] == "0")
    return zeros / counts.shots
