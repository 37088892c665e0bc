"""Circuit builders for the tree-tensor, step-controlled, random and encoder ansatzes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .simulator import GateOp

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CircuitSpec:
    """Immutable gate list with parameter slots.

    ``labels[s]`` is the ``(layer j, position k)`` of slot ``s`` so logs can
    print it as theta_j^(k).  ``meta`` carries architecture arguments such as
    ``n_c``, ``L`` or the random-circuit seed.
    """

    n_qubits: int
    gates: tuple[GateOp, ...]
    n_params: int
    arch: str = "custom"
    labels: tuple[tuple[int, int], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "labels", tuple(tuple(lab) for lab in self.labels))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        used = set()
        for g in self.gates:
            if max(g.qubits) > self.n_qubits:
                raise ValueError(f"gate {g.kind}{g.qubits} outside {self.n_qubits} qubits")
            if g.param_slot is not None:
                used.add(g.param_slot)
        if used != set(range(self.n_params)):
            raise ValueError("parameter slots must be exactly 0..n_params-1")
        if self.labels and len(self.labels) != self.n_params:
            raise ValueError("one label per parameter slot")

    # convenience views

    def ry_gates(self) -> list[tuple[int, GateOp]]:
        return [(i, g) for i, g in enumerate(self.gates) if g.kind == "RY"]

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)

    def slot_qubits(self) -> dict[int, int]:
        """Qubit acted on by each slot (first occurrence)."""
        out = {}
        for g in self.gates:
            if g.param_slot is not None:
                out.setdefault(g.param_slot, g.qubits[0])
        return out

    def first_channel_slots(self) -> list[int]:
        """Slots whose rotation acts on qubit 1, in circuit order."""
        return sorted(s for s, q in self.slot_qubits().items() if q == 1)

    def slot_of_layer(self, j: int) -> int:
        """Slot of the qubit-1 rotation in layer ``j``."""
        qubits = self.slot_qubits()
        for s, (layer, _) in enumerate(self.labels):
            if layer == j and qubits[s] == 1:
                return s
        raise ValueError(f"layer {j} has no rotation on qubit 1 in {self.arch}")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "arch": self.arch,
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "meta": self.meta,
            "labels": [list(lab) for lab in self.labels],
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        return cls(
            n_qubits=d["n_qubits"],
            gates=tuple(GateOp.from_dict(g) for g in d["gates"]),
            n_params=d["n_params"],
            arch=d.get("arch", "custom"),
            labels=tuple(tuple(lab) for lab in d.get("labels", [])),
            meta=d.get("meta", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        return cls.from_dict(json.loads(text))


class _Builder:
    """Accumulates gates while handing out slots in order."""

    def __init__(self, n: int):
        self.n = n
        self.gates: list[GateOp] = []
        self.labels: list[tuple[int, int]] = []

    def ry(self, qubit: int, label: tuple[int, int]) -> None:
        self.gates.append(GateOp("RY", (qubit,), len(self.labels)))
        self.labels.append(label)

    def layer(self, j: int, qubits) -> None:
        for k, q in enumerate(qubits, start=1):
            self.ry(q, (j, k))

    def gate(self, kind: str, *qubits: int) -> None:
        self.gates.append(GateOp(kind, qubits))

    def build(self, arch: str, **meta) -> CircuitSpec:
        return CircuitSpec(self.n, tuple(self.gates), len(self.labels), arch, tuple(self.labels), meta)


def _tree(n: int, arch: str) -> CircuitSpec:
    # At level l the surviving qubits are t = 1, 1 + 2**l, ...; each absorbs
    # the qubit 2**(l-1) below it (when that exists) and is then rotated.
    b = _Builder(n)
    b.layer(1, range(1, n + 1))
    for level in range(1, math.ceil(math.log2(n)) + 1):
        targets = []
        for t in range(1, n + 1, 2**level):
            c = t + 2 ** (level - 1)
            if c <= n:
                b.gate("CNOT", c, t)
                targets.append(t)
        b.layer(level + 1, targets)
    return b.build(arch)


def build_tt(n: int) -> CircuitSpec:
    if n < 2 or n & (n - 1):
        raise ValueError(f"tree tensor circuit needs n a power of two >= 2, got {n}")
    return _tree(n, "TT")


def build_dtt(n: int) -> CircuitSpec:
    """Deformed tree: the binary tree of ``build_tt`` with missing partners skipped."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return _tree(n, "DTT")


def build_sc(n: int, n_c: int) -> CircuitSpec:
    """Step-controlled circuit: a CNOT ladder whose last ``n_c`` steps all target qubit 1.

    Each CNOT is followed by one rotation on its target, so layers
    ``n - n_c + 1 .. n`` are exactly the qubit-1 rotations.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 1 <= n_c <= n - 1:
        raise ValueError(f"n_c must be in 1..{n - 1}, got {n_c}")
    b = _Builder(n)
    b.layer(1, range(1, n + 1))
    for step in range(1, n):
        control = n + 1 - step
        target = n - step if step <= n - 1 - n_c else 1
        b.gate("CNOT", control, target)
        b.layer(step + 1, [target])
    return b.build("SC", n_c=n_c)


def build_random(n: int, n_ry: int, n_cnot: int, rng: np.random.Generator | int) -> CircuitSpec:
    """Uniform random placement of ``n_ry`` rotations and ``n_cnot`` CNOTs."""
    if n_ry < 1:
        raise ValueError("n_ry must be >= 1")
    if n_cnot and n < 2:
        raise ValueError("CNOT gates need at least two qubits")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    kinds = np.array(["RY"] * n_ry + ["CNOT"] * n_cnot)
    kinds = kinds[rng.permutation(kinds.size)]
    b = _Builder(n)
    for kind in kinds:
        if kind == "RY":
            q = int(rng.integers(1, n + 1))
            b.ry(q, (len(b.labels) + 1, q))
        else:
            c, t = (int(x) + 1 for x in rng.choice(n, size=2, replace=False))
            b.gate("CNOT", c, t)
    meta = {"n_ry": n_ry, "n_cnot": n_cnot}
    if seed is not None:
        meta["seed"] = int(seed)
    return b.build("random", **meta)


def cz_layers(n: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Return ``(CZ_1, CZ_2)`` pair lists of the alternating encoder."""
    cz1 = [(q, q + 1) for q in range(1, n, 2)]
    cz2 = [(q, q + 1) for q in range(2, n - 1, 2)] + [(n, 1)]
    return cz1, cz2


def build_alternating_w(n: int, L: int) -> CircuitSpec:
    """W(beta) = V_{2L+1} U_L ... U_1 with U_j = CZ_1 V_{2j} CZ_2 V_{2j-1}."""
    if n < 4 or n % 2:
        raise ValueError(f"alternating layers need even n >= 4, got {n}")
    if L < 1:
        raise ValueError("L must be >= 1")
    cz1, cz2 = cz_layers(n)
    b = _Builder(n)
    qubits = range(1, n + 1)
    for j in range(1, L + 1):
        b.layer(2 * j - 1, qubits)
        for pair in cz2:
            b.gate("CZ", *pair)
        b.layer(2 * j, qubits)
        for pair in cz1:
            b.gate("CZ", *pair)
    b.layer(2 * L + 1, qubits)
    return b.build("W", L=L)


def invert_circuit(spec: CircuitSpec) -> CircuitSpec:
    gates = tuple(
        GateOp(g.kind, g.qubits, g.param_slot, -g.angle_sign) if g.kind == "RY" else g
        for g in reversed(spec.gates)
    )
    arch = spec.arch[:-4] if spec.arch.endswith("^dag") else spec.arch + "^dag"
    return CircuitSpec(spec.n_qubits, gates, spec.n_params, arch, spec.labels, dict(spec.meta))


def build_encoder_u(w_spec: CircuitSpec) -> CircuitSpec:
    """U(beta) = W(beta)^dagger X^n, preparing an approximation of |x> from |0...0>."""
    if w_spec.arch != "W":
        raise ValueError("build_encoder_u expects a circuit from build_alternating_w")
    flips = tuple(GateOp("X", (q,)) for q in range(1, w_spec.n_qubits + 1))
    inv = invert_circuit(w_spec)
    return CircuitSpec(
        w_spec.n_qubits, flips + inv.gates, w_spec.n_params, "U", w_spec.labels, dict(w_spec.meta)
    )


def build_architecture(
    arch: str,
    n: int,
    n_c: int | None = None,
    L: int | None = None,
    n_ry: int | None = None,
    n_cnot: int | None = None,
    seed: int | None = None,
) -> CircuitSpec:
    """Dispatch on a lower-case architecture name (tt, dtt, sc, random, w, u)."""
    arch = arch.lower()
    if arch == "tt":
        return build_tt(n)
    if arch == "dtt":
        return build_dtt(n)
    if arch == "sc":
        if n_c is None:
            raise ValueError("sc needs n_c")
        return build_sc(n, n_c)
    if arch == "random":
        if n_ry is None or n_cnot is None or seed is None:
            raise ValueError("random needs n_ry, n_cnot and seed")
        return build_random(n, n_ry, n_cnot, seed)
    if arch in ("w", "encoder"):
        return build_alternating_w(n, L or 1)
    if arch == "u":
        return build_encoder_u(build_alternating_w(n, L or 1))
    raise ValueError(f"unknown architecture {arch!r}")
