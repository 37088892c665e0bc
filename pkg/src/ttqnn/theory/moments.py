"""Exact averages of quartic state functionals by propagating four copies.

For a circuit whose slots each appear once, the angles are independent, so
``E[psi x psi x psi x psi]`` can be propagated gate by gate: every gate acts
on all four copies, and each RY is averaged over its own 5-point grid (the
four-copy action is a degree-4 trigonometric polynomial in that angle).
Memory is ``16**n`` floats, so this is meant for n <= 6.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..circuits import CircuitSpec
from ..simulator import GateOp, StateVector, apply_gate_batch, _flip_perm, _bit, _bits
from .quadrature import BudgetExceeded, grid_nodes

MAX_COPY_QUBITS = 24


def _lift(g: GateOp, n: int, copy: int) -> GateOp:
    shift = copy * n
    return GateOp(g.kind, tuple(q + shift for q in g.qubits), g.param_slot, g.angle_sign)


def fourth_moment(circuit: CircuitSpec, state: StateVector) -> np.ndarray:
    """``E_theta[psi^(x4)]`` as an array of shape ``(D, D, D, D)``."""
    n = circuit.n_qubits
    if 4 * n > MAX_COPY_QUBITS:
        raise BudgetExceeded(f"four-copy moment needs 16^{n} entries; use Monte Carlo")
    uses = Counter(g.param_slot for g in circuit.gates if g.kind == "RY")
    if any(c > 1 for c in uses.values()):
        raise ValueError("moment propagation needs every slot used exactly once")
    psi = state.amplitudes
    v = np.einsum("a,b,c,d->abcd", psi, psi, psi, psi).reshape(1, -1)
    nodes = grid_nodes(5)
    for g in circuit.gates:
        lifted = [_lift(g, n, c) for c in range(4)]
        if g.kind == "RY":
            acc = np.zeros_like(v)
            for t in nodes:
                w = v
                for lg in lifted:
                    w = apply_gate_batch(w, lg, np.array([t]))
                acc += w
            v = acc / nodes.size
        else:
            for lg in lifted:
                v = apply_gate_batch(v, lg)
    d = 2**n
    return v.reshape(d, d, d, d)


def expected_alpha(circuit: CircuitSpec, state: StateVector) -> float:
    """Exact ``E_theta[<X_1>^2 + <Z_1>^2]`` of ``circuit`` applied to ``state``."""
    n = circuit.n_qubits
    m = fourth_moment(circuit, state)
    x_perm = _flip_perm(n, 1 << _bit(n, 1))
    z_sign = 1.0 - 2.0 * _bits(n, 1)
    d = 2**n
    idx = np.arange(d)
    # <X1>^2 = sum_{a,c} psi_a psi_{a^m} psi_c psi_{c^m}
    x_term = m[idx[:, None], x_perm[:, None], idx[None, :], x_perm[None, :]].sum()
    z_term = np.einsum("a,c,aacc->", z_sign, z_sign, m)
    return float(x_term + z_term)
