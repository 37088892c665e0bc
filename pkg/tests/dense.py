"""Independent dense-matrix oracle: every gate as an explicit 2^n x 2^n matrix."""

import numpy as np

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


def ry(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def embed(ops, n):
    """Kronecker product with ``ops[q]`` on qubit q (1-based, qubit 1 leftmost)."""
    out = np.eye(1)
    for q in range(1, n + 1):
        out = np.kron(out, ops.get(q, I2))
    return out


def gate_matrix(gate, n, params):
    if gate.kind == "RY":
        return embed({gate.qubits[0]: ry(gate.angle_sign * params[gate.param_slot])}, n)
    if gate.kind == "X":
        return embed({gate.qubits[0]: X}, n)
    a, b = gate.qubits
    if gate.kind == "CNOT":
        return embed({a: P0}, n) + embed({a: P1, b: X}, n)
    return embed({a: P0}, n) + embed({a: P1, b: P0}, n) - embed({a: P1, b: P1}, n)


def circuit_matrix(circuit, params):
    n = circuit.n_qubits
    m = np.eye(2**n)
    for g in circuit.gates:
        m = gate_matrix(g, n, params) @ m
    return m
