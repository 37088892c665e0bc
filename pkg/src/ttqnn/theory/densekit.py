"""Dense complex 2x2 / 4x4 matrices for checking the Pauli conjugation and
single-angle integration identities independently of the real simulator.

Two-qubit operators are ordered ``first (x) second``.  ``CNOT`` here flips
the first factor when the second is 1 (target on top, control below), the
orientation used by the tree circuits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .quadrature import grid_nodes

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
CNOT = np.kron(SIGMA[0], P0) + np.kron(SIGMA[1], P1)
CZ = np.kron(SIGMA[0], P0) + np.kron(SIGMA[3], P1)

CONJ_TOL = 1e-12
INTEGRAL_TOL = 1e-10


class ComplexMatrix(np.ndarray):
    """Marker view for 2x2 / 4x4 complex operators."""

    def __new__(cls, data):
        arr = np.asarray(data, dtype=complex)
        if arr.shape not in ((2, 2), (4, 4)):
            raise ValueError("ComplexMatrix must be 2x2 or 4x4")
        return arr.view(cls)


def d(a: int, b: int) -> int:
    return int(a == b)


def rotation(theta: float, k: int) -> np.ndarray:
    """W = exp(-i theta sigma_k)."""
    return np.cos(theta) * SIGMA[0] - 1j * np.sin(theta) * SIGMA[k]


def rotation_derivative(theta: float, k: int) -> np.ndarray:
    """G = dW/dtheta."""
    return -np.sin(theta) * SIGMA[0] - 1j * np.cos(theta) * SIGMA[k]


def cnot_rule(j: int, k: int) -> np.ndarray:
    """Closed form of CNOT (s_j x s_k) CNOT^dagger."""
    s, x, z = SIGMA, SIGMA[1], SIGMA[3]
    a = d(j, 0) + d(j, 1)
    b = d(j, 2) + d(j, 3)
    c = d(k, 0) + d(k, 3)
    e = d(k, 1) + d(k, 2)
    return (
        a * c * np.kron(s[j], s[k])
        + a * e * np.kron(s[j] @ x, s[k])
        + b * c * np.kron(s[j], s[k] @ z)
        - b * e * np.kron(s[j] @ x, s[k] @ z)
    )


def cz_rule(j: int, k: int) -> np.ndarray:
    """Closed form of CZ (s_j x s_k) CZ^dagger."""
    s, z = SIGMA, SIGMA[3]
    a = d(j, 0) + d(j, 3)
    b = d(j, 1) + d(j, 2)
    c = d(k, 0) + d(k, 3)
    e = d(k, 1) + d(k, 2)
    return (
        a * c * np.kron(s[j], s[k])
        + a * e * np.kron(s[j] @ z, s[k])
        + b * c * np.kron(s[j], s[k] @ z)
        - b * e * np.kron(s[j] @ z, s[k] @ z)
    )


@dataclass(frozen=True)
class ConjugationCase:
    gate: str
    j: int
    k: int
    error: float

    @property
    def passed(self) -> bool:
        return self.error <= CONJ_TOL


def conjugation_cases(gate: str) -> list[ConjugationCase]:
    u, rule = {"CNOT": (CNOT, cnot_rule), "CZ": (CZ, cz_rule)}[gate]
    cases = []
    for j, k in itertools.product(range(4), repeat=2):
        lhs = u @ np.kron(SIGMA[j], SIGMA[k]) @ u.conj().T
        cases.append(ConjugationCase(gate, j, k, float(np.abs(lhs - rule(j, k)).max())))
    return cases


def check_cnot_conjugation() -> bool:
    return all(c.passed for c in conjugation_cases("CNOT"))


def check_cz_conjugation() -> bool:
    return all(c.passed for c in conjugation_cases("CZ"))


@dataclass(frozen=True)
class IntegrationCheck:
    j: int
    k: int
    w_lhs: complex
    w_rhs: complex
    g_lhs: complex
    g_rhs: complex

    @property
    def w_error(self) -> float:
        return abs(self.w_lhs - self.w_rhs)

    @property
    def g_error(self) -> float:
        return abs(self.g_lhs - self.g_rhs)

    @property
    def passed(self) -> bool:
        return max(self.w_error, self.g_error) <= INTEGRAL_TOL


def _angle_mean(fn, degree: int = 4) -> complex:
    nodes = grid_nodes(degree + 1)
    return complex(np.mean([fn(t) for t in nodes]))


def check_integration_identities(j: int, k: int, A, C) -> IntegrationCheck:
    """Compare both sides of the single-angle identities with B = D = sigma_j.

    W variant: E Tr[W A W^+ B] Tr[W C W^+ D]
      = (1/2 + (d_j0 + d_jk)/2) Tr[AB] Tr[CD] + (-1/2 + (d_j0 + d_jk)/2) Tr[AB s_k] Tr[CD s_k]
    G variant: E Tr[G A W^+ B] Tr[G C W^+ D]
      = (1/2 - (d_j0 + d_jk)/2) Tr[AB] Tr[CD] + (-1/2 - (d_j0 + d_jk)/2) Tr[AB s_k] Tr[CD s_k]
    """
    if j not in range(4) or k not in (1, 2, 3):
        raise ValueError("need j in 0..3 and k in 1..3")
    A = np.asarray(ComplexMatrix(A))
    C = np.asarray(ComplexMatrix(C))
    if A.shape != (2, 2) or C.shape != (2, 2):
        raise ValueError("A and C must be 2x2")
    B = D = SIGMA[j]
    sk = SIGMA[k]
    tr = np.trace

    def w_term(t):
        W = rotation(t, k)
        return tr(W @ A @ W.conj().T @ B) * tr(W @ C @ W.conj().T @ D)

    def g_term(t):
        W, G = rotation(t, k), rotation_derivative(t, k)
        return tr(G @ A @ W.conj().T @ B) * tr(G @ C @ W.conj().T @ D)

    delta = (d(j, 0) + d(j, k)) / 2
    t1 = tr(A @ B) * tr(C @ D)
    t2 = tr(A @ B @ sk) * tr(C @ D @ sk)
    return IntegrationCheck(
        j,
        k,
        _angle_mean(w_term),
        complex((0.5 + delta) * t1 + (-0.5 + delta) * t2),
        _angle_mean(g_term),
        complex((0.5 - delta) * t1 + (-0.5 - delta) * t2),
    )


def random_complex_matrix(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def integration_suite(seed: int = 0, trials: int = 20) -> list[IntegrationCheck]:
    """All 12 (j, k) pairs times ``trials`` random (A, C) pairs."""
    rng = np.random.default_rng(seed)
    out = []
    for j, k in itertools.product(range(4), (1, 2, 3)):
        for _ in range(trials):
            out.append(check_integration_identities(j, k, random_complex_matrix(rng), random_complex_matrix(rng)))
    return out
