"""Gradient-norm bounds, the first-channel derivative identity, the encoder
alpha bound and the barren-plateau comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..circuits import CircuitSpec, build_alternating_w, build_architecture, build_encoder_u, build_random
from ..gradients import Objective, shift_gradients, objective_values
from ..simulator import PauliString, StateVector, init_basis_state, pauli_expectation_batch, run_gates_batch
from .moments import expected_alpha
from .quadrature import (
    DEFAULT_BUDGET,
    ExpectationReport,
    exact_param_expectation,
    mc_param_expectation,
)

SIGMA_SLACK = 3.0
EQUALITY_TOL = 1e-10
STRUCTURED = ("tt", "sc", "dtt")


def alpha_batch(states: np.ndarray) -> np.ndarray:
    n = int(np.log2(states.shape[1]))
    x = pauli_expectation_batch(states, PauliString.single(n, 1, "X"))
    z = pauli_expectation_batch(states, PauliString.single(n, 1, "Z"))
    return x**2 + z**2


def alpha(state: StateVector) -> float:
    """<X_1>^2 + <Z_1>^2."""
    return float(alpha_batch(state.amplitudes[None, :])[0])


def lower_bound_coefficient(arch: str, n: int, n_c: int | None = None) -> float:
    arch = arch.lower()
    if arch == "tt":
        return (1 + math.log2(n)) / (2 * n)
    if arch == "dtt":
        return (1 + math.log2(n)) / (4 * n)
    if arch == "sc":
        if n_c is None:
            raise ValueError("sc needs n_c")
        return (1 + n_c) / 2 ** (1 + n_c)
    raise ValueError(f"no gradient-norm bound for {arch!r}")


def product_state(angles) -> StateVector:
    """Real product state with qubit q in cos(a_q)|0> + sin(a_q)|1>."""
    amps = np.ones(1)
    for a in angles:
        amps = np.kron(amps, [math.cos(a), math.sin(a)])
    return StateVector(len(angles), amps)


def random_product_state(n: int, rng: np.random.Generator) -> StateVector:
    return product_state(rng.uniform(0, 2 * np.pi, n))


def random_real_state(n: int, rng: np.random.Generator) -> StateVector:
    """Gaussian direction on the real unit sphere (generally entangled, alpha < 1)."""
    return StateVector.from_vector(rng.standard_normal(2**n))


@dataclass(frozen=True)
class BoundReport:
    arch: str
    n: int
    lower_bound: float
    estimate: ExpectationReport
    upper_bound: float
    alpha: float | None = None
    n_c: int | None = None
    L: int | None = None

    @property
    def satisfied(self) -> bool:
        slack = SIGMA_SLACK * self.estimate.stderr
        return self.lower_bound - slack <= self.estimate.mean <= self.upper_bound + slack

    def to_row(self) -> dict:
        return {
            "arch": self.arch,
            "n": self.n,
            "n_c": self.n_c,
            "L": self.L,
            "mode": self.estimate.mode,
            "mean": self.estimate.mean,
            "stderr": self.estimate.stderr,
            "lower": self.lower_bound,
            "upper": self.upper_bound,
            "alpha": self.alpha,
            "satisfied": self.satisfied,
            "seed": self.estimate.seed,
        }


def _expectation(fn, n_params, mode, samples, seed, budget):
    if mode == "exact":
        return exact_param_expectation(fn, n_params, 4, budget=budget)
    if mode == "mc":
        return mc_param_expectation(fn, n_params, samples, seed)
    raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")


def _structured(arch: str, n: int, n_c: int | None) -> CircuitSpec:
    if arch.lower() not in STRUCTURED:
        raise ValueError(f"arch must be one of {STRUCTURED}")
    return build_architecture(arch, n, n_c=n_c)


def verify_gradient_norm_bound(
    arch: str,
    n: int,
    input_state: StateVector | None = None,
    mode: str = "exact",
    n_c: int | None = None,
    samples: int = 500,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> BoundReport:
    """Compare E||grad f||^2 (shift rule) with the architecture's bounds."""
    circuit = _structured(arch, n, n_c)
    state = input_state or init_basis_state(n, "0" * n)
    obj = Objective.first_qubit_z(circuit, state)

    def grad_norm_sq(thetas):
        g = shift_gradients(obj, thetas)
        return np.einsum("ij,ij->i", g, g)

    est = _expectation(grad_norm_sq, circuit.n_params, mode, samples, seed, budget)
    a = alpha(state)
    return BoundReport(
        arch.upper(), n, lower_bound_coefficient(arch, n, n_c) * a, est, 2.0 * n - 1, a,
        n_c=n_c if arch.lower() == "sc" else None,
    )


@dataclass(frozen=True)
class DerivativeEqualityReport:
    arch: str
    n: int
    layer: int
    slot: int
    derivative_sq: ExpectationReport
    four_var: ExpectationReport

    @property
    def residual(self) -> float:
        return abs(self.derivative_sq.mean - self.four_var.mean)

    @property
    def satisfied(self) -> bool:
        if self.derivative_sq.mode == "exact-grid":
            return self.residual <= EQUALITY_TOL
        sigma = math.hypot(self.derivative_sq.stderr, self.four_var.stderr)
        return self.residual <= SIGMA_SLACK * sigma

    def to_row(self) -> dict:
        return {
            "arch": self.arch,
            "n": self.n,
            "layer": self.layer,
            "slot": self.slot,
            "mode": self.derivative_sq.mode,
            "lhs": self.derivative_sq.mean,
            "rhs": self.four_var.mean,
            "residual": self.residual,
            "satisfied": self.satisfied,
        }


def first_channel_layers(circuit: CircuitSpec) -> list[int]:
    labels = circuit.labels
    return [labels[s][0] for s in circuit.first_channel_slots()]


def verify_derivative_equality(
    arch: str,
    n: int,
    j: int,
    input_state: StateVector | None = None,
    mode: str = "exact",
    n_c: int | None = None,
    samples: int = 2000,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> DerivativeEqualityReport:
    """E (df/dtheta_j^(1))^2 against 4 E (f - 1/2)^2 for a qubit-1 rotation in layer ``j``."""
    circuit = _structured(arch, n, n_c)
    slot = circuit.slot_of_layer(j)
    state = input_state or init_basis_state(n, "0" * n)
    obj = Objective.first_qubit_z(circuit, state)

    def deriv_sq(thetas):
        return shift_gradients(obj, thetas)[:, slot] ** 2

    def four_var(thetas):
        return 4.0 * (objective_values(obj, thetas) - 0.5) ** 2

    lhs = _expectation(deriv_sq, circuit.n_params, mode, samples, seed, budget)
    rhs = _expectation(four_var, circuit.n_params, mode, samples, seed, budget)
    return DerivativeEqualityReport(arch.upper(), n, j, slot, lhs, rhs)


def encoder_alpha_fn(n: int, L: int):
    """``beta -> alpha(U(beta)|0...0>)`` for batches of beta."""
    u = build_encoder_u(build_alternating_w(n, L))
    zero = init_basis_state(n, "0" * n)
    obj = Objective.first_qubit_z(u, zero)

    def fn(betas):
        states = obj.input_batch(betas.shape[0])
        return alpha_batch(run_gates_batch(states, u.gates, betas))

    return u, fn


def verify_encoder_alpha_bound(
    n: int,
    L: int,
    mode: str = "mc",
    samples: int = 2000,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> BoundReport:
    """E_beta alpha(U(beta)|0...0>) against 2**(-2L).

    ``mode="exact"`` uses the four-copy moment propagation (exact, no grid);
    ``mode="grid"`` uses the tensor grid and is limited by ``budget``.
    """
    u, fn = encoder_alpha_fn(n, L)
    if mode == "exact":
        est = ExpectationReport(expected_alpha(u, init_basis_state(n, "0" * n)), 0.0, "exact-moment", 1)
    elif mode == "grid":
        est = exact_param_expectation(fn, u.n_params, 4, budget=budget)
    else:
        est = _expectation(fn, u.n_params, mode, samples, seed, budget)
    return BoundReport("ENCODER", n, 2.0 ** (-2 * L), est, 1.0, None, L=L)


def random_circuit_seed(seed: int, n: int) -> int:
    return int(np.random.SeedSequence([seed, n]).generate_state(1)[0])


def barren_plateau_contrast(
    n_list=(4, 6, 8, 10),
    depth_factor: int = 1,
    samples: int = 500,
    seed: int = 0,
) -> list[dict]:
    """MC estimates of E||grad f||^2 for tree circuits and deep random circuits.

    Random circuits get ``depth_factor * n**2`` rotations and as many CNOTs and
    use the mean-Z objective.  Tree rows use TT at powers of two and DTT
    otherwise, with input |0...0>.
    """
    rows = []
    for n in n_list:
        zero = init_basis_state(n, "0" * n)
        tree = "tt" if n & (n - 1) == 0 else "dtt"
        rep = verify_gradient_norm_bound(tree, n, zero, "mc", samples=samples, seed=seed)
        rows.append({
            "arch": tree.upper(), "n": n, "n_params": 2 * n - 1,
            "mean": rep.estimate.mean, "stderr": rep.estimate.stderr,
            "lower": rep.lower_bound, "seed": seed,
        })
        gates = depth_factor * n * n
        circ_seed = random_circuit_seed(seed, n)
        circuit = build_random(n, gates, gates, circ_seed)
        obj = Objective.mean_z(circuit, zero)

        def grad_norm_sq(thetas, obj=obj):
            g = shift_gradients(obj, thetas)
            return np.einsum("ij,ij->i", g, g)

        est = mc_param_expectation(grad_norm_sq, circuit.n_params, samples, seed, chunk=256)
        rows.append({
            "arch": "RANDOM", "n": n, "n_params": circuit.n_params,
            "mean": est.mean, "stderr": est.stderr, "lower": None, "seed": circ_seed,
        })
    return rows
