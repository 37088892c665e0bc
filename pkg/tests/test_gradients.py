import numpy as np
import pytest

from ttqnn.circuits import CircuitSpec, build_dtt, build_random, build_sc, build_tt
from ttqnn.gradients import (
    Objective,
    classifier_loss,
    classifier_loss_grad,
    finite_difference_grad,
    objective_value,
    parameter_shift_grad,
)
from ttqnn.simulator import GateOp, PauliString, StateVector, init_basis_state

SINGLE_RY = CircuitSpec(1, (GateOp("RY", (1,), 0),), 1)


def single_ry_objective():
    return Objective(SINGLE_RY, ((PauliString("Z"), 1.0),), init_basis_state(1, "0"))


def test_objective_examples():
    obj = Objective.first_qubit_z(build_tt(2), init_basis_state(2, "00"))
    assert objective_value(obj, np.zeros(3)) == 1.0
    assert objective_value(obj, [np.pi / 2, 0, 0]) == pytest.approx(0.0, abs=1e-15)


def test_objective_validation():
    c = build_tt(2)
    with pytest.raises(ValueError):
        Objective(c, ((PauliString("ZI"), 0.5),))
    with pytest.raises(ValueError):
        Objective(c, ((PauliString("Z"), 1.0),))
    with pytest.raises(ValueError):
        objective_value(Objective.first_qubit_z(c, init_basis_state(2, "00")), [0.0])


def test_mean_z_recovers_raw_average():
    rng = np.random.default_rng(0)
    c = build_tt(4)
    psi = StateVector.from_vector(rng.standard_normal(16))
    obj = Objective.mean_z(c, psi)
    theta = rng.uniform(0, 6, 7)
    f = objective_value(obj, theta)
    zs = [objective_value(Objective(c, ((PauliString.single(4, q, "Z"), 1.0),), psi), theta)
          for q in range(1, 5)]
    assert 2 * f - 1 == pytest.approx(np.mean([2 * z - 1 for z in zs]), abs=1e-14)


@pytest.mark.parametrize("theta, expected", [(0.0, 0.0), (np.pi / 8, -np.sin(np.pi / 4))])
def test_single_rotation_shift_rule(theta, expected):
    g = parameter_shift_grad(single_ry_objective(), [theta])
    assert g.values[0] == pytest.approx(expected, abs=1e-15)


def test_finite_difference_single_rotation():
    g = finite_difference_grad(single_ry_objective(), [np.pi / 8], 1e-5)
    assert abs(g.values[0] + np.sin(np.pi / 4)) < 1e-9


def test_finite_difference_constant_objective():
    empty = CircuitSpec(2, (), 0)
    obj = Objective.first_qubit_z(empty, init_basis_state(2, "01"))
    assert finite_difference_grad(obj, np.zeros(0)).values.size == 0


CIRCUITS = [build_tt(2), build_tt(4), build_sc(3, 1), build_sc(5, 3), build_dtt(5),
            build_random(4, 7, 3, 2), build_random(3, 6, 4, 7)]


@pytest.mark.parametrize("c", CIRCUITS, ids=lambda c: f"{c.arch}{c.n_qubits}")
def test_shift_rule_matches_finite_differences(c):
    rng = np.random.default_rng(1)
    for _ in range(5):
        psi = StateVector.from_vector(rng.standard_normal(2**c.n_qubits))
        obj = Objective.for_circuit(c, psi)
        theta = rng.uniform(0, 2 * np.pi, c.n_params)
        ps = parameter_shift_grad(obj, theta).values
        fd = finite_difference_grad(obj, theta).values
        assert np.max(np.abs(ps - fd)) < 1e-8


def test_shared_slot_gradient():
    # same slot used twice: product rule via one shift pair per occurrence
    c = CircuitSpec(2, (GateOp("RY", (1,), 0), GateOp("CNOT", (1, 2)), GateOp("RY", (2,), 0, -1)), 1)
    obj = Objective(c, ((PauliString("ZZ"), 0.5), (PauliString("IZ"), 0.5)), init_basis_state(2, "00"))
    for theta in (0.3, 1.1, 2.0):
        assert parameter_shift_grad(obj, [theta]).values[0] == pytest.approx(
            finite_difference_grad(obj, [theta]).values[0], abs=1e-8)


def test_gradient_entries_bounded():
    rng = np.random.default_rng(2)
    c = build_sc(4, 2)
    for _ in range(20):
        obj = Objective.first_qubit_z(c, StateVector.from_vector(rng.standard_normal(16)))
        g = parameter_shift_grad(obj, rng.uniform(0, 6.3, 7))
        assert np.all(np.abs(g.values) <= 1 + 1e-12) and g.norm_sq <= 2 * 4 - 1


def test_shot_gradient_is_deterministic():
    obj = Objective.first_qubit_z(build_tt(4), init_basis_state(4, "0000"))
    theta = np.linspace(0, 1, 7)
    a = parameter_shift_grad(obj, theta, shots=200, seed=3)
    b = parameter_shift_grad(obj, theta, shots=200, seed=3)
    assert np.array_equal(a.values, b.values) and a.mode == "shots"


# ---------------------------------------------------------------------------
# classifier loss
# ---------------------------------------------------------------------------


class FixedF:
    """Batches whose f values are known: qubit 1 of |0> rotated so that f = cos^2."""

    @staticmethod
    def batch(fs, labels):
        states = [StateVector(1, [np.sqrt(f), np.sqrt(1 - f)]) for f in fs]
        return list(zip(states, labels))


EMPTY1 = CircuitSpec(1, (), 0)
TEMPLATE1 = Objective.first_qubit_z(EMPTY1)


@pytest.mark.parametrize("fs, ys, b, expected", [
    ([1.0, 0.0], [1, 0], 0.0, 0.0),
    ([0.5], [0], 0.0, 0.25),
    ([0.2, 0.9], [0, 1], 0.1, 0.045),
])
def test_classifier_loss_examples(fs, ys, b, expected):
    assert classifier_loss(np.zeros(0), b, FixedF.batch(fs, ys), TEMPLATE1) == pytest.approx(expected)


def test_classifier_loss_rejects_empty():
    with pytest.raises(ValueError):
        classifier_loss(np.zeros(0), 0.0, [], TEMPLATE1)


def test_perfect_fit_zero_gradient():
    g, gb = classifier_loss_grad(np.zeros(0), 0.0, FixedF.batch([1.0, 0.0], [1, 0]), TEMPLATE1)
    assert g.values.size == 0 and gb == 0.0


def _loss_fd(theta, b, batch, template, h=1e-5):
    gt = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        gt[j] = (classifier_loss(theta + e, b, batch, template)
                 - classifier_loss(theta - e, b, batch, template)) / (2 * h)
    gb = (classifier_loss(theta, b + h, batch, template) - classifier_loss(theta, b - h, batch, template)) / (2 * h)
    return gt, gb


@pytest.mark.parametrize("c", [build_tt(4), build_sc(3, 2), build_random(4, 7, 3, 1)], ids=lambda c: c.arch)
def test_classifier_gradient_matches_finite_differences(c):
    rng = np.random.default_rng(4)
    template = Objective.for_circuit(c)
    batch = [(StateVector.from_vector(rng.standard_normal(2**c.n_qubits)), int(rng.integers(2)))
             for _ in range(4)]
    theta, b = rng.uniform(0, 6.3, c.n_params), 0.13
    g, gb = classifier_loss_grad(theta, b, batch, template)
    fd_t, fd_b = _loss_fd(theta, b, batch, template)
    assert np.max(np.abs(g.values - fd_t)) < 1e-8
    assert abs(gb - fd_b) < 1e-8


def test_shot_gradient_converges_to_exact():
    c = build_tt(2)
    template = Objective.first_qubit_z(c)
    rng = np.random.default_rng(5)
    batch = [(StateVector.from_vector(rng.standard_normal(4)), y) for y in (0, 1)]
    theta = rng.uniform(0, 6.3, 3)
    exact, exact_b = classifier_loss_grad(theta, 0.0, batch, template)
    shots = 10**6
    noisy, noisy_b = classifier_loss_grad(theta, 0.0, batch, template, shots=shots, seed=0)
    # each gradient entry combines a handful of f estimates, each with sd <= 0.5/sqrt(shots)
    sigma = 4 * 0.5 / np.sqrt(shots)
    assert np.all(np.abs(noisy.values - exact.values) <= 3 * sigma * 2)
    assert abs(noisy_b - exact_b) <= 3 * sigma
