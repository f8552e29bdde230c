import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coexsim.qstate import (
    CLASSICAL_BOUNDS,
    TOMOGRAPHY_LABELS,
    AnalyzerSetting,
    BellState,
    DensityMatrix,
    PureState,
    StateError,
    analyzer,
    average_fidelity,
    bloch_vector,
    fidelity,
    partial_trace,
    pauli_correction,
    tensor,
    trace_distance,
    visibility_hom,
    visibility_twofold,
)

H, V = PureState.from_label("H"), PureState.from_label("V")
unit = st.floats(-1, 1, allow_nan=False)


@st.composite
def bloch_points(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([0.0, 0.0, 1.0]), 1.0
    return v / n


@st.composite
def mixed_states(draw):
    r = draw(bloch_points()) * draw(st.floats(0, 1))
    return DensityMatrix.from_bloch(r)


def test_pure_state_validation():
    with pytest.raises(StateError):
        PureState(np.array([1.0, 1.0]))
    with pytest.raises(StateError):
        PureState(np.array([1.0, 0.0, 0.0]))
    assert PureState.from_amplitudes(3, 4j) == PureState(np.array([0.6, 0.8j]))


def test_pure_state_equality_ignores_global_phase():
    psi = PureState.from_label("D")
    assert PureState(np.exp(0.7j) * psi.amplitudes) == psi
    assert psi != PureState.from_label("A")
    assert hash(PureState(-psi.amplitudes)) == hash(psi)


def test_density_matrix_invariants():
    with pytest.raises(StateError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(StateError):
        DensityMatrix(np.eye(2))
    with pytest.raises(StateError):
        DensityMatrix(np.diag([1.5, -0.5]))
    DensityMatrix(np.diag([1 + 5e-10, -5e-10]))  # inside the eigenvalue floor


def test_analyzer_labels_and_orthogonal():
    assert np.allclose(analyzer("H").bloch_vector, (0, 0, 1))
    assert np.allclose(analyzer("D").bloch_vector, (1, 0, 0))
    assert np.allclose(analyzer("R").bloch_vector, (0, 1, 0))
    assert np.allclose(analyzer("A").orthogonal().bloch_vector, analyzer("D").bloch_vector)
    with pytest.raises(StateError):
        AnalyzerSetting((1.0, 1.0, 0.0))


def test_classical_bounds():
    assert CLASSICAL_BOUNDS.fidelity_bound == 2 / 3
    assert CLASSICAL_BOUNDS.fringe_visibility_bound == 1 / 3
    assert CLASSICAL_BOUNDS.hom_bound == 0.5
    assert CLASSICAL_BOUNDS.chsh_visibility_bound == 1 / math.sqrt(2)
    with pytest.raises(AttributeError):
        CLASSICAL_BOUNDS.hom_bound = 0.4


def test_fidelity_examples():
    assert fidelity(H.density(), H) == 1.0
    for lab in TOMOGRAPHY_LABELS:
        assert fidelity(DensityMatrix.maximally_mixed(), PureState.from_label(lab)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(StateError):
        fidelity(np.array([[0.5, 0.5], [0.0, 0.5]]), H)
    with pytest.raises(StateError):
        fidelity(np.eye(2), H)


def test_average_fidelity_examples():
    # published per-state fidelities give the published average
    assert average_fidelity((0.975 + 0.958) / 2, (0.875 + 0.855) / 2) == pytest.approx(0.8988333333333333, abs=1e-15)
    assert round(average_fidelity((0.975 + 0.958) / 2, (0.875 + 0.855) / 2), 3) == 0.899
    assert average_fidelity(1.0, 1.0) == 1.0
    assert average_fidelity(0.5, 0.5) == 0.5
    with pytest.raises(ValueError):
        average_fidelity(1.1, 0.5)


def test_visibility_examples():
    assert visibility_twofold(200, 0) == 1.0
    assert visibility_twofold(200, 5) == pytest.approx(195 / 205)
    assert round(visibility_twofold(200, 5), 4) == 0.9512
    assert visibility_hom(100, 50) == 0.5
    assert visibility_hom(100, 0) == 1.0
    for bad in ((5, 10), (0, 0), (10, -1)):
        with pytest.raises(ValueError):
            visibility_twofold(*bad)
        with pytest.raises(ValueError):
            visibility_hom(*bad)


def _teleport_oracle(psi: np.ndarray, outcome: BellState, shared: BellState) -> np.ndarray:
    """Bob's state after projecting qubits 1,2 of |psi>|shared> on ``outcome`` (explicit 8-dim vectors)."""
    full = np.kron(psi, shared.vector)  # qubit order 1,2,3
    proj = np.kron(np.outer(outcome.vector, outcome.vector.conj()), np.eye(2))
    post = proj @ full
    # qubits 1,2 are now in ``outcome``; read off qubit 3
    bob = np.kron(outcome.vector.conj(), np.eye(2)) @ post
    return bob / np.linalg.norm(bob)


def test_pauli_correction_examples():
    assert np.allclose(pauli_correction(BellState.PSI_MINUS, BellState.PSI_MINUS), np.eye(2))
    z = np.diag([1, -1])
    c = pauli_correction(BellState.PSI_PLUS, BellState.PSI_MINUS)
    assert abs(abs(np.trace(z.conj().T @ c)) / 2 - 1) < 1e-12
    # the explicit projection oracle gives sigma_x for (phi-, psi-) and sigma_x sigma_z for (phi+, psi-)
    x = np.array([[0, 1], [1, 0]])
    for outcome, expected in ((BellState.PHI_MINUS, x), (BellState.PHI_PLUS, x @ z)):
        c = pauli_correction(outcome, BellState.PSI_MINUS)
        assert abs(abs(np.trace(expected.conj().T @ c)) / 2 - 1) < 1e-12
        bob = _teleport_oracle(PureState.from_label("R").amplitudes, outcome, BellState.PSI_MINUS)
        assert abs(np.vdot(PureState.from_label("R").amplitudes, expected @ bob)) ** 2 == pytest.approx(1.0)


@given(bloch_points(), st.sampled_from(list(BellState)), st.sampled_from(list(BellState)))
def test_pauli_correction_recovers_input(r, outcome, shared):
    psi = PureState.from_bloch(r)
    bob = _teleport_oracle(psi.amplitudes, outcome, shared)
    fixed = pauli_correction(outcome, shared) @ bob
    assert abs(np.vdot(psi.amplitudes, fixed)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_tensor_and_partial_trace_examples():
    hv = tensor(H.density(), V.density())
    e = np.zeros(4)
    e[1] = 1
    assert np.allclose(hv.entries, np.outer(e, e))
    for side in (0, 1):
        assert np.allclose(partial_trace(BellState.PSI_MINUS.density(), side).entries, np.eye(2) / 2)
    with pytest.raises(StateError):
        partial_trace(H.density(), 0)
    with pytest.raises(StateError):
        partial_trace(hv, 2)


@given(mixed_states(), mixed_states())
def test_partial_trace_of_product(a, b):
    prod = tensor(a, b)
    assert np.allclose(partial_trace(prod, 1).entries, a.entries, atol=1e-12)
    assert np.allclose(partial_trace(prod, 0).entries, b.entries, atol=1e-12)


@given(mixed_states(), mixed_states(), bloch_points(), st.floats(0, 1))
def test_fidelity_is_linear(a, b, r, p):
    psi = PureState.from_bloch(r)
    mix = DensityMatrix(p * a.entries + (1 - p) * b.entries)
    assert fidelity(mix, psi) == pytest.approx(p * fidelity(a, psi) + (1 - p) * fidelity(b, psi), abs=1e-12)
    assert fidelity(psi.density(), psi) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(1e-3, 1e6), st.floats(0, 1), st.floats(1e-3, 1e3))
def test_visibility_scale_invariance(r_max, frac, k):
    r_min = r_max * frac
    assert visibility_twofold(k * r_max, k * r_min) == pytest.approx(visibility_twofold(r_max, r_min), abs=1e-12)
    assert visibility_hom(k * r_max, k * r_min) == pytest.approx(visibility_hom(r_max, r_min), abs=1e-12)


@given(bloch_points())
def test_bloch_round_trip(r):
    assert np.allclose(PureState.from_bloch(r).bloch(), r, atol=1e-12)
    assert np.allclose(bloch_vector(DensityMatrix.from_bloch(r)), r, atol=1e-12)


@given(mixed_states(), mixed_states())
def test_trace_distance_bounds(a, b):
    d = trace_distance(a, b)
    assert -1e-12 <= d <= 1 + 1e-12
    assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-12)


def test_physical_projection():
    rho = DensityMatrix.physical(np.diag([1.2, -0.2]))
    assert np.allclose(rho.entries, np.diag([1.0, 0.0]))
