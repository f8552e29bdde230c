"""Polarization-qubit linear algebra.

Basis ordering is ``|H>, |V>`` for one qubit and ``|HH>, |HV>, |VH>, |VV>``
for two (first factor is the left tensor slot).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-9
EIGEN_FLOOR = -1e-9
TRACE_TOL = 1e-9
NORM_TOL = 1e-12

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)


class StateError(ValueError):
    """Raised for inputs that violate state invariants."""


@dataclass(frozen=True)
class ClassicalBounds:
    """Thresholds that separate quantum from classically achievable results."""

    fidelity_bound: float = 2.0 / 3.0
    fringe_visibility_bound: float = 1.0 / 3.0
    hom_bound: float = 0.5
    chsh_visibility_bound: float = 1.0 / math.sqrt(2.0)


CLASSICAL_BOUNDS = ClassicalBounds()


@dataclass(frozen=True, eq=False)
class PureState:
    """Single-qubit pure state ``alpha|H> + beta|V>``; equality ignores global phase."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (2,):
            raise StateError("a polarization qubit has exactly two amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm^2={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PureState):
            return NotImplemented
        return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1.0) < NORM_TOL

    def __hash__(self) -> int:
        return hash(tuple(np.round(self.bloch(), 9)))

    @classmethod
    def from_amplitudes(cls, alpha: complex, beta: complex) -> "PureState":
        vec = np.array([alpha, beta], dtype=complex)
        return cls(vec / np.linalg.norm(vec))

    @classmethod
    def from_label(cls, label: str) -> "PureState":
        return cls(_LABEL_VECTORS[label.upper()].copy())

    @classmethod
    def from_bloch(cls, vector: Sequence[float]) -> "PureState":
        x, y, z = _unit(vector)
        theta = math.atan2(math.hypot(x, y), z)
        phi = math.atan2(y, x)
        return cls(np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)]))

    def bloch(self) -> np.ndarray:
        return bloch_vector(self.density())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def orthogonal(self) -> "PureState":
        a, b = self.amplitudes
        return PureState(np.array([-np.conj(b), np.conj(a)]))


_S2 = 1.0 / math.sqrt(2.0)
_LABEL_VECTORS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S2, _S2], dtype=complex),
    "A": np.array([_S2, -_S2], dtype=complex),
    "R": np.array([_S2, 1j * _S2], dtype=complex),
    "L": np.array([_S2, -1j * _S2], dtype=complex),
}
TOMOGRAPHY_LABELS = ("H", "V", "D", "A", "R", "L")


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive, unit-trace matrix on one or two qubits.

    Construction validates the invariants; eigenvalues down to ``-1e-9`` are
    accepted as rounding noise.
    """

    entries: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise StateError("density matrix must be square")
        d = rho.shape[0]
        dims = tuple(self.dims) if self.dims else ((2,) if d == 2 else (2, 2) if d == 4 else (d,))
        if int(np.prod(dims)) != d:
            raise StateError(f"subsystem dims {dims} do not match size {d}")
        check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @classmethod
    def maximally_mixed(cls, d: int = 2) -> "DensityMatrix":
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def from_bloch(cls, vector: Sequence[float]) -> "DensityMatrix":
        r = np.asarray(vector, dtype=float)
        if np.linalg.norm(r) > 1 + 1e-12:
            raise StateError("Bloch vector outside the unit ball")
        return cls(0.5 * (SIGMA_I + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z))

    @classmethod
    def physical(cls, matrix: np.ndarray, dims: tuple[int, ...] = ()) -> "DensityMatrix":
        """Hermitize, clip tiny negative eigenvalues and renormalize."""
        m = np.asarray(matrix, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        w, v = np.linalg.eigh(m)
        w = np.clip(w, 0.0, None)
        m = (v * w) @ v.conj().T
        return cls(m / np.trace(m).real, dims)


def check_density(rho: np.ndarray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise StateError("matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateError(f"trace {tr.real:.12g} differs from 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < EIGEN_FLOOR:
        raise StateError("matrix has a negative eigenvalue")


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    m = np.asarray(rho, dtype=complex)
    check_density(m)
    return m


def _unit(vector: Sequence[float]) -> np.ndarray:
    v = np.asarray(vector, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > NORM_TOL:
        raise StateError(f"analyzer Bloch vector must have unit length, got {n!r}")
    return v


@dataclass(frozen=True)
class AnalyzerSetting:
    """Projective polarization measurement given by its Bloch-sphere axis."""

    bloch_vector: tuple[float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bloch_vector", tuple(float(x) for x in _unit(self.bloch_vector)))

    @classmethod
    def from_label(cls, label: str) -> "AnalyzerSetting":
        return cls(tuple(PureState.from_label(label).bloch()))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "AnalyzerSetting":
        v = (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))
        return cls(tuple(v / np.linalg.norm(v)))

    def state(self) -> PureState:
        return PureState.from_bloch(self.bloch_vector)

    def projector(self) -> np.ndarray:
        r = self.bloch_vector
        return 0.5 * (SIGMA_I + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)

    def orthogonal(self) -> "AnalyzerSetting":
        return AnalyzerSetting(tuple(-x for x in self.bloch_vector))


def analyzer(label: str) -> AnalyzerSetting:
    return AnalyzerSetting.from_label(label)


def bloch_vector(rho) -> np.ndarray:
    m = _as_matrix(rho)
    return np.array([np.trace(m @ p).real for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


class BellState(Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def vector(self) -> np.ndarray:
        s = _S2
        return {
            BellState.PHI_PLUS: np.array([s, 0, 0, s], dtype=complex),
            BellState.PHI_MINUS: np.array([s, 0, 0, -s], dtype=complex),
            BellState.PSI_PLUS: np.array([0, s, s, 0], dtype=complex),
            BellState.PSI_MINUS: np.array([0, s, -s, 0], dtype=complex),
        }[self]

    def density(self) -> DensityMatrix:
        v = self.vector
        return DensityMatrix(np.outer(v, v.conj()))


def fidelity(rho, psi: PureState) -> float:
    """Overlap ``<psi|rho|psi>`` of a single-qubit state with a pure target."""
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise StateError("fidelity expects a single-qubit density matrix")
    v = psi.amplitudes
    value = np.vdot(v, m @ v)
    return float(min(1.0, max(0.0, value.real)))


def average_fidelity(f_poles: float, f_equator: float) -> float:
    """Bloch-sphere average from the pole and equator fidelities."""
    for f in (f_poles, f_equator):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fidelity {f!r} outside [0, 1]")
    return f_poles / 3.0 + 2.0 * f_equator / 3.0


def _check_rates(r_max: float, r_min: float) -> None:
    if r_min < 0 or r_max < r_min:
        raise ValueError(f"need r_max >= r_min >= 0, got ({r_max!r}, {r_min!r})")
    if r_max <= 0:
        raise ValueError("r_max must be positive")


def visibility_twofold(r_max: float, r_min: float) -> float:
    _check_rates(r_max, r_min)
    return (r_max - r_min) / (r_max + r_min)


def visibility_hom(r_max: float, r_min: float) -> float:
    _check_rates(r_max, r_min)
    return (r_max - r_min) / r_max


def tensor(a, b) -> DensityMatrix:
    ma, mb = _as_matrix(a), _as_matrix(b)
    da = a.dims if isinstance(a, DensityMatrix) else (ma.shape[0],)
    db = b.dims if isinstance(b, DensityMatrix) else (mb.shape[0],)
    return DensityMatrix(np.kron(ma, mb), tuple(da) + tuple(db))


def partial_trace(rho, subsystem: int) -> DensityMatrix:
    """Trace out subsystem ``subsystem`` (0-based) of a multi-qubit state."""
    m = _as_matrix(rho)
    dims = rho.dims if isinstance(rho, DensityMatrix) else (2,) * int(round(math.log2(m.shape[0])))
    if not 0 <= subsystem < len(dims) or len(dims) < 2:
        raise StateError(f"cannot trace subsystem {subsystem} of dims {dims}")
    n = len(dims)
    t = m.reshape(dims + dims)
    t = np.trace(t, axis1=subsystem, axis2=subsystem + n)
    keep = tuple(d for i, d in enumerate(dims) if i != subsystem)
    d = int(np.prod(keep))
    return DensityMatrix(t.reshape(d, d), keep)


def trace_distance(a, b) -> float:
    diff = _as_matrix(a) - _as_matrix(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


def teleported_map(outcome: BellState, shared: BellState) -> np.ndarray:
    """Linear map taking Alice's input amplitudes to Bob's conditional ones.

    Qubit 1 is Alice's input, qubits 2 and 3 hold ``shared`` and qubit 3
    stays with Bob. The returned matrix is unitary (the projection amplitude
    1/2 is removed).
    """
    bra = outcome.vector.conj().reshape(2, 2)
    shared_t = shared.vector.reshape(2, 2)
    # <B|_{12} (|psi>_1 |S>_{23}) = sum_{i,j} B*_{ij} psi_i S_{jk}
    return 2.0 * np.einsum("ij,jk->ki", bra, shared_t)


_CANONICAL = {"I": SIGMA_I, "Z": SIGMA_Z, "X": SIGMA_X, "XZ": SIGMA_X @ SIGMA_Z}


def pauli_correction(outcome: BellState, shared: BellState) -> np.ndarray:
    """Pauli that Bob applies after ``outcome`` to recover Alice's qubit.

    Global phase is dropped: the canonical representative among
    ``I, Z, X, XZ`` is returned.
    """
    inverse = teleported_map(outcome, shared).conj().T
    for mat in _CANONICAL.values():
        overlap = np.trace(mat.conj().T @ inverse) / 2.0
        if abs(abs(overlap) - 1.0) < 1e-9:
            return mat.copy()
    raise AssertionError("teleportation map is not a Pauli")  # pragma: no cover
