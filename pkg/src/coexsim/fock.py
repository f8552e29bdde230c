"""Exact multimode Fock-space arithmetic for passive linear optics.

States are stored as ``(occ, amps)``: an integer array of occupation
numbers (one row per basis state) and the matching normalized-Fock
amplitudes. A passive map ``a_j^dag -> sum_i M[i, j] b_i^dag`` is applied by
expanding creation-operator polynomials; exponent tuples are packed into
integers so that polynomial products become array additions.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import gammaln


def fock_basis(n_modes: int, n_photons: int) -> np.ndarray:
    """All occupation tuples of ``n_photons`` in ``n_modes`` (lexicographic, descending)."""
    rows = []
    for combo in combinations_with_replacement(range(n_modes), n_photons):
        row = np.zeros(n_modes, dtype=np.int64)
        for m in combo:
            row[m] += 1
        rows.append(row)
    if not rows:
        return np.zeros((0, n_modes), dtype=np.int64)
    return np.array(rows, dtype=np.int64)


def _factorial_sqrt(occ: np.ndarray) -> np.ndarray:
    return np.exp(0.5 * gammaln(occ + 1.0).sum(axis=-1))


class _Packer:
    def __init__(self, n_modes: int, max_photons: int):
        self.base = max_photons + 1
        if self.base ** n_modes >= 2**62:
            raise OverflowError("too many modes/photons for packed exponents")
        self.weights = self.base ** np.arange(n_modes - 1, -1, -1, dtype=np.int64)

    def unpack(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty((len(codes), len(self.weights)), dtype=np.int64)
        rem = codes.copy()
        for i, w in enumerate(self.weights):
            out[:, i], rem = np.divmod(rem, w)
        return out


def _aggregate(codes: np.ndarray, coefs: np.ndarray, tol: float = 0.0):
    uniq, inv = np.unique(codes, return_inverse=True)
    summed = np.bincount(inv, weights=coefs.real, minlength=len(uniq)) + 1j * np.bincount(
        inv, weights=coefs.imag, minlength=len(uniq)
    )
    keep = np.abs(summed) > tol
    return uniq[keep], summed[keep]


def _mul(a, b, tol=0.0):
    codes = (a[0][:, None] + b[0][None, :]).ravel()
    coefs = np.outer(a[1], b[1]).ravel()
    return _aggregate(codes, coefs, tol)


def transform(occ: np.ndarray, amps: np.ndarray, matrix: np.ndarray, tol: float = 0.0):
    """Apply the linear map ``matrix`` (n_out x n_in) to a Fock superposition.

    The map need not be unitary; a contraction models loss into discarded
    modes and yields an unnormalized output.
    """
    occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    matrix = np.asarray(matrix, dtype=complex)
    n_out, n_in = matrix.shape
    if occ.shape[1] != n_in:
        raise ValueError(f"state has {occ.shape[1]} modes, map expects {n_in}")
    max_n = int(occ.sum(axis=1).max()) if len(occ) else 0
    packer = _Packer(n_out, max_n)
    powers: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def linear(j):
        nz = np.flatnonzero(matrix[:, j])
        return packer.weights[nz], matrix[nz, j]

    def power(j, n):
        key = (j, n)
        if key not in powers:
            powers[key] = (np.zeros(1, dtype=np.int64), np.ones(1, dtype=complex)) if n == 0 else _mul(power(j, n - 1), linear(j))
        return powers[key]

    all_codes, all_coefs = [], []
    norms = _factorial_sqrt(occ)
    for row, amp, norm in zip(occ, amps, norms):
        if amp == 0:
            continue
        poly = (np.zeros(1, dtype=np.int64), np.array([amp / norm], dtype=complex))
        for j in np.flatnonzero(row):
            poly = _mul(poly, power(j, int(row[j])))
        all_codes.append(poly[0])
        all_coefs.append(poly[1])
    if not all_codes:
        return np.zeros((0, n_out), dtype=np.int64), np.zeros(0, dtype=complex)
    codes, coefs = _aggregate(np.concatenate(all_codes), np.concatenate(all_coefs), tol)
    out_occ = packer.unpack(codes)
    return out_occ, coefs * _factorial_sqrt(out_occ)


def representation(matrix: np.ndarray, n_photons: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of the passive map on the ``n_photons`` sector, with its basis."""
    matrix = np.asarray(matrix, dtype=complex)
    return _representation(matrix.tobytes(), matrix.shape, n_photons)


@lru_cache(maxsize=4096)
def _representation(raw: bytes, shape: tuple[int, int], n_photons: int):
    matrix = np.frombuffer(raw, dtype=complex).reshape(shape)
    basis_in = fock_basis(shape[1], n_photons)
    basis_out = fock_basis(shape[0], n_photons)
    index = {tuple(r): i for i, r in enumerate(basis_out)}
    rep = np.zeros((len(basis_out), len(basis_in)), dtype=complex)
    for col, row in enumerate(basis_in):
        occ, amps = transform(row[None, :], np.ones(1), matrix)
        for o, a in zip(occ, amps):
            rep[index[tuple(o)], col] = a
    rep.setflags(write=False)
    return rep, basis_out


def norm2(amps: np.ndarray) -> float:
    return float(np.vdot(amps, amps).real)
