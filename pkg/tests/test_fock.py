import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from coexsim.fock import fock_basis, norm2, representation, transform

BS = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def test_fock_basis_counts():
    assert fock_basis(3, 2).shape == (6, 3)
    assert (fock_basis(4, 3).sum(axis=1) == 3).all()
    assert fock_basis(2, 0).tolist() == [[0, 0]]


def test_hom_bunching():
    occ, amps = transform(np.array([[1, 1]]), np.array([1.0]), BS)
    state = {tuple(o): a for o, a in zip(occ, amps)}
    assert set(state) == {(2, 0), (0, 2)}
    assert state[(2, 0)] == pytest.approx(1 / math.sqrt(2))
    assert state[(0, 2)] == pytest.approx(-1 / math.sqrt(2))


def test_loss_contraction_is_subnormalized():
    m = np.array([[math.sqrt(0.3)]])
    occ, amps = transform(np.array([[2]]), np.array([1.0]), m)
    assert norm2(amps) == pytest.approx(0.09)
    with pytest.raises(ValueError):
        transform(np.array([[1, 0]]), np.array([1.0]), m)


@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 10_000))
def test_representation_is_unitary_and_composes(modes, n, seed):
    u = unitary_group.rvs(modes, random_state=seed)
    w = unitary_group.rvs(modes, random_state=seed + 1)
    ru, basis = representation(u, n)
    rw, _ = representation(w, n)
    assert np.allclose(ru.conj().T @ ru, np.eye(len(basis)), atol=1e-10)
    rwu, _ = representation(w @ u, n)
    assert np.allclose(rw @ ru, rwu, atol=1e-10)
