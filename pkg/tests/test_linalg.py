import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resonet.exceptions import NumericalFailure
from resonet.linalg import jacobi_eigh, jacobi_eigvalsh, off_norm

from conftest import random_symmetric
from oracles import charpoly_faddeev, sorted_real_roots


@given(n=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_matches_characteristic_polynomial_roots(n, seed):
    h = random_symmetric(np.random.default_rng(seed), n)
    expected = sorted_real_roots(charpoly_faddeev(h))
    assert np.allclose(jacobi_eigvalsh(h), expected, atol=1e-8, rtol=0)


@given(n=st.integers(1, 16), seed=st.integers(0, 10_000))
def test_reconstruction_and_orthogonality(n, seed):
    h = random_symmetric(np.random.default_rng(seed), n)
    w, v = jacobi_eigh(h)
    scale = np.linalg.norm(h)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - h)) < 1e-12 * scale
    assert np.max(np.abs(v.T @ v - np.eye(n))) < 1e-12


def test_agrees_with_lapack_for_size_32(rng):
    h = random_symmetric(rng, 32)
    assert np.allclose(jacobi_eigvalsh(h), np.linalg.eigvalsh(h), atol=1e-11 * np.linalg.norm(h))


def test_zero_and_diagonal_matrices():
    assert np.array_equal(jacobi_eigvalsh(np.zeros((3, 3))), np.zeros(3))
    w, v = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    assert list(w) == [-1.0, 2.0, 3.0]
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])


def test_non_convergence_reports_diagnostics(rng):
    h = random_symmetric(rng, 8)
    with pytest.raises(NumericalFailure) as info:
        jacobi_eigh(h, max_sweeps=1)
    assert "sweeps" in info.value.diagnostics


def test_rejects_non_symmetric():
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_off_norm():
    a = np.array([[5.0, 3.0], [4.0, -2.0]])
    assert off_norm(a) == 5.0
