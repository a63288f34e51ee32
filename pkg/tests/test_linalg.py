import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activemc.linalg import check_symmetric, fix_signs, jacobi_eigh, sym_eig


def _random_symmetric(m, seed):
    B = np.random.default_rng(seed).standard_normal((m, m))
    return B + B.T


class TestCheckSymmetric:
    def test_accepts_symmetric(self):
        check_symmetric(np.array([[2.0, 1.0], [1.0, 2.0]]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            check_symmetric(np.array([[2.0, 1.0], [1.1, 2.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            check_symmetric(np.ones((2, 3)))


class TestFixSigns:
    def test_largest_entry_positive(self):
        W = fix_signs(np.array([[0.6, 0.8], [-0.8, 0.6]]))
        np.testing.assert_array_equal(W, [[-0.6, 0.8], [0.8, 0.6]])

    def test_tie_goes_to_lowest_index(self):
        W = fix_signs(np.array([[-1.0], [1.0]]) / np.sqrt(2))
        assert W[0, 0] > 0


class TestJacobi:
    def test_diagonal(self):
        lam, W = jacobi_eigh(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_array_equal(lam, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(np.abs(W), np.eye(3)[:, [1, 2, 0]])

    def test_two_by_two(self):
        lam, W = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]), method="jacobi")
        np.testing.assert_allclose(lam, [3.0, 1.0], rtol=1e-15)
        np.testing.assert_allclose(W, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)

    def test_zero_matrix(self):
        lam, W = jacobi_eigh(np.zeros((3, 3)))
        np.testing.assert_array_equal(lam, 0)
        np.testing.assert_array_equal(W, np.eye(3))

    @pytest.mark.parametrize("seed", range(5))
    def test_residual_and_orthogonality(self, seed):
        A = _random_symmetric(12, seed)
        lam, W = jacobi_eigh(A)
        scale = np.abs(lam).max()
        assert np.linalg.norm(A @ W - W * lam) <= 1e-13 * scale
        assert np.linalg.norm(W.T @ W - np.eye(12)) <= 1e-13

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_lapack(self, seed):
        A = _random_symmetric(9, 100 + seed)
        l1, W1 = sym_eig(A, "jacobi")
        l2, W2 = sym_eig(A, "lapack")
        np.testing.assert_allclose(l1, l2, rtol=0, atol=1e-13 * np.abs(l2).max())
        # distinct eigenvalues, same sign convention: vectors agree
        np.testing.assert_allclose(W1, W2, atol=1e-10)


class TestSymEig:
    def test_descending(self):
        lam, _ = sym_eig(_random_symmetric(7, 3))
        assert np.all(np.diff(lam) <= 0)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            sym_eig(np.eye(2), method="qr")


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31 - 1))
def test_reconstruction_property(m, seed):
    A = _random_symmetric(m, seed)
    for method in ("lapack", "jacobi"):
        lam, W = sym_eig(A, method)
        scale = max(1.0, np.abs(lam).max())
        assert np.linalg.norm(A - (W * lam) @ W.T) <= 1e-12 * scale
        assert np.linalg.norm(W.T @ W - np.eye(m)) <= 1e-10 * m
        rows = np.argmax(np.abs(W), axis=0)
        assert np.all(W[rows, np.arange(m)] > 0)
