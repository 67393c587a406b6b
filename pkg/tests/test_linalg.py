"""Dense symmetric/triangular linear algebra helpers."""

import numpy as np
import pytest

from tqmc.linalg import (
    LinalgError,
    cholesky,
    gram_schmidt_complete,
    sym_eigen,
    symmetrize,
    tri_matvec,
    tri_solve,
)


class TestTriMatvec:
    def test_identity(self):
        x = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(tri_matvec(np.eye(3), x), x)

    def test_hand_example(self):
        L = np.array([[1.0, 0.0], [2.0, 3.0]])
        assert np.array_equal(tri_matvec(L, np.array([1.0, 1.0])), [1.0, 5.0])

    def test_zero_vector(self):
        L = np.tril(np.arange(9.0).reshape(3, 3) + 1)
        assert np.array_equal(tri_matvec(L, np.zeros(3)), np.zeros(3))


class TestTriSolve:
    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            L = np.tril(rng.standard_normal((4, 4)))
            np.fill_diagonal(L, np.abs(np.diag(L)) + 1e-6)
            x = rng.standard_normal(4)
            y = tri_matvec(L, x)
            err = np.abs(tri_solve(L, y) - x) / (1.0 + np.abs(x))
            assert np.max(err) < 1e-10

    def test_batched(self):
        L = np.array([[2.0, 0.0], [1.0, 4.0]])
        X = np.array([[2.0, 5.0], [4.0, 10.0]])
        Y = X @ L.T
        assert np.allclose(tri_solve(L, Y), X)


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_hand_factorization(self):
        a = np.array([[4.0, 2.0], [2.0, 5.0]])
        assert np.allclose(cholesky(a), [[2.0, 0.0], [1.0, 2.0]])

    def test_reconstruction(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            A = rng.standard_normal((5, 5))
            S = A.T @ A + np.eye(5)
            L = cholesky(S)
            assert np.allclose(L @ L.T, S, atol=1e-10)
            assert np.allclose(np.triu(L, 1), 0.0)

    def test_non_positive_definite_rejected(self):
        with pytest.raises(LinalgError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestSymEigen:
    def test_diagonal_input(self):
        vals, vecs = sym_eigen(np.diag([1.0, 3.0, 2.0]))
        assert np.array_equal(vals, [3.0, 2.0, 1.0])
        # eigenvectors are signed permutation columns
        assert np.allclose(np.abs(vecs).sum(axis=0), 1.0)

    def test_hand_diagonalization(self):
        vals, vecs = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(vals, [3.0, 1.0])
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        assert np.allclose(np.abs(vecs[:, 0]), inv_sqrt2)
        assert np.allclose(np.abs(vecs[:, 1]), inv_sqrt2)

    def test_rank_one_spectrum(self):
        v = np.array([1.0, -2.0, 2.0])
        vals, _ = sym_eigen(np.outer(v, v))
        assert vals[0] == pytest.approx(v @ v, abs=1e-10)
        assert np.max(np.abs(vals[1:])) < 1e-10

    def test_reconstruction_invariant(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            A = symmetrize(rng.standard_normal((6, 6)))
            vals, vecs = sym_eigen(A)
            resid = np.max(np.abs(A @ vecs - vecs * vals))
            assert resid <= 1e-8 * np.max(np.abs(A))
            assert np.allclose(vecs.T @ vecs, np.eye(6), atol=1e-10)

    def test_descending_order_and_sign_convention(self):
        rng = np.random.default_rng(13)
        A = symmetrize(rng.standard_normal((5, 5)))
        vals, vecs = sym_eigen(A)
        assert np.all(np.diff(vals) <= 1e-12)
        for j in range(5):
            assert vecs[np.argmax(np.abs(vecs[:, j])), j] > 0


class TestGramSchmidtComplete:
    def test_orthonormal_completion(self):
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        v_r = q[:, :2]
        v_perp = gram_schmidt_complete(v_r, q[:, 2:])
        full = np.column_stack([v_r, v_perp])
        assert np.allclose(full.T @ full, np.eye(6), atol=1e-10)
