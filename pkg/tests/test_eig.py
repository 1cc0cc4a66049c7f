from __future__ import annotations

import numpy as np
import pytest

from oracles import generalized_eigvals_by_det_bisection
from xmorph.eig import (
    generalized_residual,
    jacobi_eigh,
    solve_generalized_eig,
)
from xmorph.errors import CholeskyFailure, DimensionMismatch, NotSymmetric


def random_sym(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return 0.5 * (a + a.T)


def random_spd(rng, n, lo=0.5, hi=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * rng.uniform(lo, hi, n)[None, :]) @ q.T


class TestJacobi:
    def test_diagonal_input(self):
        vals, vecs = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
        assert np.allclose(sorted(vals), [-1.0, 2.0, 3.0])
        assert np.allclose(np.abs(vecs), np.eye(3))

    def test_reconstructs_matrix(self, rng):
        a = random_sym(rng, 12)
        vals, vecs = jacobi_eigh(a)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.T, a, atol=1e-10)
        assert np.allclose(vecs.T @ vecs, np.eye(12), atol=1e-10)


class TestSolveGeneralizedEig:
    def test_diagonal_case(self):
        vals, vecs = solve_generalized_eig(np.diag([2.0, 5.0]), np.eye(2))
        assert np.allclose(vals, [2.0, 5.0])
        assert np.allclose(np.abs(vecs), np.eye(2), atol=1e-12)

    def test_a_equals_b_gives_unit_eigenvalues(self, rng):
        b = random_spd(rng, 6)
        vals, _ = solve_generalized_eig(b, b, eps=0.0)
        assert np.allclose(vals, 1.0, atol=1e-10)

    def test_matches_det_bisection_oracle(self, rng):
        for trial in range(5):
            a = random_sym(rng, 5)
            b = random_spd(rng, 5)
            vals, vecs = solve_generalized_eig(a, b, eps=0.0)
            ref = generalized_eigvals_by_det_bisection(a, b)
            assert np.allclose(vals, ref, atol=1e-8)

    def test_b_normalization_and_residual(self, rng):
        a = random_sym(rng, 9)
        b = random_spd(rng, 9)
        eps = 1e-8
        vals, vecs = solve_generalized_eig(a, b, eps=eps)
        b_reg = b + eps * np.eye(9)
        gram = vecs.T @ b_reg @ vecs
        assert np.allclose(np.diag(gram), 1.0, atol=1e-10)
        assert generalized_residual(a, b, eps, vals, vecs) <= \
            1e-8 * np.linalg.norm(a, "fro")

    def test_jacobi_and_lapack_paths_agree(self, rng):
        a = random_sym(rng, 20)
        b = random_spd(rng, 20)
        vj, uj = solve_generalized_eig(a, b, method="jacobi")
        vl, ul = solve_generalized_eig(a, b, method="lapack")
        assert np.allclose(vj, vl, atol=1e-9)
        # Sign convention makes eigenvectors comparable directly.
        assert np.allclose(uj, ul, atol=1e-7)

    def test_large_path_meets_residual_bound(self, rng):
        a = random_sym(rng, 200)
        b = random_spd(rng, 200)
        vals, vecs = solve_generalized_eig(a, b)  # auto -> lapack at n=200
        assert generalized_residual(a, b, 0.0, vals, vecs) <= \
            1e-8 * np.linalg.norm(a, "fro")

    def test_deterministic_and_sign_fixed(self, rng):
        a = random_sym(rng, 7)
        b = random_spd(rng, 7)
        v1, u1 = solve_generalized_eig(a, b)
        v2, u2 = solve_generalized_eig(a, b)
        assert np.array_equal(v1, v2) and np.array_equal(u1, u2)
        lead = np.abs(u1).argmax(axis=0)
        assert np.all(u1[lead, np.arange(7)] > 0)

    def test_not_symmetric(self, rng):
        a = rng.standard_normal((4, 4))
        with pytest.raises(NotSymmetric):
            solve_generalized_eig(a, np.eye(4))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_generalized_eig(np.eye(3), np.eye(4))

    def test_cholesky_failure_when_b_indefinite(self):
        b = np.diag([1.0, -1.0])
        with pytest.raises(CholeskyFailure):
            solve_generalized_eig(np.eye(2), b, eps=0.0)

    def test_regularization_rescues_singular_b(self):
        b = np.diag([1.0, 0.0])
        vals, _ = solve_generalized_eig(np.eye(2), b, eps=1e-6)
        assert np.all(np.isfinite(vals))
