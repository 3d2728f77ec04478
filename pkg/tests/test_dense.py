import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contoureig.dense import (as_matrix, eig_dense, eig_reduced_gep, eigvals_dense, lu_factor,
                              lu_solve, norm2_estimate, qr_orthonormalize, svd)
from contoureig.errors import (DimensionMismatch, RankDeficient, SingularMatrix,
                               SingularReducedB)

PROPS = settings(max_examples=20, deadline=None)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def sorted_vals(v):
    v = np.asarray(v)
    return v[np.lexsort((np.round(v.imag, 6), np.round(v.real, 6)))]


def test_as_matrix_is_column_major_complex():
    A = as_matrix([[1, 2], [3, 4]])
    assert A.dtype == np.complex128 and A.flags.f_contiguous
    with pytest.raises(ValueError):
        as_matrix([[np.nan]])


class TestLU:
    def test_identity(self):
        f = lu_factor(np.eye(3))
        assert np.allclose(f.factors, np.eye(3))
        assert list(f.pivots) == [0, 1, 2]

    def test_permutation_needs_pivoting(self):
        f = lu_factor([[0, 1], [1, 0]])
        assert np.allclose(lu_solve(f, [1, 0]).ravel(), [0, 1])

    def test_diagonal(self):
        x = lu_solve(lu_factor(np.diag([2.0, 4.0])), np.ones((2, 1)))
        assert np.allclose(x.ravel(), [0.5, 0.25])

    def test_identity_solve_returns_rhs(self):
        R = crandn(np.random.default_rng(0), 4, 3)
        assert np.allclose(lu_solve(lu_factor(np.eye(4)), R), R)

    def test_random_50(self):
        rng = np.random.default_rng(1)
        M, X = crandn(rng, 50, 50), crandn(rng, 50, 4)
        Y = lu_solve(lu_factor(M), M @ X)
        assert np.linalg.norm(Y - X) <= 1e-10 * np.linalg.norm(X)

    def test_random_30_residual(self):
        rng = np.random.default_rng(2)
        M, b = crandn(rng, 30, 30), crandn(rng, 30, 1)
        x = lu_solve(lu_factor(M), b)
        assert np.linalg.norm(M @ x - b) <= 1e-11 * np.linalg.norm(M, 2) * np.linalg.norm(x)

    def test_blocked_path_and_reconstruct(self):
        rng = np.random.default_rng(3)
        M = crandn(rng, 150, 150)
        f = lu_factor(M)
        assert np.linalg.norm(f.reconstruct() - M) <= 1e-12 * np.linalg.norm(M)
        x = lu_solve(f, M[:, :2])
        assert np.allclose(x[:2], np.eye(2), atol=1e-10)

    def test_singular_reports_column(self):
        M = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(SingularMatrix) as e:
            lu_factor(M)
        assert e.value.column == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            lu_solve(lu_factor(np.eye(3)), np.ones((4, 1)))

    def test_rcond_estimate(self):
        f = lu_factor(np.diag([1.0, 1e-6]))
        assert 1e-7 <= f.rcond <= 1e-5

    @PROPS
    @given(n=st.integers(10, 100), seed=st.integers(0, 2**31))
    def test_left_inverse_property(self, n, seed):
        rng = np.random.default_rng(seed)
        M = crandn(rng, n, n) + n * np.eye(n) * 0.1
        X = crandn(rng, n, 2)
        Y = lu_solve(lu_factor(M), M @ X)
        assert np.linalg.norm(Y - X) <= 1e-10 * np.linalg.norm(X)


class TestQR:
    def test_orthonormal_input(self):
        Q0, _ = np.linalg.qr(crandn(np.random.default_rng(4), 10, 3))
        Q, R = qr_orthonormalize(Q0)
        phases = np.diag(Q0.conj().T @ Q)
        assert np.allclose(np.abs(phases), 1)
        assert np.allclose(np.abs(np.diag(R)), 1)
        assert np.allclose(R, np.diag(np.diag(R)), atol=1e-12)

    def test_repeated_column_is_rank_deficient(self):
        e1 = np.zeros(5)
        e1[0] = 1
        with pytest.raises(RankDeficient):
            qr_orthonormalize(np.column_stack([e1, e1]))

    def test_check_rank_off(self):
        e1 = np.eye(5)[:, :1]
        Q, R = qr_orthonormalize(np.hstack([e1, e1]), check_rank=False)
        assert np.allclose(Q @ R, np.hstack([e1, e1]))

    def test_random_40x8(self):
        M = crandn(np.random.default_rng(5), 40, 8)
        Q, R = qr_orthonormalize(M)
        assert np.abs(Q.conj().T @ Q - np.eye(8)).max() <= 1e-12
        assert np.allclose(R, np.triu(R))
        assert np.linalg.norm(Q @ R - M) <= 1e-10 * np.linalg.norm(M)

    def test_needs_tall(self):
        with pytest.raises(DimensionMismatch):
            qr_orthonormalize(np.ones((2, 3)))


class TestSVD:
    def test_diagonal(self):
        r = svd(np.diag([3.0, 1.0]))
        assert np.allclose(r.singular_values, [3, 1])
        assert np.allclose(np.abs(r.U), np.eye(2))

    def test_rank_one(self):
        u = np.array([2.0, 0, 0])
        v = np.array([0.0, 1.0])
        r = svd(np.outer(u, v.conj()))
        assert abs(r.singular_values[0] - 2) < 1e-14 and r.singular_values[1] < 1e-14
        assert r.rank(1e-10) == 1

    def test_random_20x6(self):
        M = crandn(np.random.default_rng(6), 20, 6)
        r = svd(M)
        s = r.singular_values
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        assert np.linalg.norm(M - (r.U * s) @ r.V.conj().T, 2) <= 1e-10 * s[0]
        assert np.allclose(s, np.linalg.svd(M, compute_uv=False), rtol=1e-12)

    def test_wide(self):
        M = crandn(np.random.default_rng(7), 4, 9)
        r = svd(M)
        s = r.singular_values
        assert np.linalg.norm(M - (r.U * s) @ r.V.conj().T, 2) <= 1e-10 * s[0]

    def test_rank_deficient_keeps_orthonormal_u(self):
        rng = np.random.default_rng(8)
        M = crandn(rng, 12, 2) @ crandn(rng, 2, 5)
        r = svd(M)
        assert np.abs(r.U.conj().T @ r.U - np.eye(5)).max() <= 1e-12
        assert r.rank(1e-10) == 2

    @PROPS
    @given(m=st.integers(1, 30), k=st.integers(1, 10), seed=st.integers(0, 2**31))
    def test_invariants(self, m, k, seed):
        rng = np.random.default_rng(seed)
        n = max(m, k)
        M = crandn(rng, n, k)
        r = svd(M)
        s = r.singular_values
        assert np.all(np.diff(s) <= 1e-15 * s[0]) and np.all(s >= 0)
        assert np.abs(r.U.conj().T @ r.U - np.eye(k)).max() <= 1e-12
        assert np.abs(r.V.conj().T @ r.V - np.eye(k)).max() <= 1e-12
        assert np.linalg.norm(M - (r.U * s) @ r.V.conj().T, 2) <= 1e-10 * s[0]
        # unitary invariance
        U1, _ = np.linalg.qr(crandn(rng, n, n))
        V1, _ = np.linalg.qr(crandn(rng, k, k))
        s2 = svd(U1 @ M @ V1).singular_values
        assert np.allclose(s2, s, rtol=1e-10, atol=1e-10 * s[0])


class TestEig:
    def test_diagonal(self):
        pairs = eig_dense(np.diag([1.0, 2.0, 3.0]))
        vals = sorted(p[0].real for p in pairs)
        assert np.allclose(vals, [1, 2, 3])
        for lam, x in pairs:
            k = int(round(lam.real)) - 1
            assert abs(abs(x[k]) - 1) < 1e-12

    def test_jordan_block(self):
        J = np.array([[0.3, 1.0], [0.0, 0.3]])
        pairs = eig_dense(J)
        assert np.allclose([p[0] for p in pairs], [0.3, 0.3], atol=1e-7)
        for lam, x in pairs:
            assert np.linalg.norm(J @ x - lam * x) <= 1e-6

    def test_random_50_companion_crosscheck(self):
        rng = np.random.default_rng(9)
        M = crandn(rng, 50, 50)
        pairs = eig_dense(M)
        vals = np.array([p[0] for p in pairs])
        nrm = np.linalg.norm(M, 2)
        for lam, x in pairs:
            assert np.linalg.norm(M @ x - lam * x) <= 1e-9 * nrm
        assert np.allclose(sorted_vals(vals), sorted_vals(np.linalg.eigvals(M)), atol=1e-8)

    def test_companion_small(self):
        # roots of (x-1)(x-2)(x-3i) through a companion matrix
        c = np.poly([1, 2, 3j])
        C = np.zeros((3, 3), dtype=complex)
        C[0] = -c[1:] / c[0]
        C[1, 0] = C[2, 1] = 1
        assert np.allclose(sorted_vals(eigvals_dense(C)), sorted_vals([1, 2, 3j]), atol=1e-10)

    def test_cap(self):
        with pytest.raises(DimensionMismatch):
            eig_dense(np.eye(3), cap=2)

    @PROPS
    @given(n=st.integers(2, 25), seed=st.integers(0, 2**31))
    def test_similarity_invariance(self, n, seed):
        rng = np.random.default_rng(seed)
        A = crandn(rng, n, n)
        T = np.eye(n) + 0.2 * crandn(rng, n, n) / np.sqrt(n)
        B = T @ A @ np.linalg.inv(T)
        a, b = eigvals_dense(A), eigvals_dense(B)
        # greedy nearest matching is robust to ordering
        used = set()
        for v in a:
            d = np.abs(b - v)
            d[list(used)] = np.inf
            j = int(np.argmin(d))
            used.add(j)
            assert d[j] <= 1e-7 * max(1.0, abs(v))


class TestReducedGEP:
    def test_diagonal(self):
        vals = sorted(p[0].real for p in eig_reduced_gep(np.diag([2.0, 6.0]), np.diag([1.0, 2.0])))
        assert np.allclose(vals, [2, 3])

    def test_identity_b(self):
        A = crandn(np.random.default_rng(10), 6, 6)
        a = sorted_vals([p[0] for p in eig_reduced_gep(A, np.eye(6))])
        assert np.allclose(a, sorted_vals(eigvals_dense(A)), atol=1e-12)

    def test_hermitian_definite_real_spectrum(self):
        rng = np.random.default_rng(11)
        G = crandn(rng, 20, 20)
        A = G + G.conj().T
        R = crandn(rng, 20, 20)
        B = R @ R.conj().T + 20 * np.eye(20)
        for theta, t in eig_reduced_gep(A, B):
            assert abs(theta.imag) <= 1e-9
            assert np.linalg.norm(A @ t - theta * B @ t) <= 1e-9 * np.linalg.norm(A, 2)

    def test_singular_b(self):
        with pytest.raises(SingularReducedB):
            eig_reduced_gep(np.eye(2), np.diag([1.0, 1e-15]))


def test_norm2_estimate():
    M = crandn(np.random.default_rng(12), 30, 10)
    est, true = norm2_estimate(M), np.linalg.norm(M, 2)
    # power iteration approaches from below
    assert true * (1 - 1e-3) <= est <= true * (1 + 1e-12)
