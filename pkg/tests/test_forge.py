import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contoureig.dense import eigvals_dense
from contoureig.errors import BadSpec, SingularBWithoutTruth
from contoureig.forge import (INFINITE, JordanSpec, canonical_pair, dense_oracle, format_spec,
                              gen_symmetric_dense, gen_symmetric_from_spectrum, gen_weierstrass,
                              is_infinite, jordan_block, parse_spec)
from contoureig.quadrature import ContourRegion

UNIT = ContourRegion.circle(0, 1)
FLAT_ELLIPSE = ContourRegion.ellipse(0, 1, 0.1)


class TestSpec:
    def test_parse_roundtrip(self):
        s = parse_spec("(0.3,0,2),(0.5,-1e-3,1),INF,2")
        assert s.n == 5 and s.r == 3 and s.eta == 2 and s.infinite_block_count == 1
        assert is_infinite(s.blocks[2][0])
        assert parse_spec(format_spec(s)) == s

    def test_eta_defaults_to_one(self):
        assert parse_spec("(1,0,3)").eta == 1

    @pytest.mark.parametrize("bad", ["(0.3,0,0)", "(0.3,0)", "garbage", "(0.3,0,1) junk", ""])
    def test_bad(self, bad):
        with pytest.raises(BadSpec):
            parse_spec(bad)

    def test_conditioning_checked(self):
        with pytest.raises(BadSpec):
            JordanSpec(((1.0, 1),), conditioning=0.5)

    def test_canonical_pair(self):
        KA, KB = canonical_pair(parse_spec("(0.3,0,2),INF,2"))
        assert np.allclose(KA[:2, :2], jordan_block(0.3, 2)) and np.allclose(KB[:2, :2], np.eye(2))
        assert np.allclose(KA[2:, 2:], np.eye(2)) and np.allclose(KB[2:, 2:], jordan_block(0, 2))


class TestWeierstrass:
    def test_canonical_coordinates(self):
        p, truth = gen_weierstrass(JordanSpec(((0.5, 1), (3.0, 1))), identity=True)
        assert np.array_equal(p.A, np.diag([0.5, 3.0])) and p.b_is_identity
        assert np.array_equal(truth.Q, np.eye(2))

    def test_jordan_pair(self):
        p, _ = gen_weierstrass(parse_spec("(0.3,0,2)"), seed=3)
        assert p.b_is_identity
        assert np.allclose(eigvals_dense(p.A), [0.3, 0.3], atol=1e-7)

    def test_infinite_block_degree(self):
        p, truth = gen_weierstrass(parse_spec("(0.5,0,1),INF,2"), seed=4)
        # det(zB - A) is a polynomial of degree r = 1: second differences vanish
        zs = np.array([0.3, 1.1, 1.9, 2.7]) + 0.2j
        d = np.array([np.linalg.det(z * p.B - p.A) for z in zs])
        assert abs(d[2] - 2 * d[1] + d[0]) <= 1e-9 * np.abs(d).max()
        assert abs(d[0] / (zs[0] - 0.5) - d[1] / (zs[1] - 0.5)) <= 1e-9 * abs(d[0] / (zs[0] - 0.5))
        vals = dense_oracle(p, UNIT, truth)
        assert len(vals) == 1 and abs(vals[0][0] - 0.5) < 1e-14

    def test_truth_invariants(self):
        spec = parse_spec("(0.3,0,2),(0.5,0.2,1),INF,1,INF,3,(-2,0,1)")
        p, t = gen_weierstrass(spec, seed=9)
        assert np.abs(t.Q_tilde.conj().T @ t.Q - np.eye(spec.n)).max() <= 1e-10
        KA, KB = canonical_pair(spec)
        rng = np.random.default_rng(0)
        for z in rng.standard_normal(3) + 1j * rng.standard_normal(3):
            lhs = t.P_tilde.conj().T @ (z * p.B - p.A) @ t.Q
            rhs = z * KB - KA
            assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)

    def test_b_rank_law(self):
        spec = parse_spec("(0.1,0,1),INF,1,INF,2,INF,3,(2,0,2)")
        p, _ = gen_weierstrass(spec, seed=2)
        s = np.linalg.svd(p.B, compute_uv=False)
        assert np.count_nonzero(s < 1e-10 * s[0]) == spec.infinite_block_count

    def test_real_option(self):
        p, _ = gen_weierstrass(parse_spec("(0.2,0,1),(3,0,2),INF,1"), seed=1, real=True)
        assert p.is_real
        with pytest.raises(BadSpec):
            gen_weierstrass(parse_spec("(0.2,1,1)"), real=True)

    def test_filtered_operator_and_projector(self):
        spec = parse_spec("(0.3,0,2),(2,0,1),INF,1")
        _, t = gen_weierstrass(spec, seed=5)
        C = t.filtered_operator()
        P = t.spectral_projector(UNIT)
        assert np.allclose(P @ P, P, atol=1e-12)
        assert np.linalg.matrix_rank(P, 1e-8) == 2
        assert sorted(np.round(np.linalg.eigvals(C).real, 6)) == [0, 0.3, 0.3, 2]
        assert len(t.finite_eigenvalues(UNIT)) == 2

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), cond=st.sampled_from([1.0, 10.0, 1e3]),
           sizes=st.lists(st.integers(1, 3), min_size=1, max_size=5))
    def test_roundtrip(self, seed, cond, sizes):
        rng = np.random.default_rng(seed)
        lams = [complex(v) for v in np.arange(len(sizes)) * 0.6 + 0.1j * rng.uniform(-1, 1)]
        spec = JordanSpec(tuple(zip(lams, sizes)) + ((INFINITE, 2),), conditioning=cond)
        p, t = gen_weierstrass(spec, seed)
        big = ContourRegion.circle(0, 100)
        got = sorted((lam.real, s) for lam, _, s in dense_oracle(p, big, t))
        assert got == sorted((lam.real, s) for lam, s in zip(lams, sizes))
        # B is nonsingular without the infinite block: the dense path must agree
        p2, _ = gen_weierstrass(JordanSpec(tuple(zip(lams, sizes)), cond), seed)
        vals = []
        for lam, _, s in dense_oracle(p2, big):
            vals.extend([lam] * s)
        vals = np.array(vals)
        assert len(vals) == sum(sizes)
        # a defective eigenvalue splits by ~(cond * eps)^(1/size); the mean of
        # its cluster stays accurate
        for lam, s in zip(lams, sizes):
            near = vals[np.abs(vals - lam) < 0.1]
            assert near.size == s
            assert abs(near.mean() - lam) <= 1e-8


class TestSymmetric:
    def test_inside_count(self):
        p, t = gen_symmetric_dense(50, 10, seed=0)
        assert p.hermitian_A and p.hpd_B
        assert np.array_equal(p.A, p.A.T) and np.array_equal(p.B, p.B.T)
        assert np.all(np.linalg.eigvalsh(p.B.real) > 0)
        np.linalg.cholesky(p.B.real)
        found = dense_oracle(p, FLAT_ELLIPSE)
        assert sum(m for _, _, m in found) == 10
        assert len(t.finite_eigenvalues(FLAT_ELLIPSE)) == 10

    def test_m_zero(self):
        p, _ = gen_symmetric_dense(20, 0, seed=1)
        assert dense_oracle(p, FLAT_ELLIPSE) == []

    def test_truth_diagonalises(self):
        p, t = gen_symmetric_dense(30, 4, seed=2)
        lam = np.array([v for v, _, _ in t.finite_pairs])
        assert np.allclose(p.A @ t.Q, p.B @ t.Q * lam, atol=1e-10 * np.linalg.norm(p.A))

    def test_from_spectrum(self):
        lam = np.array([-0.3, 0.1, 0.2, 4.0, -5.0])
        p, _ = gen_symmetric_from_spectrum(lam, seed=3)
        got = np.sort(np.linalg.eigvals(np.linalg.solve(p.B, p.A)).real)
        assert np.allclose(got, np.sort(lam), atol=1e-12)

    def test_bad_args(self):
        with pytest.raises(BadSpec):
            gen_symmetric_dense(10, 11)
        with pytest.raises(BadSpec):
            gen_symmetric_dense(10, 2, inside_interval=(1, -1))


class TestOracle:
    def test_diag(self):
        p, _ = gen_weierstrass(JordanSpec(((0.5, 1), (3.0, 1))), identity=True)
        out = dense_oracle(p, UNIT)
        assert len(out) == 1 and abs(out[0][0] - 0.5) < 1e-15 and out[0][2] == 1

    def test_jordan_multiplicity(self):
        p, _ = gen_weierstrass(parse_spec("(0.3,0,2)"), seed=0)
        out = dense_oracle(p, UNIT)
        assert len(out) == 1 and out[0][2] == 2 and abs(out[0][0] - 0.3) < 1e-7

    def test_singular_b_needs_truth(self):
        p, _ = gen_weierstrass(parse_spec("(0.5,0,1),INF,2"), seed=1)
        with pytest.raises(SingularBWithoutTruth):
            dense_oracle(p, UNIT)
