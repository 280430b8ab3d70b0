"""tensor algebra tests, checked against dense rank-4 oracles."""

import numpy as np
import pytest

from viscowave.tensors import (
    convexity_margin,
    FROBENIUS_WEIGHTS,
    IsotropicModuli,
    SymTensor,
    apply_isotropic,
    exp_apply,
    frobenius,
    identity_packed,
    pack,
    trace,
    unpack,
    vol_dev_split,
)


def dense_isotropic(lam, mu, d):
    """Rank-4 tensor from the delta-product formula (independent oracle)."""
    C = np.zeros((d, d, d, d))
    for p in range(d):
        for q in range(d):
            for r in range(d):
                for s in range(d):
                    C[p, q, r, s] = (
                        lam * (p == q) * (r == s)
                        + mu * ((q == s) * (p == r) + (p == s) * (q == r))
                    )
    return C


def dense_apply(C, e):
    return np.einsum("pqrs,rs->pq", C, e)


def mandel_matrix(C, d):
    """Orthonormal-basis matrix representation of C on symmetric tensors."""
    pairs = [(i, i) for i in range(d)] + [(p, q) for p in range(d) for q in range(p + 1, d)]
    basis = []
    for p, q in pairs:
        B = np.zeros((d, d))
        if p == q:
            B[p, q] = 1.0
        else:
            B[p, q] = B[q, p] = 1.0 / np.sqrt(2.0)
        basis.append(B)
    n = len(basis)
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            M[i, j] = np.einsum("pq,pq->", basis[i], dense_apply(C, basis[j]))
    return M


def series_expm(M, nterms=60):
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, nterms):
        term = term @ M / k
        out = out + term
    return out


def random_sym(rng, d):
    A = rng.standard_normal((d, d))
    return 0.5 * (A + A.T)


class TestApplyIsotropic:
    def test_identity_input(self):
        C = IsotropicModuli(lam=2.0, mu=1.0, dim=3)
        e = pack(np.eye(3))
        np.testing.assert_allclose(apply_isotropic(C, e), 8.0 * pack(np.eye(3)))

    def test_pure_shear_identity(self):
        C = IsotropicModuli(lam=0.0, mu=0.5, dim=3)
        rng = np.random.default_rng(0)
        e = pack(random_sym(rng, 3))
        np.testing.assert_allclose(apply_isotropic(C, e), e)

    def test_against_dense_contraction(self):
        # diag(1,2,3) with lam=mu=1 -> diag(8,10,12), via the delta oracle
        C = IsotropicModuli(lam=1.0, mu=1.0, dim=3)
        e = np.diag([1.0, 2.0, 3.0])
        got = unpack(apply_isotropic(C, pack(e)), 3)
        oracle = dense_apply(dense_isotropic(1.0, 1.0, 3), e)
        np.testing.assert_allclose(got, np.diag([8.0, 10.0, 12.0]))
        np.testing.assert_allclose(got, oracle, rtol=1e-14)

    @pytest.mark.parametrize("d", [2, 3])
    def test_random_against_dense(self, d):
        rng = np.random.default_rng(7)
        for _ in range(20):
            lam = rng.uniform(-0.4, 3.0)
            mu = rng.uniform(0.2, 3.0)
            if d * lam + 2 * mu <= 0.1:
                continue
            C = IsotropicModuli(lam, mu, d)
            e = random_sym(rng, d)
            got = unpack(apply_isotropic(C, pack(e)), d)
            oracle = dense_apply(dense_isotropic(lam, mu, d), e)
            np.testing.assert_allclose(got, oracle, rtol=1e-13, atol=1e-13)

    def test_minor_major_symmetry(self):
        # (Ca):b == (Cb):a for all symmetric a, b
        rng = np.random.default_rng(3)
        C = IsotropicModuli(lam=1.3, mu=0.7, dim=3)
        for _ in range(10):
            a, b = pack(random_sym(rng, 3)), pack(random_sym(rng, 3))
            lhs = frobenius(apply_isotropic(C, a), b, 3)
            rhs = frobenius(apply_isotropic(C, b), a, 3)
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_spectral_consistency(self):
        rng = np.random.default_rng(11)
        C = IsotropicModuli(lam=2.0, mu=0.5, dim=3)
        e = pack(random_sym(rng, 3))
        vol, dev = vol_dev_split(e, 3)
        expected = C.volumetric_eigenvalue * vol + C.deviatoric_eigenvalue * dev
        np.testing.assert_allclose(apply_isotropic(C, e), expected, rtol=1e-13, atol=1e-14)

    def test_dimension_mismatch_raises(self):
        C = IsotropicModuli(lam=1.0, mu=1.0, dim=3)
        with pytest.raises(Exception):
            apply_isotropic(C, np.zeros(3))  # 2-D packed length into a 3-D tensor


class TestVolDevSplit:
    def test_diag_example(self):
        vol, dev = vol_dev_split(pack(np.diag([1.0, 2.0, 3.0])), 3)
        np.testing.assert_allclose(unpack(vol, 3), 2.0 * np.eye(3))
        np.testing.assert_allclose(unpack(dev, 3), np.diag([-1.0, 0.0, 1.0]))

    def test_identity(self):
        vol, dev = vol_dev_split(pack(np.eye(3)), 3)
        np.testing.assert_allclose(unpack(vol, 3), np.eye(3))
        np.testing.assert_allclose(dev, 0.0)

    @pytest.mark.parametrize("d", [2, 3])
    def test_orthogonality_and_reassembly(self, d):
        rng = np.random.default_rng(5)
        for _ in range(25):
            e = pack(random_sym(rng, d))
            vol, dev = vol_dev_split(e, d)
            assert abs(frobenius(vol, dev, d)) < 1e-13
            np.testing.assert_allclose(vol + dev, e, atol=1e-15)
            assert abs(trace(dev, d)) < 1e-13


class TestExpApply:
    def test_equal_eigenvalues_halving(self):
        # lam=0, mu=0.5: both eigenvalues are 1; t = ln 2 halves any tensor
        C = IsotropicModuli(lam=0.0, mu=0.5, dim=3)
        rng = np.random.default_rng(2)
        e = pack(random_sym(rng, 3))
        np.testing.assert_allclose(exp_apply(C, 1.0, np.log(2.0), e), e / 2.0, rtol=1e-13)

    def test_t_zero_is_identity(self):
        C = IsotropicModuli(lam=1.7, mu=0.3, dim=3)
        rng = np.random.default_rng(4)
        e = pack(random_sym(rng, 3))
        np.testing.assert_allclose(exp_apply(C, 2.5, 0.0, e), e)

    def test_spherical_example(self):
        C = IsotropicModuli(lam=1.0, mu=1.0, dim=3)
        e = pack(np.eye(3))
        np.testing.assert_allclose(exp_apply(C, 2.0, 1.0, e),
                                   np.exp(-2.5) * e, rtol=1e-14)

    @pytest.mark.parametrize("lam,mu,eta,t", [(1.0, 1.0, 2.0, 1.0),
                                              (0.3, 0.9, 0.5, 0.7),
                                              (-0.2, 1.1, 3.0, 2.2)])
    def test_against_matrix_exponential_series(self, lam, mu, eta, t):
        # 6x6 orthonormal matrix representation, truncated series oracle
        rng = np.random.default_rng(9)
        e = random_sym(rng, 3)
        Cd = dense_isotropic(lam, mu, 3)
        M = mandel_matrix(Cd, 3)
        expM = series_expm(-t / eta * M)
        vec = np.array([e[0, 0], e[1, 1], e[2, 2],
                        np.sqrt(2) * e[0, 1], np.sqrt(2) * e[0, 2], np.sqrt(2) * e[1, 2]])
        ref_vec = expM @ vec
        ref = np.array([[ref_vec[0], ref_vec[3] / np.sqrt(2), ref_vec[4] / np.sqrt(2)],
                        [ref_vec[3] / np.sqrt(2), ref_vec[1], ref_vec[5] / np.sqrt(2)],
                        [ref_vec[4] / np.sqrt(2), ref_vec[5] / np.sqrt(2), ref_vec[2]]])
        got = unpack(exp_apply(IsotropicModuli(lam, mu, 3), eta, t, pack(e)), 3)
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

    def test_semigroup_property(self):
        C = IsotropicModuli(lam=0.8, mu=1.2, dim=3)
        rng = np.random.default_rng(12)
        e = pack(random_sym(rng, 3))
        once = exp_apply(C, 1.5, 0.9 + 0.4, e)
        twice = exp_apply(C, 1.5, 0.9, exp_apply(C, 1.5, 0.4, e))
        np.testing.assert_allclose(once, twice, rtol=1e-12)

    def test_nonpositive_eta_rejected(self):
        C = IsotropicModuli(lam=1.0, mu=1.0, dim=3)
        with pytest.raises(ValueError):
            exp_apply(C, 0.0, 1.0, identity_packed(3))


def rayleigh_sup(lam, mu, d, n_samples=100_000, seed=0, refine=True):
    """Brute-force sup of the Rayleigh quotient over random symmetric tensors.

    Best random start optionally refined by power iteration on the
    orthonormal matrix representation (never uses the closed form).
    """
    M = mandel_matrix(dense_isotropic(lam, mu, d), d)
    rng = np.random.default_rng(seed)
    n = M.shape[0]
    vecs = rng.standard_normal((n_samples, n))
    quot = np.abs(np.einsum("ij,jk,ik->i", vecs, M, vecs)) / np.einsum("ij,ij->i", vecs, vecs)
    best = vecs[np.argmax(quot)]
    if not refine:
        return float(np.max(quot))
    v = best / np.linalg.norm(best)
    for _ in range(300):
        v = M @ v
        v /= np.linalg.norm(v)
    return float(abs(v @ M @ v))


class TestOperatorNormAndMargin:
    def test_closed_form_examples(self):
        assert IsotropicModuli(1.0, 1.0, 3).operator_norm() == 5.0
        assert IsotropicModuli(0.0, 0.5, 3).operator_norm() == 1.0
        assert IsotropicModuli(2.0, 1.0, 3).operator_norm() == 8.0

    def test_brute_force_agreement(self):
        for lam, mu in [(1.0, 1.0), (2.0, 1.0), (-0.3, 1.0)]:
            sup = rayleigh_sup(lam, mu, 3, n_samples=20_000, seed=1)
            closed = IsotropicModuli(lam, mu, 3).operator_norm()
            assert abs(sup - closed) <= 1e-6 * closed

    def test_norm_upper_bounds_all_samples(self):
        rng = np.random.default_rng(8)
        C = IsotropicModuli(0.9, 1.4, 3)
        Cd = dense_isotropic(0.9, 1.4, 3)
        for _ in range(200):
            z = random_sym(rng, 3)
            q = abs(np.einsum("pq,pq->", dense_apply(Cd, z), z)) / np.einsum("pq,pq->", z, z)
            assert q <= C.operator_norm() * (1 + 1e-12)

    def test_convexity_margin(self):
        assert IsotropicModuli(-0.5, 1.0, 3).convexity_margin() == 0.5
        assert IsotropicModuli(1.0, 1.0, 3).convexity_margin() == 2.0
        # diagnostic form handles non-convex pairs; brute-force minimum
        # Rayleigh quotient agrees with it
        for lam, mu in [(-1.0, 1.0), (0.4, 0.2), (-0.5, 1.0)]:
            M = mandel_matrix(dense_isotropic(lam, mu, 3), 3)
            low = float(np.min(np.linalg.eigvalsh(M)))
            assert abs(low - convexity_margin(lam, mu, 3)) < 1e-12

    def test_d2_uses_planar_trace(self):
        C = IsotropicModuli(2.0, 1.0, 2)
        assert C.volumetric_eigenvalue == 6.0
        sup = rayleigh_sup(2.0, 1.0, 2, n_samples=20_000, seed=3)
        assert abs(sup - C.operator_norm()) <= 1e-6 * C.operator_norm()


class TestValidation:
    def test_rejects_nonconvex(self):
        with pytest.raises(ValueError):
            IsotropicModuli(lam=-1.0, mu=1.0, dim=3)  # 3*(-1)+2 < 0
        with pytest.raises(ValueError):
            IsotropicModuli(lam=1.0, mu=0.0, dim=3)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            IsotropicModuli(lam=1.0, mu=1.0, dim=4)


class TestSymTensorWrapper:
    def test_roundtrip_and_ops(self):
        m = np.array([[1.0, 0.5, 0.0], [0.5, 2.0, -1.0], [0.0, -1.0, 3.0]])
        t = SymTensor.from_matrix(m)
        np.testing.assert_allclose(t.to_matrix(), m)
        assert t.trace == 6.0
        vol, dev = t.vol_dev()
        np.testing.assert_allclose((vol + dev).to_matrix(), m)
        assert abs(vol.frobenius(dev)) < 1e-13

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            SymTensor.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_frobenius_weights_match_dense(self):
        rng = np.random.default_rng(17)
        a, b = random_sym(rng, 3), random_sym(rng, 3)
        dense = np.einsum("pq,pq->", a, b)
        packed = frobenius(pack(a), pack(b), 3)
        assert abs(dense - packed) < 1e-13
        assert FROBENIUS_WEIGHTS[3].sum() == 9.0 - 3.0 + 3.0  # 3 diag + 3 doubled
