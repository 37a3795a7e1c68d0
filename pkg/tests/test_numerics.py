import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wlprecoding.errors import NotPositiveDefinite, ZeroVector
from wlprecoding.numerics import (t1_stack, t1_unstack, t2_widen, composite_row,
                                  spd_solve, rank1_gev_max, rayleigh_quotient)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def complex_arrays(shape):
    return st.tuples(arrays(float, shape, elements=finite),
                     arrays(float, shape, elements=finite)).map(lambda ri: ri[0] + 1j * ri[1])


class TestCompositeMaps:
    def test_t1_stack_scalar(self):
        np.testing.assert_array_equal(t1_stack(np.array([[1 + 2j]])), [[1.0], [2.0]])

    def test_t1_stack_zero(self):
        out = t1_stack(np.zeros((3, 2), dtype=complex))
        assert out.shape == (6, 2)
        assert not out.any()

    @given(complex_arrays((4, 3)))
    def test_t1_round_trip_exact(self, U):
        np.testing.assert_array_equal(t1_unstack(t1_stack(U)), U)

    def test_t1_unstack_rejects_odd(self):
        with pytest.raises(ValueError):
            t1_unstack(np.zeros((3, 1)))

    def test_t2_widen_scalar(self):
        np.testing.assert_array_equal(t2_widen(np.array([[1j]])), [[0.0, -1.0]])

    def test_t2_widen_real_input_has_zero_right_half(self, rng):
        W = t2_widen(rng.standard_normal((3, 4)).astype(complex))
        assert not W[:, 4:].any()

    def test_t2_identity_random(self, rng):
        Hp, U = crandn(rng, 3, 4), crandn(rng, 4, 2)
        assert np.max(np.abs(t2_widen(Hp) @ t1_stack(U) - np.real(Hp @ U))) < 1e-12

    @settings(max_examples=50)
    @given(complex_arrays((3, 5)), complex_arrays((5, 2)))
    def test_t2_identity_property(self, Hp, U):
        lhs = t2_widen(Hp) @ t1_stack(U)
        scale = max(1.0, np.max(np.abs(Hp)) * np.max(np.abs(U)))
        assert np.max(np.abs(lhs - np.real(Hp @ U))) <= 1e-12 * scale * 10

    def test_composite_row_definition(self):
        np.testing.assert_array_equal(composite_row(np.array([1, 1j])), [1, 0, 0, 1])

    def test_composite_row_orthogonal_pair(self):
        hk, hj = np.array([1 + 0j]), np.array([1j])
        assert np.real(hk @ hj.conj()) == 0
        assert composite_row(hk) @ composite_row(hj) == 0

    def test_composite_inner_product(self, rng):
        for _ in range(20):
            hk, hj = crandn(rng, 5), crandn(rng, 5)
            assert abs(composite_row(hk) @ composite_row(hj) - np.real(hk @ hj.conj())) < 1e-12


class TestMaxRealOrthogonalSet:
    """Composite-real rank bound on the number of real-orthogonal channels."""

    @pytest.mark.parametrize('M', [1, 2, 4])
    def test_constructed_2M_orthogonal_channels(self, M):
        # composite rows equal the standard basis of R^{2M}
        E = np.eye(2 * M)
        H = E[:, :M] + 1j * E[:, M:]
        Hbar = composite_row(H)
        np.testing.assert_array_equal(Hbar @ Hbar.T, np.eye(2 * M))
        G = np.real(H @ H.conj().T)
        np.testing.assert_array_equal(G, np.eye(2 * M))

    @pytest.mark.parametrize('M', [1, 2, 3, 4])
    def test_2M_plus_1_channels_rank_deficient(self, M, rng):
        for _ in range(20):
            Hbar = composite_row(crandn(rng, 2 * M + 1, M))
            G = Hbar @ Hbar.T
            assert np.linalg.matrix_rank(G) <= 2 * M
            with pytest.raises(NotPositiveDefinite):
                spd_solve(G, np.eye(2 * M + 1))


class TestSpdSolve:
    def test_identity(self, rng):
        B = rng.standard_normal((3, 2))
        np.testing.assert_allclose(spd_solve(np.eye(3), B), B)

    def test_diagonal(self):
        np.testing.assert_allclose(spd_solve(np.diag([2.0, 4.0]), [[2.0], [8.0]]), [[1.0], [2.0]])

    def test_random_residual(self, rng):
        for n in (2, 5, 8):
            Mx = rng.standard_normal((n, n))
            A = Mx.T @ Mx + np.eye(n)
            B = rng.standard_normal((n, 3))
            X = spd_solve(A, B)
            assert np.linalg.norm(A @ X - B) / np.linalg.norm(B) < 1e-10

    def test_hermitian(self, rng):
        Mx = crandn(rng, 4, 4)
        A = Mx.conj().T @ Mx + np.eye(4)
        B = crandn(rng, 4, 2)
        X = spd_solve(A, B)
        assert np.linalg.norm(A @ X - B) / np.linalg.norm(B) < 1e-10

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solve(np.diag([1.0, -1.0]), np.ones(2))

    def test_rank_deficient_gram_raises(self, rng):
        # 5 complex users on 4 antennas: complex Gram is singular
        H = crandn(rng, 5, 4)
        with pytest.raises(NotPositiveDefinite):
            spd_solve(H @ H.conj().T, np.eye(5))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            spd_solve(np.array([[2.0, 1.0], [0.0, 2.0]]), np.ones(2))


class TestRank1Gev:
    def test_identity_Q(self):
        np.testing.assert_allclose(rank1_gev_max(np.array([3.0, 4.0]), np.eye(2)), [0.6, 0.8])

    def test_diag_Q_value(self):
        v = rank1_gev_max(np.array([1.0, 1.0]), np.diag([1.0, 4.0]))
        np.testing.assert_allclose(v, [0.970, 0.243], atol=5e-4)

    def test_diag_Q_sampling_oracle(self, rng):
        a, Q = np.array([1.0, 1.0]), np.diag([1.0, 4.0])
        v = rank1_gev_max(a, Q)
        best = rayleigh_quotient(a, Q, v)
        W = rng.standard_normal((100000, 2))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        q = (W @ a) ** 2 / np.einsum('ij,jk,ik->i', W, Q, W)
        assert q.max() <= best * (1 + 1e-12)

    def test_matches_dense_generalized_eigensolver(self, rng):
        for n in (2, 4, 8):
            a = rng.standard_normal(n)
            Mx = rng.standard_normal((n, n))
            Q = Mx.T @ Mx + 0.1 * np.eye(n)
            w, V = scipy.linalg.eigh(np.outer(a, a), Q)
            ref = V[:, -1] / np.linalg.norm(V[:, -1])
            ref *= np.sign(a @ ref)
            np.testing.assert_allclose(rank1_gev_max(a, Q), ref, atol=1e-9)

    def test_random_sampling_oracle(self, rng):
        for _ in range(10):
            n = 6
            a = rng.standard_normal(n)
            Mx = rng.standard_normal((n, n))
            Q = Mx.T @ Mx + np.eye(n)
            best = rayleigh_quotient(a, Q, rank1_gev_max(a, Q))
            for w in rng.standard_normal((1000, n)):
                assert rayleigh_quotient(a, Q, w) <= best * (1 + 1e-12)

    def test_fixed_point_and_sign(self, rng):
        a = rng.standard_normal(5)
        Mx = rng.standard_normal((5, 5))
        Q = Mx.T @ Mx + np.eye(5)
        v = rank1_gev_max(a, Q)
        assert abs(np.linalg.norm(v) - 1) < 1e-12
        assert a @ v >= 0
        Qv = Q @ v
        # colinearity of Q v and a
        resid = np.linalg.norm(Qv - (Qv @ a) / (a @ a) * a) / np.linalg.norm(Qv)
        assert resid < 1e-9

    def test_complex_phase_convention(self, rng):
        a = crandn(rng, 4)
        Mx = crandn(rng, 4, 4)
        Q = Mx.conj().T @ Mx + np.eye(4)
        v = rank1_gev_max(a, Q)
        proj = a @ v
        assert abs(proj.imag) < 1e-12 and proj.real > 0

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            rank1_gev_max(np.zeros(3), np.eye(3))
