import numpy as np
import numpy.testing as npt
import pytest

from conftest import random_model, random_pd, random_psd
from toepgrad.likelihood import PositivityError, e_matrix, gradient, kl_divergence, nll
from toepgrad.model import CaratheodoryModel, assemble_covariance, hermitian_deviation


def identity_model(p, epsilon=0.5):
    """Model whose covariance is exactly the identity.

    On the uniform grid 2*pi*j/p the steering vectors are orthogonal, so
    sum_k s(a_k) v_k v_k^H = p * s * I; choose s = (1 - epsilon)/p.
    """
    target = (1.0 - epsilon) / p
    a_raw = np.full(p, np.log(np.expm1(target)))
    omega = 2.0 * np.pi * np.arange(p) / p
    return CaratheodoryModel(a_raw=a_raw, omega=omega, epsilon=epsilon, p=p)


def scaled_identity_model(p, scale, epsilon):
    target = (scale - epsilon) / p
    a_raw = np.full(p, np.log(np.expm1(target)))
    omega = 2.0 * np.pi * np.arange(p) / p
    return CaratheodoryModel(a_raw=a_raw, omega=omega, epsilon=epsilon, p=p)


class TestNll:
    def test_identity_pair(self):
        m = identity_model(3)
        npt.assert_allclose(assemble_covariance(m), np.eye(3), atol=1e-12)
        assert nll(np.eye(3), m) == pytest.approx(3.0, abs=1e-10)

    def test_diagonal_case(self):
        m = scaled_identity_model(2, 2.0, 0.5)
        npt.assert_allclose(assemble_covariance(m), 2.0 * np.eye(2), atol=1e-12)
        assert nll(np.eye(2), m) == pytest.approx(1.0 + 2.0 * np.log(2.0), abs=1e-10)

    def test_matches_eigendecomposition_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = random_model(rng, p=6)
            s = random_psd(rng, 6)
            c = assemble_covariance(m)
            lam = np.linalg.eigvalsh(c)
            oracle = float(np.trace(np.linalg.inv(c) @ s).real + np.log(lam).sum())
            assert nll(s, m) == pytest.approx(oracle, rel=1e-9)

    def test_shape_mismatch(self):
        m = identity_model(3)
        with pytest.raises(ValueError):
            nll(np.eye(4), m)

    def test_periodicity(self):
        rng = np.random.default_rng(1)
        m = random_model(rng, p=5)
        s = random_psd(rng, 5)
        shifted = m.with_params(m.a_raw, m.omega + 2 * np.pi)
        assert nll(s, m) == pytest.approx(nll(s, shifted), abs=1e-10)


class TestEMatrix:
    def test_zero_at_match(self):
        npt.assert_allclose(e_matrix(np.eye(3), np.eye(3)), np.zeros((3, 3)), atol=1e-14)

    def test_scalar_algebra(self):
        npt.assert_allclose(e_matrix(np.eye(2), 2.0 * np.eye(2)), 0.25 * np.eye(2), atol=1e-14)

    def test_three_product_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = int(rng.integers(2, 8))
            c = random_pd(rng, p)
            s = random_psd(rng, p)
            c_inv = np.linalg.inv(c)
            oracle = c_inv @ (c - s) @ c_inv
            npt.assert_allclose(e_matrix(s, c), oracle, atol=1e-10)

    def test_hermitian_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = int(rng.integers(2, 8))
            e = e_matrix(random_psd(rng, p), random_pd(rng, p))
            assert hermitian_deviation(e) < 1e-10

    def test_rejects_indefinite(self):
        c = np.diag([1.0, -1.0]).astype(complex)
        with pytest.raises(PositivityError, match="pivot"):
            e_matrix(np.eye(2), c)


class TestGradient:
    def test_zero_at_stationarity(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            m = random_model(rng)
            s = assemble_covariance(m)
            ev = gradient(s, m)
            assert np.abs(ev.grad_a).max() < 1e-10
            assert np.abs(ev.grad_omega).max() < 1e-10

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(5)
        m = random_model(rng, p=8, k=16)
        s = random_psd(rng, 8)
        ev = gradient(s, m)
        h = 1e-6
        fd_a = np.empty(m.k)
        fd_w = np.empty(m.k)
        for j in range(m.k):
            da = np.zeros(m.k)
            da[j] = h
            fd_a[j] = (nll(s, m.with_params(m.a_raw + da, m.omega))
                       - nll(s, m.with_params(m.a_raw - da, m.omega))) / (2 * h)
            fd_w[j] = (nll(s, m.with_params(m.a_raw, m.omega + da))
                       - nll(s, m.with_params(m.a_raw, m.omega - da))) / (2 * h)
        scale_a = max(1e-8, np.abs(ev.grad_a).max())
        scale_w = max(1e-8, np.abs(ev.grad_omega).max())
        assert np.abs(fd_a - ev.grad_a).max() / scale_a < 1e-5
        assert np.abs(fd_w - ev.grad_omega).max() / scale_w < 1e-5

    def test_omega_gradient_zero_for_real_symmetric_kernel(self):
        # K=1 at omega=0: v^H D E v is real whenever E is real symmetric
        m = CaratheodoryModel(a_raw=[0.7], omega=[0.0], epsilon=0.3, p=4)
        s = np.diag([2.0, 1.0, 0.5, 0.25]).astype(complex)
        ev = gradient(s, m)
        assert abs(ev.grad_omega[0]) < 1e-12

    def test_evaluation_fields(self):
        rng = np.random.default_rng(6)
        m = random_model(rng, p=5)
        s = random_psd(rng, 5)
        ev = gradient(s, m)
        assert ev.grad_a.shape == (m.k,) and ev.grad_omega.shape == (m.k,)
        assert hermitian_deviation(ev.e_matrix) < 1e-10
        npt.assert_allclose(ev.c_hat, assemble_covariance(m), atol=1e-12)
        npt.assert_allclose(ev.c_inv @ ev.c_hat, np.eye(5), atol=1e-9)
        assert ev.value == pytest.approx(nll(s, m), rel=1e-12)


class TestGradientProperty:
    def test_many_random_instances_match_finite_differences(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            p = int(rng.integers(3, 8))
            m = random_model(rng, p=p)
            s = random_psd(rng, p)
            ev = gradient(s, m)
            h = 1e-6
            scale = max(1e-6, np.abs(ev.grad_a).max(), np.abs(ev.grad_omega).max())
            for j in range(m.k):
                d = np.zeros(m.k)
                d[j] = h
                fd_a = (nll(s, m.with_params(m.a_raw + d, m.omega))
                        - nll(s, m.with_params(m.a_raw - d, m.omega))) / (2 * h)
                fd_w = (nll(s, m.with_params(m.a_raw, m.omega + d))
                        - nll(s, m.with_params(m.a_raw, m.omega - d))) / (2 * h)
                worst = max(
                    worst,
                    abs(fd_a - ev.grad_a[j]) / max(abs(ev.grad_a[j]), 1e-6 * scale),
                    abs(fd_w - ev.grad_omega[j]) / max(abs(ev.grad_omega[j]), 1e-6 * scale),
                )
        assert worst < 1e-4


class TestKlDivergence:
    def test_zero_at_equality(self):
        rng = np.random.default_rng(8)
        c = random_pd(rng, 4)
        assert kl_divergence(c, c) == pytest.approx(0.0, abs=1e-10)

    def test_scalar_formula(self):
        value = kl_divergence(np.eye(1), 2.0 * np.eye(1))
        assert value == pytest.approx(0.5 - 1.0 + np.log(2.0), abs=1e-12)

    def test_nonnegative_and_matches_eigh_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            p = int(rng.integers(2, 7))
            c = random_pd(rng, p)
            ch = random_pd(rng, p)
            got = kl_divergence(c, ch)
            ch_inv = np.linalg.inv(ch)
            oracle = float(
                np.trace(ch_inv @ c).real - p
                + np.log(np.linalg.eigvalsh(ch)).sum()
                - np.log(np.linalg.eigvalsh(c)).sum()
            )
            assert got >= -1e-10
            assert got == pytest.approx(oracle, rel=1e-9, abs=1e-9)
