import numpy as np
import numpy.testing as npt
import pytest
from scipy.linalg import toeplitz as build_toeplitz

from toepgrad.likelihood import PositivityError
from toepgrad.model import hermitian_deviation, toeplitz_deviation
from toepgrad.scenarios import (
    ATOM_AMPLITUDES,
    ATOM_OMEGA,
    SampleBatch,
    ScenarioSpec,
    ar3_covariance,
    atom_covariance,
    gohberg_semencul_precision,
    random_cara_covariance,
    read_batch,
    sample,
    sample_covariance,
    scenario_covariance,
    write_batch,
)


def yule_walker_autocovariance(coeffs, sigma, p):
    """Oracle: solve the order-q Yule-Walker system for r_0..r_q, then extend
    by the recursion r_k = sum_i phi_i r_{k-i}."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    q = coeffs.size
    if q == 0:
        return np.concatenate(([sigma**2], np.zeros(p - 1)))
    a = np.zeros((q + 1, q + 1))
    b = np.zeros(q + 1)
    # r_0 - sum_i phi_i r_i = sigma^2
    a[0, 0] = 1.0
    a[0, 1:] = -coeffs
    b[0] = sigma**2
    # r_k - sum_i phi_i r_{|k-i|} = 0 for k = 1..q
    for k in range(1, q + 1):
        a[k, k] += 1.0
        for i, phi in enumerate(coeffs, start=1):
            a[k, abs(k - i)] -= phi
        b[k] = 0.0
    r = np.linalg.solve(a, b)
    r = list(r)
    for k in range(q + 1, p):
        r.append(float(np.dot(coeffs, [r[k - i] for i in range(1, q + 1)])))
    return np.asarray(r[:p])


class TestAtomCovariance:
    def test_total_power(self):
        c, spec = atom_covariance()
        assert c[0, 0].real == pytest.approx(120.0)
        assert spec.kind == "atom" and spec.p == 15

    def test_structure_and_positive_definite(self):
        c, _ = atom_covariance()
        assert toeplitz_deviation(c) < 1e-10
        assert hermitian_deviation(c) < 1e-12
        assert np.linalg.eigvalsh(c).min() > 0

    def test_first_row_matches_double_loop_oracle(self):
        c, _ = atom_covariance()
        for j in range(15):
            acc = sum(
                a * np.exp(1j * w * 0) * np.conj(np.exp(1j * w * j))
                for a, w in zip(ATOM_AMPLITUDES, ATOM_OMEGA)
            )
            assert abs(c[0, j] - acc) < 1e-12


class TestAr3Covariance:
    def test_white_noise_limit(self):
        c = ar3_covariance(coeffs=(), sigma=1.0, p=4)
        npt.assert_allclose(c, np.eye(4), atol=1e-12)

    def test_ar1_closed_form(self):
        c = ar3_covariance(coeffs=(0.5,), sigma=1.0, p=4)
        expected = build_toeplitz([4.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0])
        npt.assert_allclose(c.real, expected, atol=1e-10)
        npt.assert_allclose(c.imag, 0.0, atol=1e-12)

    def test_default_matches_yule_walker_oracle(self):
        c = ar3_covariance(p=15)
        r = yule_walker_autocovariance((0.5, 0.2, 0.05), 0.8, 15)
        npt.assert_allclose(c[0, :].real, r, atol=1e-8)
        assert toeplitz_deviation(c) < 1e-10

    def test_precision_round_trip(self):
        j = gohberg_semencul_precision((0.5, 0.2, 0.05), 0.8, 12)
        c = ar3_covariance(p=12)
        npt.assert_allclose(c.real @ j, np.eye(12), atol=1e-8)

    def test_unstable_polynomial_rejected(self):
        with pytest.raises(ValueError, match="unstable"):
            ar3_covariance(coeffs=(1.2,), sigma=1.0, p=5)
        with pytest.raises(ValueError, match="unstable"):
            ScenarioSpec(kind="ar3", p=5, ar_coeffs=(0.9, 0.9), ar_sigma=1.0)

    def test_dimension_must_exceed_order(self):
        with pytest.raises(ValueError):
            gohberg_semencul_precision((0.5, 0.2, 0.05), 0.8, 3)


class TestRandomCaraCovariance:
    def test_total_power_includes_noise(self):
        c, spec = random_cara_covariance()
        expected = spec.a.sum() + spec.sigma2
        assert c[0, 0].real == pytest.approx(expected)
        assert spec.sigma2 == pytest.approx(0.17**2)

    def test_min_eigenvalue_at_least_noise_floor(self):
        c, spec = random_cara_covariance()
        assert np.linalg.eigvalsh(c).min() >= spec.sigma2 - 1e-12

    def test_toeplitz(self):
        c, _ = random_cara_covariance()
        assert toeplitz_deviation(c) < 1e-12


class TestScenarioDispatch:
    def test_names(self):
        for name in ("atom", "ar3", "random-cara"):
            c, spec = scenario_covariance(name)
            assert c.shape == (spec.p, spec.p)

    def test_ar3_dimension_flag(self):
        c, spec = scenario_covariance("ar3", p=20)
        assert c.shape == (20, 20) and spec.p == 20

    def test_fixed_scenarios_reject_other_p(self):
        with pytest.raises(ValueError):
            scenario_covariance("atom", p=10)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            scenario_covariance("bogus")


class TestSampling:
    def test_deterministic(self):
        c, _ = random_cara_covariance()
        b1 = sample(c, 8, seed=42)
        b2 = sample(c, 8, seed=42)
        npt.assert_array_equal(b1.vectors, b2.vectors)

    def test_law_of_large_numbers(self):
        s = sample_covariance(sample(np.eye(4, dtype=complex), 10_000, seed=0))
        assert np.linalg.norm(s - np.eye(4)) < 0.1

    def test_moment_matches_variance(self):
        c, _ = random_cara_covariance()
        batch = sample(c, 100_000, seed=1)
        est = np.mean(np.abs(batch.vectors[:, 0]) ** 2)
        assert est == pytest.approx(c[0, 0].real, rel=0.02)

    def test_circularity(self):
        # pseudo-covariance E[x x^T] vanishes for the circular convention
        c, _ = random_cara_covariance()
        batch = sample(c, 50_000, seed=2)
        x = batch.vectors
        pseudo = x.T @ x / x.shape[0]
        assert np.abs(pseudo).max() < 0.2 * c[0, 0].real**0.5 * 0.5

    def test_sample_covariance_psd_and_rank(self):
        c, _ = random_cara_covariance()
        s = sample_covariance(sample(c, 5, seed=3))
        lam = np.linalg.eigvalsh(s)
        assert lam.min() > -1e-10
        assert (lam > 1e-10).sum() <= 5

    def test_concatenation_identity(self):
        c, _ = random_cara_covariance()
        b1 = sample(c, 6, seed=4)
        b2 = sample(c, 10, seed=5)
        combined = np.vstack([b1.vectors, b2.vectors])
        s_combined = sample_covariance(combined)
        s_weighted = (6 * sample_covariance(b1) + 10 * sample_covariance(b2)) / 16
        npt.assert_allclose(s_combined, s_weighted, atol=1e-12)

    def test_rejects_non_pd(self):
        with pytest.raises(PositivityError):
            sample(np.diag([1.0, -1.0]).astype(complex), 3, seed=0)

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            sample(np.eye(2, dtype=complex), 0, seed=0)


class TestBatchFile:
    def test_round_trip(self, tmp_path):
        c, _ = atom_covariance()
        batch = sample(c, 7, seed=99)
        path = tmp_path / "batch.bin"
        write_batch(path, batch)
        back = read_batch(path)
        assert back.m == 7 and back.p == 15 and back.seed == 99
        npt.assert_array_equal(back.vectors, batch.vectors)

    def test_byte_layout(self, tmp_path):
        batch = SampleBatch(m=1, vectors=np.array([[1.0 + 2.0j, 3.0 - 4.0j]]), seed=5)
        path = tmp_path / "b.bin"
        write_batch(path, batch)
        raw = path.read_bytes()
        assert raw[:8] == b"TPGBATCH"
        assert int.from_bytes(raw[8:12], "little") == 1  # version
        assert int.from_bytes(raw[12:16], "little") == 2  # p
        assert int.from_bytes(raw[16:20], "little") == 1  # m
        assert int.from_bytes(raw[20:28], "little") == 5  # seed
        values = np.frombuffer(raw[28:], dtype="<f8")
        npt.assert_array_equal(values, [1.0, 2.0, 3.0, -4.0])

    def test_rejects_corrupt_header(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTMAGIC" + bytes(20))
        with pytest.raises(ValueError, match="magic"):
            read_batch(path)

    def test_rejects_truncation(self, tmp_path):
        c, _ = atom_covariance()
        batch = sample(c, 3, seed=0)
        path = tmp_path / "t.bin"
        write_batch(path, batch)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="bytes"):
            read_batch(path)


class TestGeneratorInvariants:
    def test_all_generators_toeplitz_pd(self):
        for name in ("atom", "ar3", "random-cara"):
            c, _ = scenario_covariance(name)
            assert toeplitz_deviation(c) < 1e-10
            assert np.linalg.eigvalsh(c).min() > 0
