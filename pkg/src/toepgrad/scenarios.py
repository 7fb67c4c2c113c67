"""Ground-truth Toeplitz covariances and complex Gaussian sampling.

Three generators cover the benchmark suite: a fixed 15-component line
spectrum, an autoregressive covariance built by inverting a
Gohberg-Semencul precision matrix, and a fixed random sinusoid mixture.
Scenario constants are checked-in literals so runs are reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .likelihood import PositivityError
from .model import steering_matrix

# 15-component line-spectrum benchmark: amplitudes rise linearly from 1 to 15
# over this fixed frequency table.
ATOM_P = 15
ATOM_AMPLITUDES = np.arange(1.0, 16.0)
ATOM_OMEGA = np.array([
    0.2167, 0.6500, 1.0833, 1.3000, 1.5166, 1.9500, 2.3833, 2.8166,
    3.2499, 3.6832, 4.1166, 4.5499, 4.9832, 5.4165, 5.8499,
])

# One frozen random sinusoid mixture (kept verbatim for reproducibility).
RANDOM_CARA_P = 15
RANDOM_CARA_OMEGA = np.array([
    0.1840, 1.7550, 1.9173, 2.4953, 2.5326, 2.7569, 2.9125, 3.2966,
    3.5783, 4.0129, 4.2890, 4.6162, 4.7399, 4.7603, 5.0257,
])
RANDOM_CARA_AMPLITUDES = np.array([
    0.0281, 0.4950, 0.7108, 0.7845, 0.8494, 1.0405, 1.1375, 1.2450,
    1.3099, 1.4312, 1.6390, 1.9294, 1.9952, 2.0249, 2.3427,
])
RANDOM_CARA_SIGMA2 = 0.17**2

AR3_COEFFS = (0.5, 0.2, 0.05)
AR3_SIGMA = 0.8

SCENARIO_NAMES = ("atom", "ar3", "random-cara")

BATCH_MAGIC = b"TPGBATCH"
BATCH_VERSION = 1
_BATCH_HEADER = struct.Struct("<8sIIIQ")  # magic, version, p, m, seed (all little-endian)


@dataclass(frozen=True)
class ScenarioSpec:
    """Description of one ground-truth generator."""

    kind: str
    p: int
    a: np.ndarray | None = None
    omega: np.ndarray | None = None
    sigma2: float = 0.0
    ar_coeffs: np.ndarray | None = None
    ar_sigma: float | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"dimension must be >= 1, got {self.p}")
        if self.sigma2 < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma2}")
        if self.ar_coeffs is not None:
            coeffs = np.atleast_1d(np.asarray(self.ar_coeffs, dtype=float))
            _check_ar_stable(coeffs)
            object.__setattr__(self, "ar_coeffs", coeffs)


@dataclass(frozen=True)
class SampleBatch:
    """M complex observations of dimension p, drawn from one seeded stream."""

    m: int
    vectors: np.ndarray
    seed: int

    def __post_init__(self):
        x = np.asarray(self.vectors, dtype=complex)
        if x.ndim != 2 or x.shape[0] != self.m:
            raise ValueError(f"expected ({self.m}, p) vectors, got shape {x.shape}")
        if not np.isfinite(x.view(float)).all():
            raise ValueError("batch contains non-finite values")
        object.__setattr__(self, "vectors", x)

    @property
    def p(self) -> int:
        return self.vectors.shape[1]


def _check_ar_stable(coeffs: np.ndarray) -> None:
    if coeffs.size == 0:
        return
    roots = np.roots(np.concatenate(([1.0], -coeffs)))
    if roots.size and float(np.abs(roots).max()) >= 1.0:
        raise ValueError(
            f"unstable autoregression: root magnitude {float(np.abs(roots).max()):.4f} >= 1"
        )


def atom_covariance() -> tuple[np.ndarray, ScenarioSpec]:
    """Fixed structured benchmark covariance (P=15, no extra ridge)."""
    v = steering_matrix(ATOM_OMEGA, ATOM_P)
    c = (v * ATOM_AMPLITUDES) @ v.conj().T
    c = 0.5 * (c + c.conj().T)
    spec = ScenarioSpec(kind="atom", p=ATOM_P, a=ATOM_AMPLITUDES.copy(), omega=ATOM_OMEGA.copy())
    return c, spec


def gohberg_semencul_precision(coeffs, sigma: float, p: int) -> np.ndarray:
    """Precision matrix of a stable AR process as a difference of products of
    two triangular Toeplitz factors."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    q = coeffs.size
    if p <= q:
        raise ValueError(f"dimension {p} must exceed the autoregression order {q}")
    if sigma <= 0:
        raise ValueError(f"innovation scale must be positive, got {sigma}")
    _check_ar_stable(coeffs)
    a = np.zeros(p)
    a[0] = 1.0
    a[1 : q + 1] = -coeffs
    b = np.zeros(p)
    b[1:] = a[::-1][: p - 1]
    la = toeplitz(a, np.zeros(p))
    lb = toeplitz(b, np.zeros(p))
    return (la @ la.T - lb @ lb.T) / sigma**2


def ar3_covariance(coeffs=AR3_COEFFS, sigma: float = AR3_SIGMA, p: int = 15) -> np.ndarray:
    """Autoregressive Toeplitz covariance: invert the Gohberg-Semencul precision."""
    j = gohberg_semencul_precision(coeffs, sigma, p)
    c = np.linalg.inv(j)
    c = 0.5 * (c + c.T)
    return c.astype(complex)


def random_cara_covariance() -> tuple[np.ndarray, ScenarioSpec]:
    """Frozen random sinusoid mixture plus white noise (P=15)."""
    v = steering_matrix(RANDOM_CARA_OMEGA, RANDOM_CARA_P)
    c = (v * RANDOM_CARA_AMPLITUDES) @ v.conj().T
    c = 0.5 * (c + c.conj().T)
    c[np.diag_indices_from(c)] += RANDOM_CARA_SIGMA2
    spec = ScenarioSpec(
        kind="random_cara",
        p=RANDOM_CARA_P,
        a=RANDOM_CARA_AMPLITUDES.copy(),
        omega=RANDOM_CARA_OMEGA.copy(),
        sigma2=RANDOM_CARA_SIGMA2,
    )
    return c, spec


def scenario_covariance(name: str, p: int | None = None) -> tuple[np.ndarray, ScenarioSpec]:
    """Dispatch by scenario name; p applies to the autoregressive scenario only."""
    key = name.replace("_", "-").lower()
    if key == "atom":
        if p is not None and p != ATOM_P:
            raise ValueError(f"the atom scenario is fixed at p={ATOM_P}")
        return atom_covariance()
    if key == "random-cara":
        if p is not None and p != RANDOM_CARA_P:
            raise ValueError(f"the random-cara scenario is fixed at p={RANDOM_CARA_P}")
        return random_cara_covariance()
    if key == "ar3":
        dim = 15 if p is None else p
        c = ar3_covariance(p=dim)
        spec = ScenarioSpec(
            kind="ar3", p=dim, sigma2=AR3_SIGMA**2,
            ar_coeffs=np.asarray(AR3_COEFFS), ar_sigma=AR3_SIGMA,
        )
        return c, spec
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")


def sample(c: np.ndarray, m: int, seed: int) -> SampleBatch:
    """Draw m circular complex Gaussian vectors with covariance c.

    x = L z with L L^H = c and z having independent real and imaginary parts
    of variance 1/2 each, so E[x x^H] = c and E[x x^T] = 0.
    """
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    c = np.asarray(c, dtype=complex)
    try:
        lower = np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        pivot = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())
        raise PositivityError(
            f"covariance is not positive definite: minimum pivot {pivot:.6e}"
        ) from None
    rng = np.random.default_rng(seed)
    p = c.shape[0]
    z = (rng.standard_normal((m, p)) + 1j * rng.standard_normal((m, p))) / np.sqrt(2.0)
    return SampleBatch(m=m, vectors=z @ lower.T, seed=seed)


def sample_covariance(batch) -> np.ndarray:
    """Averaged outer product (1/M) sum_m x_m x_m^H; Hermitian PSD."""
    x = batch.vectors if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=complex)
    if x.ndim != 2:
        raise ValueError("expected an (m, p) array of observations")
    s = x.T @ x.conj() / x.shape[0]
    return 0.5 * (s + s.conj().T)


def write_batch(path, batch: SampleBatch) -> None:
    """Serialize a batch: 28-byte header then m*p little-endian complex doubles.

    Header layout (little-endian): 8-byte magic 'TPGBATCH', uint32 version,
    uint32 p, uint32 m, uint64 seed.  Data is sample-major (row 0 first) with
    each complex value stored as interleaved real then imaginary float64.
    """
    data = np.ascontiguousarray(batch.vectors.astype("<c16", copy=False))
    header = _BATCH_HEADER.pack(
        BATCH_MAGIC, BATCH_VERSION, batch.p, batch.m, batch.seed & (2**64 - 1)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_batch(path) -> SampleBatch:
    """Inverse of write_batch, with strict header and size validation."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _BATCH_HEADER.size:
        raise ValueError(f"batch file too short: {len(raw)} bytes")
    magic, version, p, m, seed = _BATCH_HEADER.unpack_from(raw)
    if magic != BATCH_MAGIC:
        raise ValueError(f"bad magic {magic!r}; not a batch file")
    if version != BATCH_VERSION:
        raise ValueError(f"unsupported batch version {version}")
    expected = _BATCH_HEADER.size + 16 * m * p
    if len(raw) != expected:
        raise ValueError(f"batch file has {len(raw)} bytes, expected {expected}")
    vectors = np.frombuffer(raw, dtype="<c16", offset=_BATCH_HEADER.size).reshape(m, p)
    return SampleBatch(m=m, vectors=vectors.astype(complex), seed=seed)
