"""Scoring: first-row squared error, the Toeplitz Cramér-Rao bound, and
trial success classification.

The headline accuracy number is the summed squared error over the first
row of the covariance (the CSV column keeps the conventional name "rmse").
The matching lower bound sums the inverse-Fisher variances of the 2P-1
real first-row coordinates, so the two are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import toeplitz_deviation

_TOEPLITZ_INPUT_TOL = 1e-8


@dataclass(frozen=True)
class CrbResult:
    """Variance lower bounds for the first-row real coordinates.

    bounds holds the inverse-Fisher diagonal in the order
    (c_0, Re c_1, Im c_1, ..., Re c_{P-1}, Im c_{P-1}); scalar is their sum,
    comparable to the first-row squared-error metric.
    """

    bounds: np.ndarray
    scalar: float
    fisher: np.ndarray


@dataclass
class TrialRecord:
    """One Monte-Carlo trial, mirroring a benchmark CSV row."""

    scenario: str
    method: str
    k_factor: float
    m: int
    trial: int
    seed: int
    rmse: float
    kl: float
    crb: float
    runtime_s: float
    iterations: int
    converged: bool
    success: bool


def first_row_mse(c_hat: np.ndarray, c_true: np.ndarray) -> float:
    """Summed squared error over the first row: sum_i |C_hat[0,i] - C[0,i]|^2."""
    c_hat = np.asarray(c_hat)
    c_true = np.asarray(c_true)
    if c_hat.shape != c_true.shape:
        raise ValueError(f"shape mismatch: {c_hat.shape} vs {c_true.shape}")
    diff = c_hat[0, :] - c_true[0, :]
    return float(np.sum(np.abs(diff) ** 2))


def _first_row_derivatives(p: int) -> list[np.ndarray]:
    # theta = (c_0, Re c_1, Im c_1, ..., Re c_{P-1}, Im c_{P-1}); c_0 is real.
    derivs = [np.eye(p, dtype=complex)]
    for d in range(1, p):
        upper = np.eye(p, k=d, dtype=complex)
        derivs.append(upper + upper.T)
        derivs.append(1j * upper - 1j * upper.T)
    return derivs


def toeplitz_crb(c_true: np.ndarray, m_samples: int) -> CrbResult:
    """Cramér-Rao bound for the first-row coordinates of a Toeplitz covariance.

    Fisher entries follow the circular complex Gaussian form
    F[u, v] = M tr(C^-1 dC/du C^-1 dC/dv); the scalar bound is tr(F^-1).
    """
    c_true = np.asarray(c_true, dtype=complex)
    if m_samples < 1:
        raise ValueError(f"sample count must be >= 1, got {m_samples}")
    if toeplitz_deviation(c_true) > _TOEPLITZ_INPUT_TOL * max(1.0, float(np.abs(c_true).max())):
        raise ValueError("covariance is not Toeplitz")
    p = c_true.shape[0]
    c_inv = np.linalg.inv(c_true)
    pre = [c_inv @ d for d in _first_row_derivatives(p)]
    n = len(pre)
    fisher = np.empty((n, n))
    for u in range(n):
        for v in range(u, n):
            val = float(np.sum(pre[u] * pre[v].T).real)
            fisher[u, v] = val
            fisher[v, u] = val
    fisher *= m_samples
    try:
        np.linalg.cholesky(fisher)
    except np.linalg.LinAlgError:
        raise ValueError(
            "Fisher matrix is rank deficient; first-row parameterization is not identifiable"
        ) from None
    bounds = np.diag(np.linalg.inv(fisher)).copy()
    return CrbResult(bounds=bounds, scalar=float(bounds.sum()), fisher=fisher)


def classify_success(record: TrialRecord, crb_scalar: float, factor: float = 10.0) -> bool:
    """A trial counts as successful when it converged and its error is within
    factor * CRB."""
    if not record.converged:
        return False
    return bool(np.isfinite(record.rmse) and record.rmse <= factor * crb_scalar)
