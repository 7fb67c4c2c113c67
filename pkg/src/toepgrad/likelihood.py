"""Gaussian negative log-likelihood, its gradient kernel, and closed-form gradients.

The objective is tr(S C^-1) + log det C, dropping the additive constant of
the Gaussian density.  All derivatives flow through the shared kernel
E = C^-1 (C - S) C^-1, so one Hermitian factorization per evaluation covers
the value, the kernel, and both gradient blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import CaratheodoryModel, _assemble, softplus_chain, steering_matrix

_IMAG_RESIDUE_TOL = 1e-10


class PositivityError(ArithmeticError):
    """A required positive definite factorization failed."""


@dataclass(frozen=True)
class NllEvaluation:
    """One likelihood evaluation: value, gradient blocks, and reusable matrices."""

    value: float
    grad_a: np.ndarray
    grad_omega: np.ndarray
    c_hat: np.ndarray
    c_inv: np.ndarray
    e_matrix: np.ndarray


def _cho(c: np.ndarray):
    try:
        return cho_factor(c, lower=True)
    except np.linalg.LinAlgError:
        pivot = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())
        raise PositivityError(
            f"matrix is not positive definite: minimum pivot {pivot:.6e}"
        ) from None


def _logdet(factor) -> float:
    return float(2.0 * np.log(np.diagonal(factor[0]).real).sum())


def nll(s: np.ndarray, m: CaratheodoryModel) -> float:
    """tr(S C^-1) + log det C for the model covariance C."""
    s = np.asarray(s)
    if s.shape != (m.p, m.p):
        raise ValueError(f"sample covariance shape {s.shape} does not match p={m.p}")
    v = steering_matrix(m.omega, m.p)
    sp, _, _ = softplus_chain(m.a_raw)
    factor = _cho(_assemble(v, sp, m.epsilon))
    trace = float(np.trace(cho_solve(factor, s)).real)
    return trace + _logdet(factor)


def e_matrix(s: np.ndarray, c_hat: np.ndarray) -> np.ndarray:
    """Gradient kernel C^-1 - C^-1 S C^-1, i.e. C^-1 (C - S) C^-1."""
    s = np.asarray(s)
    c_hat = np.asarray(c_hat)
    factor = _cho(c_hat)
    y = cho_solve(factor, c_hat - s)
    e = cho_solve(factor, y.conj().T).conj().T
    return 0.5 * (e + e.conj().T)


def gradient(s: np.ndarray, m: CaratheodoryModel) -> NllEvaluation:
    """Value plus closed-form gradients with respect to amplitudes and frequencies.

    grad_a[k] = s'(a_k) v_k^H E v_k and grad_omega[k] = 2 s(a_k) Im(v_k^H D E v_k)
    with D = diag(0..P-1) applied as index weights.
    """
    s = np.asarray(s)
    if s.shape != (m.p, m.p):
        raise ValueError(f"sample covariance shape {s.shape} does not match p={m.p}")
    v = steering_matrix(m.omega, m.p)
    sp, s1, _ = softplus_chain(m.a_raw)
    c = _assemble(v, sp, m.epsilon)
    factor = _cho(c)

    c_inv = cho_solve(factor, np.eye(m.p, dtype=complex))
    c_inv = 0.5 * (c_inv + c_inv.conj().T)
    value = float(np.trace(cho_solve(factor, s)).real) + _logdet(factor)

    e = c_inv @ (c - s) @ c_inv
    e = 0.5 * (e + e.conj().T)

    ev = e @ v
    quad_a = np.einsum("pk,pk->k", v.conj(), ev)
    residue = float(np.abs(quad_a.imag).max())
    scale = max(1.0, float(np.abs(quad_a).max()))
    if residue > _IMAG_RESIDUE_TOL * scale:
        raise ArithmeticError(
            f"gradient kernel lost Hermitian symmetry: imaginary residue {residue:.3e}"
        )
    d = np.arange(m.p, dtype=float)
    quad_w = np.einsum("pk,pk->k", (d[:, None] * v).conj(), ev)

    return NllEvaluation(
        value=value,
        grad_a=s1 * quad_a.real,
        grad_omega=2.0 * sp * quad_w.imag,
        c_hat=c,
        c_inv=c_inv,
        e_matrix=e,
    )


def kl_divergence(c_true: np.ndarray, c_hat: np.ndarray) -> float:
    """tr(C_hat^-1 C) - P + log det C_hat - log det C; nonnegative, zero iff equal."""
    c_true = np.asarray(c_true)
    c_hat = np.asarray(c_hat)
    if c_true.shape != c_hat.shape:
        raise ValueError("covariances must have equal shape")
    p = c_true.shape[0]
    f_hat = _cho(c_hat)
    f_true = _cho(c_true)
    trace = float(np.trace(cho_solve(f_hat, c_true)).real)
    return trace - p + _logdet(f_hat) - _logdet(f_true)
