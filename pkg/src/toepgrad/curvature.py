"""Covariance derivatives, diagonal Hessian blocks, and curvature estimates.

The frequency block is far stiffer than the amplitude block; the cheap
approximations at the bottom capture that scaling and drive the automatic
frequency step size in the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .likelihood import _cho
from .model import CaratheodoryModel, _assemble, softplus_chain, steering_matrix


@dataclass(frozen=True)
class HessianBlocks:
    """Exact diagonal Hessian blocks with spectral norms and their approximations."""

    h_aa: np.ndarray
    h_omega_omega: np.ndarray
    l_a_exact: float
    l_w_exact: float
    l_a_approx: float
    l_w_approx: float


def _check_index(m: CaratheodoryModel, j: int) -> int:
    j = int(j)
    if not 0 <= j < m.k:
        raise IndexError(f"component index {j} out of range for k={m.k}")
    return j


def dcov_da(m: CaratheodoryModel, j: int) -> np.ndarray:
    """Derivative of the covariance in the j-th raw amplitude: s'(a_j) v_j v_j^H."""
    j = _check_index(m, j)
    v = np.exp(1j * m.omega[j] * np.arange(m.p))
    _, s1, _ = softplus_chain(float(m.a_raw[j]))
    return s1 * np.outer(v, v.conj())


def dcov_domega(m: CaratheodoryModel, j: int) -> np.ndarray:
    """Derivative of the covariance in the j-th frequency.

    s(a_j) * i * (D v_j v_j^H - v_j (D v_j)^H); Hermitian with zero diagonal.
    """
    j = _check_index(m, j)
    n = np.arange(m.p)
    v = np.exp(1j * m.omega[j] * n)
    w = n * v
    sp, _, _ = softplus_chain(float(m.a_raw[j]))
    return sp * 1j * (np.outer(w, v.conj()) - np.outer(v, w.conj()))


def _de(a_inv: np.ndarray, b: np.ndarray, dc: np.ndarray) -> np.ndarray:
    # dE = -A dc A + A dc B + B dc A  with A = C^-1 and B = C^-1 S C^-1
    x = a_inv @ dc
    term = -x @ a_inv + x @ b + b @ (dc @ a_inv)
    return 0.5 * (term + term.conj().T)


def de_dtheta(s: np.ndarray, c_hat: np.ndarray, dc: np.ndarray) -> np.ndarray:
    """Derivative of the gradient kernel E along a covariance perturbation dc."""
    s = np.asarray(s)
    c_hat = np.asarray(c_hat)
    dc = np.asarray(dc)
    factor = _cho(c_hat)
    a_inv = cho_solve(factor, np.eye(c_hat.shape[0], dtype=complex))
    a_inv = 0.5 * (a_inv + a_inv.conj().T)
    b = a_inv @ s @ a_inv
    b = 0.5 * (b + b.conj().T)
    return _de(a_inv, b, dc)


def _spectral_norm_sym(h: np.ndarray) -> float:
    sym = 0.5 * (h + h.T)
    return float(np.abs(np.linalg.eigvalsh(sym)).max())


def lipschitz_approx(m: CaratheodoryModel) -> tuple[float, float]:
    """Cheap per-block curvature estimates (amplitude, frequency).

    l_a ~ P ||C^-1||_2 and l_w ~ P^1.5 ||s||_2^2 ||C^-1||_2^1.5.
    """
    c = _assemble(steering_matrix(m.omega, m.p), softplus_chain(m.a_raw)[0], m.epsilon)
    lam_min = float(np.linalg.eigvalsh(c)[0])
    cinv_norm = 1.0 / lam_min
    sp = softplus_chain(m.a_raw)[0]
    l_a = m.p * cinv_norm
    l_w = m.p**1.5 * float(sp @ sp) * cinv_norm**1.5
    return l_a, l_w


def hessian_blocks(s: np.ndarray, m: CaratheodoryModel) -> HessianBlocks:
    """Exact amplitude and frequency Hessian blocks of the likelihood."""
    s = np.asarray(s)
    if s.shape != (m.p, m.p):
        raise ValueError(f"sample covariance shape {s.shape} does not match p={m.p}")
    p, k = m.p, m.k
    n = np.arange(p, dtype=float)
    v = steering_matrix(m.omega, p)
    w = n[:, None] * v
    u = (n**2)[:, None] * v
    sp, s1, s2 = softplus_chain(m.a_raw)

    c = _assemble(v, sp, m.epsilon)
    factor = _cho(c)
    a_inv = cho_solve(factor, np.eye(p, dtype=complex))
    a_inv = 0.5 * (a_inv + a_inv.conj().T)
    b = a_inv @ s @ a_inv
    b = 0.5 * (b + b.conj().T)
    e = a_inv - b

    ev_ = e @ v
    ew = e @ w
    quad_vev = np.einsum("pk,pk->k", v.conj(), ev_).real

    h_aa = np.empty((k, k))
    h_ww = np.empty((k, k))
    for j in range(k):
        vj = v[:, j]
        wj = w[:, j]
        de_a = _de(a_inv, b, s1[j] * np.outer(vj, vj.conj()))
        h_aa[:, j] = s1 * np.einsum("pk,pk->k", v.conj(), de_a @ v).real
        dc_w = sp[j] * 1j * (np.outer(wj, vj.conj()) - np.outer(vj, wj.conj()))
        de_w = _de(a_inv, b, dc_w)
        h_ww[:, j] = 2.0 * sp * np.einsum("pk,pk->k", w.conj(), de_w @ v).imag

    idx = np.diag_indices(k)
    h_aa[idx] += s2 * quad_vev
    # extra diagonal terms from differentiating the steering vector itself
    diag_extra = (
        -np.einsum("pk,pk->k", u.conj(), ev_).real
        + np.einsum("pk,pk->k", w.conj(), ew).real
    )
    h_ww[idx] += 2.0 * sp * diag_extra

    lam_min = float(np.linalg.eigvalsh(c)[0])
    cinv_norm = 1.0 / lam_min
    return HessianBlocks(
        h_aa=h_aa,
        h_omega_omega=h_ww,
        l_a_exact=_spectral_norm_sym(h_aa),
        l_w_exact=_spectral_norm_sym(h_ww),
        l_a_approx=p * cinv_norm,
        l_w_approx=p**1.5 * float(sp @ sp) * cinv_norm**1.5,
    )
