"""Shared helpers: random model and sample-covariance factories."""

import numpy as np

from toepgrad.model import CaratheodoryModel


def random_model(rng, p=None, k=None, eps_lo=0.05, eps_hi=0.5):
    p = int(rng.integers(3, 9)) if p is None else p
    k = int(rng.integers(p, 3 * p + 1)) if k is None else k
    return CaratheodoryModel(
        a_raw=rng.uniform(-1.5, 2.0, size=k),
        omega=rng.uniform(0.0, 2.0 * np.pi, size=k),
        epsilon=float(rng.uniform(eps_lo, eps_hi)),
        p=p,
    )


def random_psd(rng, p, dof=None):
    """Wishart-style Hermitian PSD matrix with unit-scale entries."""
    dof = 2 * p if dof is None else dof
    g = (rng.standard_normal((p, dof)) + 1j * rng.standard_normal((p, dof))) / np.sqrt(2.0)
    s = g @ g.conj().T / dof
    return 0.5 * (s + s.conj().T)


def random_pd(rng, p, ridge=0.1):
    s = random_psd(rng, p)
    s[np.diag_indices_from(s)] += ridge
    return s
