"""Carathéodory parameterization of positive definite Toeplitz covariances.

A P x P covariance is modeled as a nonnegative combination of complex
sinusoid outer products plus a diagonal ridge.  Raw amplitude parameters
run through softplus, so every real parameter vector maps to a valid
(Hermitian, Toeplitz, positive definite) matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

TWO_PI = 2.0 * np.pi


def steering_vector(omega: float, p: int) -> np.ndarray:
    """Complex sinusoid [1, e^{i w}, ..., e^{i w (p-1)}]."""
    if p < 1:
        raise ValueError(f"steering vector dimension must be >= 1, got {p}")
    return np.exp(1j * float(omega) * np.arange(p))


def steering_matrix(omega, p: int) -> np.ndarray:
    """P x K matrix whose k-th column is steering_vector(omega[k], p)."""
    if p < 1:
        raise ValueError(f"steering matrix dimension must be >= 1, got {p}")
    omega = np.asarray(omega, dtype=float)
    return np.exp(1j * np.outer(np.arange(p), omega))


def softplus_chain(x):
    """Softplus with its first two derivatives.

    Returns (s, s1, s2) where s = ln(1 + e^x) evaluated overflow-safely,
    s1 is the sigmoid and s2 = s1 * (1 - s1).  Scalar input yields floats,
    array input yields arrays.
    """
    arr = np.asarray(x, dtype=float)
    s = np.logaddexp(0.0, arr)
    s1 = expit(arr)
    s2 = s1 * (1.0 - s1)
    if arr.ndim == 0 and not isinstance(x, np.ndarray):
        return float(s), float(s1), float(s2)
    return s, s1, s2


@dataclass(frozen=True)
class CaratheodoryModel:
    """Parameter vector of the sinusoid-sum covariance model.

    a_raw : K unconstrained amplitude parameters (softplus is applied on
        assembly).
    omega : K frequencies in radians, reduced mod 2*pi on construction.
    epsilon : positive ridge added to the diagonal.
    p : matrix dimension.
    """

    a_raw: np.ndarray
    omega: np.ndarray
    epsilon: float
    p: int

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a_raw, dtype=float)).copy()
        w = np.mod(np.atleast_1d(np.asarray(self.omega, dtype=float)), TWO_PI)
        if a.ndim != 1 or w.ndim != 1:
            raise ValueError("a_raw and omega must be 1-D")
        if a.size != w.size:
            raise ValueError(
                f"a_raw and omega must have equal length, got {a.size} and {w.size}"
            )
        if a.size < 1:
            raise ValueError("model needs at least one component")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.p < 1:
            raise ValueError(f"dimension must be >= 1, got {self.p}")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "a_raw", a)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "p", int(self.p))

    @property
    def k(self) -> int:
        return self.a_raw.size

    def with_params(self, a_raw, omega) -> "CaratheodoryModel":
        """New model with the same epsilon and dimension."""
        return CaratheodoryModel(a_raw=a_raw, omega=omega, epsilon=self.epsilon, p=self.p)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "epsilon": self.epsilon,
            "a_raw": [float(v) for v in self.a_raw],
            "omega": [float(v) for v in self.omega],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaratheodoryModel":
        model = cls(a_raw=d["a_raw"], omega=d["omega"], epsilon=d["epsilon"], p=d["p"])
        if "k" in d and int(d["k"]) != model.k:
            raise ValueError(f"declared k={d['k']} but parameter vectors have length {model.k}")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CaratheodoryModel":
        return cls.from_dict(json.loads(text))


def _assemble(v: np.ndarray, s: np.ndarray, epsilon: float) -> np.ndarray:
    """Sum of s[k] * v_k v_k^H plus epsilon * I, from a precomputed basis."""
    c = (v * s) @ v.conj().T
    c = 0.5 * (c + c.conj().T)
    c[np.diag_indices_from(c)] += epsilon
    return c


def assemble_covariance(m: CaratheodoryModel) -> np.ndarray:
    """Dense covariance for a model; Hermitian Toeplitz with lam_min >= epsilon."""
    v = steering_matrix(m.omega, m.p)
    s, _, _ = softplus_chain(m.a_raw)
    return _assemble(v, s, m.epsilon)


def hermitian_deviation(c) -> float:
    """Largest entrywise deviation from Hermitian symmetry."""
    c = np.asarray(c)
    return float(np.abs(c - c.conj().T).max())


def toeplitz_deviation(c) -> float:
    """Largest spread (max minus min, real and imaginary parts checked
    separately) along any diagonal; zero iff the matrix is exactly Toeplitz."""
    c = np.asarray(c)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("expected a square matrix")
    p = c.shape[0]
    worst = 0.0
    for d in range(-(p - 1), p):
        diag = np.diagonal(c, offset=d)
        spread = max(
            float(diag.real.max() - diag.real.min()),
            float(diag.imag.max() - diag.imag.min()),
        )
        worst = max(worst, spread)
    return worst
