"""Gradient descent fitting with Armijo backtracking.

Three variants share one driver: a single learning rate for the joint
parameter vector, separate learning rates for the amplitude and frequency
blocks, and an amplitude-only variant that keeps frequencies pinned to the
initialization grid.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .curvature import lipschitz_approx
from .likelihood import gradient, nll
from .model import TWO_PI, CaratheodoryModel

AUTO = "auto"

# used when the curvature-based resolution of the automatic frequency step
# is unavailable or degenerate
ETA_W0_FALLBACK = 1e-2

_EPSILON_TRACE_FRACTION = 1e-3


class LineSearchStall(RuntimeError):
    """Backtracking exhausted its budget without satisfying the decrease test."""


@dataclass
class OptimizerConfig:
    eta0: float = 1.0
    eta_a0: float = 1.0
    eta_w0: float | str = AUTO
    alpha: float = 0.3
    beta: float = 0.5
    max_iters: int = 45000
    grad_tol: float = 1e-6
    obj_tol: float = 1e-10
    obj_window: int = 20
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.eta0 > 0 or not self.eta_a0 > 0:
            raise ValueError("initial step sizes must be positive")
        if self.eta_w0 != AUTO and not float(self.eta_w0) > 0:
            raise ValueError(f"eta_w0 must be positive or '{AUTO}'")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.max_iters < 1 or self.max_backtracks < 1 or self.obj_window < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.grad_tol <= 0 or self.obj_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IterTrace:
    """Per-iteration history of a fit.

    nll[t] is the objective after the t-th accepted step; gnorm_a/gnorm_w are
    2-norms of the gradient blocks at the point from which the step was taken.
    """

    nll0: float
    nll: list = field(default_factory=list)
    gnorm_a: list = field(default_factory=list)
    gnorm_w: list = field(default_factory=list)
    eta_a: list = field(default_factory=list)
    eta_w: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    reason: str = "max-iters"


@dataclass
class FitResult:
    model: CaratheodoryModel
    trace: IterTrace
    converged: bool
    iterations: int
    wall_time: float


def default_epsilon(s: np.ndarray) -> float:
    """Ridge scaled to the average sample power: 1e-3 * tr(S)/P."""
    s = np.asarray(s)
    return _EPSILON_TRACE_FRACTION * float(np.trace(s).real) / s.shape[0]


def initialize(s: np.ndarray, k: int, seed: int = 0, epsilon: float | None = None) -> CaratheodoryModel:
    """Uniform frequency grid 2*pi*j/K plus i.i.d. uniform raw amplitudes.

    Amplitudes are drawn from U(0, 2 tr(S)/K); deterministic for a fixed seed.
    """
    if k < 1:
        raise ValueError(f"component count must be >= 1, got {k}")
    s = np.asarray(s)
    tr = float(np.trace(s).real)
    rng = np.random.default_rng(seed)
    a0 = rng.uniform(0.0, 2.0 * tr / k, size=k)
    w0 = TWO_PI * np.arange(k) / k
    eps = default_epsilon(s) if epsilon is None else float(epsilon)
    return CaratheodoryModel(a_raw=a0, omega=w0, epsilon=eps, p=s.shape[0])


def resolve_eta_w0(cfg: OptimizerConfig, model: CaratheodoryModel) -> float:
    """Initial frequency step: explicit value, or eta_a0 * l_a/l_w from the
    curvature approximations at the given model."""
    if cfg.eta_w0 != AUTO:
        return float(cfg.eta_w0)
    l_a, l_w = lipschitz_approx(model)
    if not np.isfinite(l_a) or not np.isfinite(l_w) or l_w <= 0.0:
        return ETA_W0_FALLBACK
    return cfg.eta_a0 * l_a / l_w


def armijo_joint(f, x, fx, grad, eta0, alpha, beta, max_backtracks=60, grad_sq=None):
    """Largest eta0 * beta^m satisfying f(x - eta*grad) <= fx - alpha*eta*||grad||^2.

    Returns (eta, x_new, fx_new, m).  Raises LineSearchStall after
    max_backtracks shrinkages.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad_sq is None:
        gn = float(np.linalg.norm(grad))
        grad_sq = gn * gn
    eta = float(eta0)
    for m in range(max_backtracks + 1):
        x_new = x - eta * grad
        fx_new = f(x_new)
        if fx_new <= fx - alpha * eta * grad_sq:
            return eta, x_new, fx_new, m
        eta *= beta
    raise LineSearchStall(
        f"no acceptable step within {max_backtracks} backtracks (last eta {eta / beta:.3e})"
    )


def armijo_split(
    f,
    a,
    w,
    fx,
    grad_a,
    grad_w,
    eta_a0,
    eta_w0,
    alpha,
    beta,
    max_backtracks=60,
    grad_a_sq=None,
    grad_w_sq=None,
):
    """Two-rate backtracking: both steps shrink by beta together until

        f(a - eta_a g_a, w - eta_w g_w) <= fx - alpha (eta_a ||g_a||^2 + eta_w ||g_w||^2).

    Returns (eta_a, eta_w, a_new, w_new, fx_new, m).
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    if grad_a_sq is None:
        gn = float(np.linalg.norm(grad_a))
        grad_a_sq = gn * gn
    if grad_w_sq is None:
        gn = float(np.linalg.norm(grad_w))
        grad_w_sq = gn * gn
    eta_a = float(eta_a0)
    eta_w = float(eta_w0)
    for m in range(max_backtracks + 1):
        a_new = a - eta_a * grad_a
        w_new = w - eta_w * grad_w
        fx_new = f(a_new, w_new)
        if fx_new <= fx - alpha * (eta_a * grad_a_sq + eta_w * grad_w_sq):
            return eta_a, eta_w, a_new, w_new, fx_new, m
        eta_a *= beta
        eta_w *= beta
    raise LineSearchStall(
        f"no acceptable step within {max_backtracks} backtracks "
        f"(last eta_a {eta_a / beta:.3e}, eta_w {eta_w / beta:.3e})"
    )


def fit_gd1(s, k, cfg=None, seed=0, epsilon=None) -> FitResult:
    """Joint-vector gradient descent with a single backtracked learning rate."""
    return _fit(s, k, cfg, seed, epsilon, mode="joint")


def fit_gd2(s, k, cfg=None, seed=0, epsilon=None) -> FitResult:
    """Gradient descent with separate amplitude and frequency learning rates."""
    return _fit(s, k, cfg, seed, epsilon, mode="split")


def fit_gda(s, k, cfg=None, seed=0, epsilon=None) -> FitResult:
    """Amplitude-only descent; frequencies stay on the initialization grid."""
    return _fit(s, k, cfg, seed, epsilon, mode="amp")


def _fit(s, k, cfg, seed, epsilon, mode) -> FitResult:
    cfg = cfg if cfg is not None else OptimizerConfig()
    s = np.asarray(s)
    t0 = time.perf_counter()

    model = initialize(s, k, seed=seed, epsilon=epsilon)
    kk = model.k
    grid = model.omega
    eta_w0 = resolve_eta_w0(cfg, model) if mode == "split" else None

    def make(a, w):
        return CaratheodoryModel(a_raw=a, omega=w, epsilon=model.epsilon, p=model.p)

    def obj_joint(y):
        return nll(s, make(y[:kk], y[kk:]))

    def obj_split(a, w):
        return nll(s, make(a, w))

    def obj_amp(a):
        return nll(s, make(a, grid))

    ev = gradient(s, model)
    trace = IterTrace(nll0=ev.value)
    converged = False
    flat = 0

    for _ in range(cfg.max_iters):
        ga = ev.grad_a
        gw = ev.grad_omega
        g_inf = float(np.abs(ga).max())
        if mode != "amp":
            g_inf = max(g_inf, float(np.abs(gw).max()))
        if g_inf < cfg.grad_tol:
            converged = True
            trace.reason = "grad-converged"
            break

        gna = float(np.linalg.norm(ga))
        gnw = float(np.linalg.norm(gw))
        try:
            if mode == "joint":
                y = np.concatenate([model.a_raw, model.omega])
                g = np.concatenate([ga, gw])
                eta, y_new, f_new, bt = armijo_joint(
                    obj_joint, y, ev.value, g, cfg.eta0, cfg.alpha, cfg.beta,
                    cfg.max_backtracks, grad_sq=gna * gna + gnw * gnw,
                )
                a_new, w_new = y_new[:kk], y_new[kk:]
                ea, ew = eta, eta
            elif mode == "split":
                ea, ew, a_new, w_new, f_new, bt = armijo_split(
                    obj_split, model.a_raw, model.omega, ev.value, ga, gw,
                    cfg.eta_a0, eta_w0, cfg.alpha, cfg.beta, cfg.max_backtracks,
                    grad_a_sq=gna * gna, grad_w_sq=gnw * gnw,
                )
            else:
                eta, a_new, f_new, bt = armijo_joint(
                    obj_amp, model.a_raw, ev.value, ga, cfg.eta_a0, cfg.alpha,
                    cfg.beta, cfg.max_backtracks, grad_sq=gna * gna,
                )
                w_new = grid
                ea, ew = eta, 0.0
        except LineSearchStall:
            trace.reason = "line-search-stalled"
            break

        model = make(a_new, w_new)
        prev = trace.nll[-1] if trace.nll else trace.nll0
        trace.nll.append(f_new)
        trace.gnorm_a.append(gna)
        trace.gnorm_w.append(gnw)
        trace.eta_a.append(ea)
        trace.eta_w.append(ew)
        trace.backtracks.append(bt)

        rel = abs(f_new - prev) / max(1.0, abs(f_new))
        flat = flat + 1 if rel < cfg.obj_tol else 0
        if flat >= cfg.obj_window:
            converged = True
            trace.reason = "obj-converged"
            break

        ev = gradient(s, model)

    return FitResult(
        model=model,
        trace=trace,
        converged=converged,
        iterations=len(trace.nll),
        wall_time=time.perf_counter() - t0,
    )
