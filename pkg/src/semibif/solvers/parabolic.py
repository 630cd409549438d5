"""∂_t u - Δu = λ f(u) on the symmetric FD grid, IMEX Euler in time.

Diffusion is implicit and the reaction explicit; the discrete scheme keeps
order (u0 ≤ v0 implies u(t) ≤ v(t)) whenever 1 + dt λ f' ≥ 0, and its
fixed points are exactly the FD steady states.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import kernels
from .fd import apply_tridiagonal, radial_laplacian
from .minimal import BLOW_CAP, default_grid

STEADY_TOL = 1e-8


class StepUnderflowError(RuntimeError):
    pass


@dataclass
class EvolutionResult:
    outcome: str  # "converged" | "growing" | "blowup"
    time: float
    u: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    sup_norm: float
    rate: float
    residual: Optional[float]
    history: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    sample_times: np.ndarray = field(repr=False)
    threshold: float = BLOW_CAP


def parabolic_evolve(problem, lam, u0=None, t_max=50.0, grid_n=None, dt_max=1e-2, dt_min=1e-12,
                     adaptive=True, steady_tol=STEADY_TOL, blow_cap=BLOW_CAP, out_times=(),
                     backend=None):
    """Evolve from ``u0`` (default 0) until steady, blow-up or ``t_max``.

    Blow-up is declared when sup|u| or sup|λ f(u)| exceeds ``blow_cap``.
    """
    n = grid_n or (len(u0) if u0 is not None else default_grid(problem.d))
    sub, diag, sup, r = radial_laplacian(problem.d, problem.radius, n)
    u0 = np.zeros(n) if u0 is None else np.ascontiguousarray(u0, dtype=float)
    if u0.shape != (n,):
        raise ValueError(f"u0 must have {n} grid values")
    if np.any(u0 < 0.0):
        raise ValueError("u0 must be nonnegative")
    times = np.ascontiguousarray(sorted(out_times), dtype=float)
    k = kernels.get_backend(backend)
    code, value, eps, bumps = kernels.encode(problem.f)
    # half the tolerance inside the loop: re-evaluating A u - λ f(u) costs ~1e-9 of rounding
    status, t, u, rate, samples, hist = k.imex_evolve(sub, diag, sup, code, value, eps, bumps,
                                                      float(lam), u0, float(t_max), float(dt_max),
                                                      float(dt_min), bool(adaptive),
                                                      0.5 * steady_tol, float(blow_cap), times)
    if status == 3:
        raise StepUnderflowError(f"time step fell below {dt_min:g} at t = {t:.6g}")
    u = np.asarray(u)
    outcome = {0: "converged", 1: "blowup", 2: "growing"}[status]
    residual = None
    if outcome == "converged":
        res = apply_tridiagonal(sub, diag, sup, u) - lam * problem.f(np.maximum(u, 0.0))
        residual = float(np.max(np.abs(res)))
    return EvolutionResult(outcome, float(t), u, r, float(np.max(np.abs(u))), float(rate),
                           residual, np.asarray(hist), np.asarray(samples),
                           times[: len(samples)], blow_cap)
