"""Radial shooting for -Δu = λ f(u) on a ball.

The profile w(s) solving w'' + (d-1)/s w' + f(w) = 0, w(0) = α, w'(0) = 0
reaches zero at s₀(α); then u(r) = w(s₀ r / R) solves the problem on B_R
with λ = (s₀ / R)² and ‖u‖∞ = α. With d = 1 the same integrator solves
the interval problem on (-R, R).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..nonlinearity import DomainError

SHOOT_RTOL = 1e-11


class BranchTermination(RuntimeError):
    """Shooting could not produce a solution; carries the reason."""

    def __init__(self, reason, message, steps=0):
        super().__init__(message)
        self.reason = reason
        self.steps = steps


@dataclass
class ShootResult:
    lam: float
    alpha: float
    s_zero: float
    steps: int
    r: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None


def radial_shoot(f, d, R, alpha, rtol=SHOOT_RTOL, s_max=1e4, profile=False, backend=None):
    if d not in (1, 2, 3):
        raise DomainError("radial shooting supports d = 1, 2, 3")
    if not (R > 0.0 and alpha > 0.0 and np.isfinite(alpha)):
        raise DomainError("R and alpha must be positive")
    k = kernels.get_backend(backend)
    code, value, eps, bumps = kernels.encode(f)
    s0, steps, status, s_nodes, w_nodes = k.shoot(code, value, eps, bumps, d, float(alpha),
                                                  rtol, rtol * 1e-3, s_max, 2000000, profile)
    if status == 1:
        raise BranchTermination("no_zero", f"no zero of the radial profile before s = {s_max:g}",
                                steps)
    if status == 3:
        raise DomainError("f(alpha) must be positive")
    if status != 0:
        raise BranchTermination("divergence",
                                f"step-size failure after {steps} steps at s = {s0:.6g}", steps)
    lam = (s0 / R) ** 2
    out = ShootResult(lam, float(alpha), s0, int(steps))
    if profile:
        out.r = np.asarray(s_nodes) * (R / s0)
        out.u = np.asarray(w_nodes)
    return out


def shoot_lambda(f, d, R, alpha, **kw):
    return radial_shoot(f, d, R, alpha, **kw).lam
