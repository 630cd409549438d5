"""The d = 1 time map λ(α).

For -u'' = λ f(u) on (0, L) the symmetric positive solution with sup-norm
α exists for exactly one λ,

    λ(α) = (2 / L²) (∫_0^α du / √(F(α) - F(u)))².

With u = α sin θ the endpoint singularity disappears:

    ∫_0^α du / √(F(α) - F(u)) = √α ∫_0^{π/2} √(1 + sin θ) / √G(α sin θ) dθ,

where G(u) = (F(α) - F(u)) / (α - u) is the mean of f over [u, α]. The
θ-integral is smooth and is computed by composite Gauss-Legendre with
panel doubling; panel edges are aligned with the preimages of the bump
breakpoints of f.
"""
import math

import numpy as np

from ..nonlinearity import QUAD_TOL, DomainError, QuadratureError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(20)


def _theta_rule(alpha, breaks, panels):
    edges = np.linspace(0.0, 0.5 * math.pi, panels + 1)
    if breaks:
        extra = np.arcsin(np.clip(np.asarray(breaks) / alpha, 0.0, 1.0))
        edges = np.unique(np.concatenate([edges, extra]))
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    theta = (mid[:, None] + half[:, None] * _NODES).ravel()
    w = (half[:, None] * _WEIGHTS).ravel()
    return theta, w


def _integral(f, alpha, panels):
    breaks = [b for b in f.breakpoints if 0.0 < b < alpha]
    theta, w = _theta_rule(alpha, breaks, panels)
    u = alpha * np.sin(theta)
    tails = f.tail_integrals(u, alpha)
    if np.any(~(tails > 0.0)):
        raise DomainError("F(alpha) - F(u) <= 0: f must be positive on [0, alpha]")
    mean = tails / (alpha - u)
    return math.sqrt(alpha) * float(np.sum(w * np.sqrt(1.0 + np.sin(theta)) / np.sqrt(mean)))


def time_map_lambda(f, L, alpha, tol=QUAD_TOL, max_panels=2048):
    """λ such that the symmetric solution on (0, L) has sup-norm ``alpha``."""
    if not (L > 0.0 and math.isfinite(L)):
        raise DomainError("L must be positive")
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise DomainError("alpha must be positive")
    panels = 8
    prev = _integral(f, alpha, panels)
    while True:
        panels *= 2
        cur = _integral(f, alpha, panels)
        if abs(cur - prev) <= tol * abs(cur):
            break
        if panels >= max_panels:
            raise QuadratureError("time-map quadrature did not converge",
                                  abs(cur - prev) / abs(cur))
        prev = cur
    return 2.0 * cur * cur / (L * L)


def time_map_curve(f, L, alphas, tol=QUAD_TOL):
    return np.array([time_map_lambda(f, L, a, tol) for a in alphas])
