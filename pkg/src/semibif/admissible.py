"""Growth and monotonicity diagnostics for f.

These estimate the limits a = lim_{x→0+} f(x)/x and b = lim_{x→∞} f(x)/x,
whether f(x)/x is strictly decreasing, and a sampled one-sided Lipschitz
constant ω(σ) used to shift the monotone iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nonlinearity import DomainError

INFINITY_THRESHOLD = 1e12


@dataclass
class AdmissibilityReport:
    a: float
    b: float
    lambda_star_interval: tuple
    ratio_decreasing: bool
    one_sided_lipschitz: dict = field(default_factory=dict)
    inconclusive: bool = False
    notes: list = field(default_factory=list)

    @property
    def interval_empty(self):
        lo, hi = self.lambda_star_interval
        return not lo < hi

    def omega(self, sigma):
        """ω at the smallest tabulated σ' ≥ σ (or the largest entry)."""
        keys = sorted(self.one_sided_lipschitz)
        for k in keys:
            if k >= sigma:
                return self.one_sided_lipschitz[k]
        return self.one_sided_lipschitz[keys[-1]]

    def to_dict(self):
        return {
            "a": _json_real(self.a),
            "b": _json_real(self.b),
            "lambda_star_interval": [_json_real(v) for v in self.lambda_star_interval],
            "ratio_decreasing": self.ratio_decreasing,
            "one_sided_lipschitz": {str(k): v for k, v in sorted(self.one_sided_lipschitz.items())},
            "inconclusive": self.inconclusive,
            "notes": list(self.notes),
        }


def _json_real(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _ratio(f, x):
    with np.errstate(over="ignore"):
        return np.asarray(f(np.asarray(x, dtype=float)), dtype=float) / x


def _limit_at_zero(f):
    f0 = float(f(0.0))
    if f0 > 0.0:
        # f(x)/x ~ f(0)/x
        return math.inf
    xs = 10.0 ** -np.arange(2, 9)
    q = _ratio(f, xs)
    if np.all(np.diff(q) > 0) and (q[-1] > INFINITY_THRESHOLD or np.all(q[1:] / q[:-1] >= 5.0)):
        return math.inf
    # q(x) = a + c x + ...; one Richardson step with ratio 10
    return float(q[-1] + (q[-1] - q[-2]) / 9.0)


def _limit_at_infinity(f):
    xs = 10.0 ** np.arange(1, 9)
    q = _ratio(f, xs)
    if np.any(~np.isfinite(q)) or (np.all(np.diff(q) > 0) and q[-1] > INFINITY_THRESHOLD):
        return math.inf
    tail = q[-4:]
    if np.all(tail > 0) and np.all(np.abs(tail[1:] / tail[:-1] - 0.1) < 0.03):
        # q ~ C/x
        return 0.0
    # q(x) = b + c/x
    b = float((10.0 * q[-1] - q[-2]) / 9.0)
    if abs(b) < 1e-9 * max(1.0, abs(q[0])):
        return 0.0
    return b


def one_sided_lipschitz(f, sigma, n_pairs=10_000, seed=0, headroom=0.1):
    """ω(σ) = (1 + headroom) · max over sampled pairs in [0, σ] of the
    negative part of the difference quotient of f."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, sigma, n_pairs)
    y = rng.uniform(0.0, sigma, n_pairs)
    keep = np.abs(y - x) > 1e-12 * max(sigma, 1.0)
    x, y = x[keep], y[keep]
    q = (f(y) - f(x)) / (y - x)
    worst = float(np.max(np.maximum(0.0, -q), initial=0.0))
    return worst * (1.0 + headroom)


def ratio_decreasing(f, x_max=1e3, n=10_000, rel_tol=1e-12):
    """Sample f(x)/x on a log grid and classify its monotonicity.

    Returns (decreasing, inconclusive).
    """
    xs = np.geomspace(1e-6, x_max, n)
    q = _ratio(f, xs)
    d = np.diff(q)
    scale = rel_tol * np.abs(q[:-1])
    if np.all(d < -scale):
        return True, False
    if np.any(d > scale):
        return False, False
    return True, True


def admissibility_check(f, lambda1, x_max=1e3):
    """Estimate a, b, the interval (λ₁/a, λ₁/b) and the sampled ω(σ) table."""
    if not lambda1 > 0.0:
        raise DomainError("lambda1 must be positive")
    xs = np.linspace(0.0, x_max, 2001)[1:]
    if np.any(np.asarray(f(xs)) <= 0.0):
        raise DomainError("f must be positive on (0, x_max]")
    a = _limit_at_zero(f)
    b = _limit_at_infinity(f)
    lo = 0.0 if math.isinf(a) else (math.inf if a == 0.0 else lambda1 / a)
    hi = 0.0 if math.isinf(b) else (math.inf if b == 0.0 else lambda1 / b)
    if not a > b:
        lo = hi = lambda1 / a if math.isfinite(a) and a > 0 else 0.0
    decreasing, inconclusive = ratio_decreasing(f, x_max)
    table = {s: one_sided_lipschitz(f, s) for s in (1.0, 10.0, 100.0, x_max)}
    notes = []
    if inconclusive:
        notes.append("f(x)/x is flat to rounding somewhere on the sample grid")
    return AdmissibilityReport(a, b, (lo, hi), decreasing, table, inconclusive, notes)


def arrhenius_ratio_derivative(eps, x):
    """Closed form of d/dx [exp(x/(1+εx)) / x]."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("x must be positive")
    d = 1.0 + eps * x
    quad = eps * eps * x * x + (2.0 * eps - 1.0) * x + 1.0
    out = -np.exp(x / d) / (x * x * d * d) * quad
    return float(out) if out.ndim == 0 else out
