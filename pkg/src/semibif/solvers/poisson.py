"""Closed-form solution of -ΔΨ = 1_{B_ρ} in B_R, Ψ = 0 on ∂B_R.

Inside B_ρ the profile is c - r²/(2d); outside it is the radial harmonic
function matching value and flux at r = ρ. K(ρ) = Ψ(2ρ)/ρ² is the
normalised infimum of Ψ over B_{2ρ}.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from ..nonlinearity import DomainError
from .fd import radial_laplacian


@dataclass(frozen=True)
class PoissonProfile:
    d: int
    R: float
    rho: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError("d must be 1, 2 or 3")
        if not (self.rho > 0.0 and 2.0 * self.rho < self.R):
            raise DomainError(f"need 0 < 2 rho < R, got rho={self.rho}, R={self.R}")

    def _outer(self, r):
        d, R, rho = self.d, self.R, self.rho
        if d == 1:
            return rho * (R - r)
        if d == 2:
            return 0.5 * rho**2 * np.log(R / r)
        return rho**3 / 3.0 * (1.0 / r - 1.0 / R)

    @property
    def inner_constant(self):
        return float(self._outer(self.rho)) + self.rho**2 / (2.0 * self.d)

    @property
    def coefficients(self):
        """Piecewise description: inner c - r²/(2d); outer harmonic piece."""
        d, R, rho = self.d, self.R, self.rho
        outer = {1: {"form": "rho*(R-r)"},
                 2: {"form": "rho^2/2*log(R/r)"},
                 3: {"form": "rho^3/3*(1/r-1/R)"}}[d]
        return {"inner_constant": self.inner_constant, "inner_quadratic": -1.0 / (2 * d),
                "outer": outer}

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        inner = self.inner_constant - r * r / (2.0 * self.d)
        safe = np.where(r > 0.0, r, self.rho)
        out = np.where(r < self.rho, inner, self._outer(safe))
        out = np.where(r >= self.R, 0.0, out)
        return float(out) if out.ndim == 0 else out

    @property
    def K(self):
        d, R, rho = self.d, self.R, self.rho
        if d == 1:
            return R / rho - 2.0
        if d == 2:
            return 0.5 * math.log(R / (2.0 * rho))
        return 1.0 / 6.0 - rho / (3.0 * R)

    def infimum_on_double_ball(self):
        return float(self(2.0 * self.rho))

    def to_dict(self):
        return {"d": self.d, "R": self.R, "rho": self.rho, "K": self.K,
                "coefficients": self.coefficients}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def poisson_profile(d, R, rho):
    return PoissonProfile(int(d), float(R), float(rho))


def poisson_fd(d, R, rho, n=10_000):
    """Finite-difference solution on the radial grid, for cross-checking.

    The indicator is integrated exactly over each control volume, so the
    jump at r = ρ does not degrade the second-order accuracy.
    """
    sub, diag, sup, r = radial_laplacian(d, R, n)
    h = R / n
    lo = np.maximum(r - 0.5 * h, 0.0)
    hi = r + 0.5 * h
    vol = hi**d - lo**d
    covered = np.clip(np.minimum(hi, rho), lo, None) ** d - lo**d
    rhs = covered / vol
    ab = np.zeros((3, n))
    ab[0, 1:] = sup
    ab[1] = diag
    ab[2, :-1] = sub
    return r, solve_banded((1, 1), ab, rhs)
