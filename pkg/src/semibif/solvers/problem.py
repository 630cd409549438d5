from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..nonlinearity import DomainError, Nonlinearity

# first zero of the Bessel function J_0
J01 = 2.404825557695773


@dataclass(frozen=True)
class ProblemSpec:
    """-Δu = λ f(u) with u = 0 on the boundary of (0, L) (d = 1) or B_R.

    ``size`` is L for d = 1 and the radius R for d = 2, 3.
    """

    d: int
    size: float
    f: Nonlinearity

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not (math.isfinite(self.size) and self.size > 0.0):
            raise DomainError("domain size must be positive")

    @property
    def radius(self):
        """Half-width of the symmetric domain (L/2 in 1D, R otherwise)."""
        return 0.5 * self.size if self.d == 1 else self.size

    @property
    def lambda1(self):
        """First Dirichlet eigenvalue of -Δ on the domain."""
        R = self.radius
        if self.d == 1:
            return (math.pi / (2.0 * R)) ** 2
        if self.d == 2:
            return (J01 / R) ** 2
        return (math.pi / R) ** 2

    def with_f(self, f):
        return ProblemSpec(self.d, self.size, f)

    def to_dict(self):
        key = "L" if self.d == 1 else "R"
        return {"d": self.d, key: self.size, "f": self.f.to_dict()}

    @classmethod
    def from_dict(cls, data):
        d = int(data["d"])
        size = data.get("L") if d == 1 else data.get("R")
        if size is None:
            size = data.get("size")
        if size is None:
            raise DomainError("problem needs L (d = 1) or R (d >= 2)")
        return cls(d, float(size), Nonlinearity.from_dict(data["f"]))


@dataclass
class BranchPoint:
    alpha: float
    lam: float
    arclength: float = 0.0
    profile: Optional[np.ndarray] = field(default=None, repr=False)
