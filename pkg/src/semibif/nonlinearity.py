"""Models of the reaction term f in -Δu = λ f(u).

A :class:`Nonlinearity` is an immutable description of f. It evaluates
vectorised over numpy arrays, provides its antiderivative
F(x) = ∫_0^x f, and knows how to compute the mean value of f over an
interval, which is what the d=1 time map actually needs.

Perturbed models are built from a base model plus a :class:`Bump`, a C¹
profile supported on [M, M + width].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

KINDS = ("constant", "linear", "exponential", "arrhenius", "perturbed")

QUAD_TOL = 1e-10
AMPLITUDE_CAP = 10.0

# Gauss-Legendre rule on [0, 1] used for interval means of f.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class DomainError(ValueError):
    """Argument outside the domain of a model or solver."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class InfeasibleAmplitudeError(ValueError):
    """A monotone perturbation was requested with too large an amplitude."""

    def __init__(self, requested, cap):
        super().__init__(
            f"amplitude {requested:g} breaks monotonicity; largest feasible amplitude is {cap:.6g}"
        )
        self.requested = requested
        self.cap = cap


def smoothstep(t):
    """Quintic smoothstep 10t³ - 15t⁴ + 6t⁵ on [0, 1]."""
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_prime(t):
    return 30.0 * t * t * (1.0 - t) ** 2


def bump_shape(t, rise=0.5):
    """Unit-peak profile on (0, 1): smoothstep up on [0, rise], down after.

    Value and slope vanish at both ends and the slope vanishes at the peak
    t = rise, so the profile is C¹ (in fact C²) and its maximum is exactly 1.
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.where(inside, t, 0.0)
    up = smoothstep(np.clip(tc / rise, 0.0, 1.0))
    down = 1.0 - smoothstep(np.clip((tc - rise) / (1.0 - rise), 0.0, 1.0))
    return np.where(inside, np.where(tc <= rise, up, down), 0.0)


def bump_shape_prime(t, rise=0.5):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.where(inside, t, 0.0)
    up = _smoothstep_prime(np.clip(tc / rise, 0.0, 1.0)) / rise
    down = -_smoothstep_prime(np.clip((tc - rise) / (1.0 - rise), 0.0, 1.0)) / (1.0 - rise)
    return np.where(inside, np.where(tc <= rise, up, down), 0.0)


@dataclass(frozen=True)
class Bump:
    """C¹ bump with support [m, m + width] and signed peak ``amplitude``."""

    m: float
    width: float
    amplitude: float
    rise: float = 0.5
    monotone: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0.0):
            raise DomainError(f"bump left endpoint must be >= 0, got {self.m}")
        if not (math.isfinite(self.width) and self.width > 0.0):
            raise DomainError(f"bump width must be > 0, got {self.width}")
        if not math.isfinite(self.amplitude) or abs(self.amplitude) > AMPLITUDE_CAP:
            raise DomainError(f"|amplitude| must be <= {AMPLITUDE_CAP}, got {self.amplitude}")
        if not 0.0 < self.rise < 1.0:
            raise DomainError(f"rise fraction must lie in (0, 1), got {self.rise}")

    @property
    def support(self):
        return (self.m, self.m + self.width)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.amplitude == 0.0:
            return np.zeros_like(x)
        return self.amplitude * bump_shape((x - self.m) / self.width, self.rise)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude / self.width * bump_shape_prime((x - self.m) / self.width, self.rise)

    def to_dict(self):
        return {"m": self.m, "width": self.width, "amplitude": self.amplitude,
                "rise": self.rise, "monotone": self.monotone}


@dataclass(frozen=True)
class Nonlinearity:
    """Immutable model of f.

    ``kind`` is one of ``constant`` (f ≡ value), ``linear`` (f(x) = x),
    ``exponential`` (f = eˣ), ``arrhenius`` (f = exp(x / (1 + eps x))) and
    ``perturbed`` (base + bump).
    """

    kind: str
    eps: float = 0.0
    value: float = 1.0
    base: Optional["Nonlinearity"] = None
    bump: Optional[Bump] = None
    _breaks: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "arrhenius" and not self.eps > 0.0:
            raise DomainError("arrhenius needs eps > 0")
        if self.kind == "constant" and not self.value > 0.0:
            raise DomainError("constant nonlinearity must be positive")
        if self.kind == "perturbed":
            if self.base is None or self.bump is None:
                raise DomainError("perturbed nonlinearity needs base and bump")
            breaks = tuple(sorted(set(self.base.breakpoints + self.bump.support)))
        else:
            breaks = ()
        object.__setattr__(self, "_breaks", breaks)

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=float(value))

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def exponential(cls):
        return cls("exponential")

    @classmethod
    def arrhenius(cls, eps):
        return cls("arrhenius", eps=float(eps))

    # basic properties ---------------------------------------------------
    @property
    def breakpoints(self):
        """Points where f is only finitely smooth (bump support endpoints)."""
        return self._breaks

    @property
    def has_closed_form(self):
        if self.kind == "perturbed":
            return False
        return self.kind != "arrhenius"

    @property
    def bumps(self):
        """All bumps of a (possibly nested) perturbed model, innermost first."""
        if self.kind != "perturbed":
            return ()
        return self.base.bumps + (self.bump,)

    @property
    def root(self):
        """The unperturbed model at the bottom of a perturbation chain."""
        return self.base.root if self.kind == "perturbed" else self

    def __str__(self):
        if self.kind == "arrhenius":
            return f"arrhenius(eps={self.eps:g})"
        if self.kind == "constant":
            return f"constant({self.value:g})"
        if self.kind == "perturbed":
            b = self.bump
            return f"{self.base} + bump(m={b.m:g}, width={b.width:g}, amplitude={b.amplitude:g})"
        return self.kind

    # evaluation ---------------------------------------------------------
    def _raw(self, x):
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "linear":
            return x.copy()
        if self.kind == "exponential":
            return np.exp(x)
        if self.kind == "arrhenius":
            return np.exp(x / (1.0 + self.eps * x))
        return self.base._raw(x) + self.bump(x)

    def __call__(self, x):
        """Evaluate f; scalar in, scalar out."""
        arr = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise DomainError("f is defined on finite x >= 0")
        out = self._raw(arr)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "linear":
            out = np.ones_like(x)
        elif self.kind == "exponential":
            out = np.exp(x)
        elif self.kind == "arrhenius":
            d = 1.0 + self.eps * x
            out = np.exp(x / d) / (d * d)
        else:
            out = self.base.derivative(x) + self.bump.derivative(x)
        return float(out) if out.ndim == 0 else out

    # integrals ----------------------------------------------------------
    def antiderivative(self, x, tol=QUAD_TOL):
        """F(x) = ∫_0^x f(s) ds.

        Closed form for constant, linear and exponential; otherwise
        adaptive quadrature split at the bump breakpoints.
        """
        if not (math.isfinite(x) and x >= 0.0):
            raise DomainError("antiderivative needs finite x >= 0")
        if self.kind == "constant":
            return self.value * x
        if self.kind == "linear":
            return 0.5 * x * x
        if self.kind == "exponential":
            return math.expm1(x)
        total = 0.0
        err_total = 0.0
        pts = [0.0] + [b for b in self.breakpoints if 0.0 < b < x] + [x]
        for a, b in zip(pts[:-1], pts[1:]):
            val, err = integrate.quad(lambda s: float(self._raw(np.asarray(s))), a, b,
                                      epsabs=tol * 1e-2, epsrel=tol, limit=200)
            total += val
            err_total += err
        if err_total > tol * max(1.0, abs(total)):
            raise QuadratureError("antiderivative quadrature did not converge", err_total)
        return total

    def tail_integrals(self, u, alpha):
        """F(alpha) - F(u) for an increasing array ``u`` with u < alpha.

        The difference is accumulated from short Gauss-Legendre panels
        between consecutive nodes, summed from the top, so it keeps full
        relative accuracy as u approaches alpha.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return self.value * (alpha - u)
        if self.kind == "linear":
            return 0.5 * (alpha - u) * (alpha + u)
        if self.kind == "exponential":
            return np.exp(u) * np.expm1(alpha - u)
        cuts = [b for b in self.breakpoints if 0.0 < b < alpha]
        nodes = np.unique(np.concatenate([u, cuts, [alpha]]))
        lo, hi = nodes[:-1], nodes[1:]
        h = hi - lo
        x = lo[:, None] + h[:, None] * _GL_X
        seg = h * (self._raw(x) @ _GL_W)
        tails = np.append(np.cumsum(seg[::-1])[::-1], 0.0)
        return tails[np.searchsorted(nodes, u)]

    # serialisation ------------------------------------------------------
    def to_dict(self):
        if self.kind == "arrhenius":
            return {"kind": "arrhenius", "eps": self.eps}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "perturbed":
            return {"kind": "perturbed", "base": self.base.to_dict(), "bump": self.bump.to_dict()}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind")
        if kind == "arrhenius":
            return cls.arrhenius(data["eps"])
        if kind == "constant":
            return cls.constant(data.get("value", 1.0))
        if kind in ("linear", "exponential"):
            return cls(kind)
        if kind == "perturbed":
            base = cls.from_dict(data["base"])
            b = data["bump"]
            return build_perturbation(base, b["m"], b["width"], b["amplitude"],
                                      monotone=b.get("monotone", False), rise=b.get("rise", 0.5))
        raise DomainError(f"unknown nonlinearity kind {kind!r}")


def _monotone_cap(g, m, width, sign, rise):
    """Largest |amplitude| keeping g + bump nondecreasing on the support."""
    t = np.linspace(0.0, 1.0, 20001)[1:-1]
    slope = bump_shape_prime(t, rise)
    harmful = sign * slope < 0.0
    if not np.any(harmful):
        return math.inf
    gp = np.asarray(g.derivative(m + t[harmful] * width))
    return float(np.min(gp * width / np.abs(slope[harmful])))


def build_perturbation(g, m, width, amplitude, monotone=False, rise=0.5, x_max=None):
    """Return ĝ = g + bump with g - ĝ supported in [m, m + width].

    With ``monotone`` the request must keep ĝ nondecreasing; otherwise an
    :class:`InfeasibleAmplitudeError` carrying the feasible cap is raised.
    """
    m, width, amplitude = float(m), float(width), float(amplitude)
    if width <= 0.0:
        raise DomainError("bump width must be positive")
    if amplitude < 0.0 and monotone:
        sign = -1.0
    else:
        sign = 1.0
    xs = np.linspace(0.0, m + width, 2001)
    if np.any(np.diff(g(xs)) < 0.0):
        raise DomainError("base nonlinearity must be nondecreasing on [0, m + width]")
    if monotone and amplitude != 0.0:
        cap = _monotone_cap(g, m, width, sign, rise)
        # keep a margin so the derivative of ĝ stays strictly positive
        cap *= 1.0 - 1e-6
        if abs(amplitude) > cap:
            raise InfeasibleAmplitudeError(abs(amplitude), cap)
    bump = Bump(m, width, amplitude, rise, monotone)
    out = Nonlinearity("perturbed", base=g, bump=bump)
    hi = x_max if x_max is not None else max(10.0, 2.0 * (m + width))
    sample = np.linspace(0.0, hi, 100001)
    vals = out._raw(sample)
    if np.any(vals[1:] <= 0.0) or (vals[0] < 0.0):
        raise DomainError("perturbed nonlinearity is not positive on the sampled range")
    return out


def monotone_amplitude_cap(g, m, width, sign=1.0, rise=0.5):
    """Feasible amplitude cap for a monotone bump of the given sign."""
    return _monotone_cap(g, m, width, sign, rise) * (1.0 - 1e-6)
