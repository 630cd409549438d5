"""Brouwer degree of discretised maps u ↦ u − λ A⁻¹ f(u) on boxes.

Zeros are enumerated by Latin-hypercube multistarts of a damped, deflated
Newton iteration; the degree is the sum of Jacobian determinant signs.
Completeness of the enumeration is empirical, so every result carries a
"zeros may be missed" caveat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .solvers.fd import dirichlet_laplacian_1d

N_STARTS = 200
BOUNDARY_TOL = 1e-8
DET_TOL = 1e-10
NEWTON_TOL = 1e-12
CAVEAT = "finite-dimensional analogue; zeros may be missed by multistart enumeration"


class BoundaryCrossingError(RuntimeError):
    def __init__(self, lam, norm, point):
        super().__init__(f"F(lambda={lam:g}, .) nearly vanishes on the box boundary "
                         f"(|F| = {norm:.3e})")
        self.lam = lam
        self.norm = norm
        self.point = point


class DegreeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, n, half_width=1.0, center=0.0):
        c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
        return cls(c - half_width, c + half_width)

    @property
    def n(self):
        return self.lo.size

    def contains(self, u, strict=True):
        u = np.asarray(u)
        if strict:
            return bool(np.all(u > self.lo) and np.all(u < self.hi))
        return bool(np.all(u >= self.lo) and np.all(u <= self.hi))

    def product(self, other):
        return Box(np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi]))

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def as_box(box):
    if isinstance(box, Box):
        return box
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        return Box(arr[:1], arr[1:])
    return Box(arr[:, 0], arr[:, 1])


def _fd_jacobian(fun, lam, u, h=1e-7):
    f0 = fun(lam, u)
    J = np.empty((f0.size, u.size))
    for j in range(u.size):
        du = h * max(1.0, abs(u[j]))
        e = u.copy()
        e[j] += du
        J[:, j] = (fun(lam, e) - f0) / du
    return J


@dataclass
class DiscreteMap:
    """F(λ, ·): Rⁿ → Rⁿ with Jacobian."""

    n: int
    fun: Callable
    jac: Optional[Callable] = None
    name: str = "custom"

    def __call__(self, lam, u):
        return np.asarray(self.fun(lam, np.asarray(u, dtype=float)), dtype=float)

    def jacobian(self, lam, u):
        u = np.asarray(u, dtype=float)
        if self.jac is not None:
            return np.atleast_2d(np.asarray(self.jac(lam, u), dtype=float))
        return _fd_jacobian(self.__call__, lam, u)

    @classmethod
    def identity(cls, n):
        eye = np.eye(n)
        return cls(n, lambda lam, u: u.copy(), lambda lam, u: eye, "identity")

    @classmethod
    def custom(cls, fun, n=1, jac=None, parametric=False):
        """Wrap fun(u) (or fun(λ, u) when ``parametric``)."""
        if parametric:
            return cls(n, fun, jac, "custom")
        j = None if jac is None else (lambda lam, u: jac(u))
        return cls(n, lambda lam, u: fun(u), j, "custom")

    @classmethod
    def gelfand_fd(cls, n, f=None, L=1.0):
        """u − λ A⁻¹ f(u) with A the Dirichlet FD Laplacian on n points.

        f defaults to exp. The nonlinearity is evaluated without the
        u ≥ 0 domain check since Newton iterates may leave the cone.
        """
        A, _ = dirichlet_laplacian_1d(n, L)
        Ainv = np.linalg.inv(A)
        if f is None:
            fv, fp = np.exp, np.exp
        else:
            fv, fp = f._raw, f.derivative
        eye = np.eye(n)

        def fun(lam, u):
            with np.errstate(over="ignore", invalid="ignore"):
                return u - lam * (Ainv @ fv(u))

        def jac(lam, u):
            return eye - lam * Ainv * fp(u)[None, :]

        m = cls(n, fun, jac, "gelfand_fd")
        m.Ainv = Ainv
        m.fvals = fv
        return m

    def product(self, other):
        """Block-diagonal map (u, v) ↦ (F(u), G(v))."""
        na = self.n

        def fun(lam, w):
            return np.concatenate([self(lam, w[:na]), other(lam, w[na:])])

        def jac(lam, w):
            J = np.zeros((na + other.n, na + other.n))
            J[:na, :na] = self.jacobian(lam, w[:na])
            J[na:, na:] = other.jacobian(lam, w[na:])
            return J

        return DiscreteMap(na + other.n, fun, jac, f"{self.name}x{other.name}")


@dataclass
class DegreeResult:
    degree: int
    zeros: list
    signs: list
    boundary_clear: bool
    warnings: list = field(default_factory=list)
    lam: float = 0.0
    boundary_min: float = math.inf
    exterior_zeros: list = field(default_factory=list)

    def to_dict(self):
        return {"degree": self.degree, "zeros": [np.asarray(z).tolist() for z in self.zeros],
                "signs": list(self.signs), "boundary_clear": self.boundary_clear,
                "warnings": list(self.warnings)}


def boundary_samples(box: Box, rng, per_face=1000, n_random=10_000):
    """Points on the box boundary: per_face on each face for n ≤ 3, random otherwise."""
    n = box.n
    lo, hi = box.lo, box.hi
    if n == 1:
        return np.array([[lo[0]], [hi[0]]])
    if n <= 3:
        pts = []
        sampler = qmc.LatinHypercube(d=n - 1, seed=rng)
        for axis in range(n):
            others = [k for k in range(n) if k != axis]
            base = sampler.random(per_face)
            for side in (lo[axis], hi[axis]):
                p = np.empty((per_face, n))
                p[:, others] = lo[others] + base * (hi[others] - lo[others])
                p[:, axis] = side
                pts.append(p)
        return np.vstack(pts)
    p = lo + rng.random((n_random, n)) * (hi - lo)
    axis = rng.integers(0, n, n_random)
    side = rng.integers(0, 2, n_random)
    rows = np.arange(n_random)
    p[rows, axis] = np.where(side == 0, lo[axis], hi[axis])
    return p


def boundary_min_norm(fmap, lam, box, rng):
    pts = boundary_samples(box, rng)
    norms = np.array([np.linalg.norm(fmap(lam, p)) for p in pts])
    k = int(np.argmin(norms))
    return float(norms[k]), pts[k]


def _deflation(u, zeros):
    """η(u) = Π(1/‖u − z‖² + 1) and ∇η/η."""
    eta = 1.0
    g = np.zeros_like(u)
    for z in zeros:
        d = u - z
        r2 = float(d @ d)
        if r2 == 0.0:
            return math.inf, g
        m = 1.0 / r2 + 1.0
        eta *= m
        g += (-2.0 * d / (r2 * r2)) / m
    return eta, g


def deflated_newton(fmap, lam, u0, zeros, tol=NEWTON_TOL, max_iter=100, center=None, radius=math.inf):
    """Damped Newton on η(u)F(u) = 0; returns a zero or None.

    Iterates farther than ``radius`` from ``center`` are abandoned.
    """
    u = np.array(u0, dtype=float)
    for _ in range(max_iter):
        F = fmap(lam, u)
        nF = float(np.linalg.norm(F))
        if not math.isfinite(nF):
            return None
        if nF < tol:
            return u
        try:
            delta = np.linalg.solve(fmap.jacobian(lam, u), -F)
        except np.linalg.LinAlgError:
            return None
        eta, geta = _deflation(u, zeros)
        if not math.isfinite(eta):
            return None
        den = 1.0 - float(geta @ delta)
        step = delta / den if abs(den) > 1e-14 else delta
        merit = eta * nF
        t = 1.0
        while True:
            trial = u + t * step
            with np.errstate(over="ignore", invalid="ignore"):
                Ft = fmap(lam, trial)
            et, _ = _deflation(trial, zeros)
            val = et * float(np.linalg.norm(Ft))
            if math.isfinite(val) and val < merit:
                break
            t *= 0.5
            if t < 1.0 / 64:
                # stalled at a local minimum of the deflated merit
                return None
        u = trial
        if not np.all(np.isfinite(u)):
            return None
        if center is not None and float(np.max(np.abs(u - center))) > radius:
            return None
    F = fmap(lam, u)
    return u if float(np.linalg.norm(F)) < tol else None


def find_zeros(fmap, lam, box, n_starts=N_STARTS, seed=0, tol=NEWTON_TOL):
    """Deflated multistart enumeration; returns (inside, exterior) zero lists."""
    box = as_box(box)
    sampler = qmc.LatinHypercube(d=box.n, seed=seed)
    starts = box.lo + sampler.random(n_starts) * (box.hi - box.lo)
    starts = np.vstack([0.5 * (box.lo + box.hi), starts])
    center = 0.5 * (box.lo + box.hi)
    radius = 4.0 * float(np.max(box.hi - box.lo))
    found = []
    for s in starts:
        z = deflated_newton(fmap, lam, s, found, tol, center=center, radius=radius)
        if z is None:
            continue
        if any(np.linalg.norm(z - y) <= 1e-8 * max(1.0, np.linalg.norm(y)) for y in found):
            continue
        found.append(z)
    found.sort(key=lambda z: (float(np.linalg.norm(z)), tuple(z)))
    inside = [z for z in found if box.contains(z)]
    outside = [z for z in found if not box.contains(z)]
    return inside, outside


def brouwer_degree(fmap: DiscreteMap, lam, box, seed=0, n_starts=N_STARTS,
                   boundary_tol=BOUNDARY_TOL, det_tol=DET_TOL):
    """deg(F(λ, ·), box, 0) as the sum of sign det DF over enumerated zeros."""
    box = as_box(box)
    if box.n != fmap.n:
        raise ValueError("box dimension does not match the map")
    rng = np.random.default_rng(seed)
    bmin, bpt = boundary_min_norm(fmap, lam, box, rng)
    if not bmin > boundary_tol:
        raise BoundaryCrossingError(lam, bmin, bpt)
    inside, outside = find_zeros(fmap, lam, box, n_starts, seed)
    signs, warnings = [], [CAVEAT]
    for z in inside:
        det = float(np.linalg.det(fmap.jacobian(lam, z)))
        if abs(det) < det_tol:
            warnings.append(f"regularity doubt: |det DF| = {abs(det):.2e} at a zero")
        signs.append(1 if det > 0 else -1)
    return DegreeResult(int(sum(signs)), inside, signs, True, warnings, float(lam), bmin, outside)


@dataclass
class SweepResult:
    lambdas: list
    results: list
    constant: bool
    crossing: Optional[tuple] = None
    message: str = ""

    @property
    def degrees(self):
        return [r.degree for r in self.results]


def _inside_count(fmap, lam, box, seed, n_starts):
    inside, _ = find_zeros(fmap, lam, box, n_starts, seed)
    return len(inside)


def homotopy_sweep(fmap, lambdas, box, seed=0, n_starts=N_STARTS, refine_tol=1e-6):
    """Degrees along λ; on a change or boundary hit, the λ-interval where a
    zero crossed the box boundary."""
    box = as_box(box)
    lambdas = [float(l) for l in lambdas]
    results = []
    for k, lam in enumerate(lambdas):
        try:
            res = brouwer_degree(fmap, lam, box, seed, n_starts)
        except BoundaryCrossingError as exc:
            lo = lambdas[k - 1] if k else lam
            return SweepResult(lambdas[:k], results, False, (lo, lam), str(exc))
        if results and res.degree != results[-1].degree:
            lo, hi = lambdas[k - 1], lam
            c_lo = len(results[-1].zeros)
            while hi - lo > refine_tol * max(1.0, abs(hi)):
                mid = 0.5 * (lo + hi)
                if _inside_count(fmap, mid, box, seed, n_starts) == c_lo:
                    lo = mid
                else:
                    hi = mid
            return SweepResult(lambdas[:k + 1], results + [res], False, (lo, hi),
                               "a zero crossed the box boundary")
        results.append(res)
    return SweepResult(lambdas, results, True)


def product_check(map_a, box_a, map_b, box_b, lam=0.0, seed=0):
    """Degree of the block-diagonal product versus the product of degrees."""
    box_a, box_b = as_box(box_a), as_box(box_b)
    da = brouwer_degree(map_a, lam, box_a, seed).degree
    db = brouwer_degree(map_b, lam, box_b, seed).degree
    dp = brouwer_degree(map_a.product(map_b), lam, box_a.product(box_b), seed)
    if dp.degree != da * db:
        raise DegreeError(f"product degree {dp.degree} differs from {da} * {db}")
    return dp.degree, da, db


def box_complement(box, hole):
    """Partition box minus the interior of hole into at most 2n boxes."""
    box, hole = as_box(box), as_box(hole)
    if np.any(hole.lo <= box.lo) or np.any(hole.hi >= box.hi):
        raise ValueError("hole must lie strictly inside the box")
    pieces = []
    lo, hi = box.lo.copy(), box.hi.copy()
    for axis in range(box.n):
        a_lo, a_hi = lo.copy(), hi.copy()
        a_hi[axis] = hole.lo[axis]
        pieces.append(Box(a_lo, a_hi))
        b_lo, b_hi = lo.copy(), hi.copy()
        b_lo[axis] = hole.hi[axis]
        pieces.append(Box(b_lo, b_hi))
        lo[axis], hi[axis] = hole.lo[axis], hole.hi[axis]
    return pieces


def excision_check(fmap, lam, box, hole, seed=0):
    """deg on the box equals the summed degree over box minus a zero-free hole.

    Returns (deg_box, deg_complement, hole_zero_count).
    """
    full = brouwer_degree(fmap, lam, box, seed)
    hole = as_box(hole)
    in_hole = [z for z in full.zeros if hole.contains(z, strict=False)]
    total = sum(brouwer_degree(fmap, lam, p, seed).degree for p in box_complement(box, hole))
    return full.degree, total, len(in_hole)


def fd_extremal_lambda(fmap, tol=1e-8, lam_hi=None, max_iter=100_000, blow_cap=1e6):
    """λ*_FD of a Gelfand-type map by bisection on convergence of the
    monotone iteration u ← λ A⁻¹ f(u) from u = 0."""
    Ainv, fv = fmap.Ainv, fmap.fvals

    def converges(lam):
        u = np.zeros(fmap.n)
        for _ in range(max_iter):
            with np.errstate(over="ignore", invalid="ignore"):
                un = lam * (Ainv @ fv(u))
            if not np.all(np.isfinite(un)) or float(np.max(un)) > blow_cap:
                return False
            if float(np.max(np.abs(un - u))) < 1e-12:
                return True
            u = un
        return False

    lo = 0.0
    hi = 1.0 if lam_hi is None else float(lam_hi)
    while converges(hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def minimal_fd_solution(fmap, lam, max_iter=100_000):
    u = np.zeros(fmap.n)
    for _ in range(max_iter):
        un = lam * (fmap.Ainv @ fmap.fvals(u))
        if float(np.max(np.abs(un - u))) < 1e-13:
            return un
        u = un
    raise DegreeError("monotone iteration did not converge")
