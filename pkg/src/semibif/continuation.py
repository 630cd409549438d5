"""Branch tracing in the sup-norm parameter α, fold refinement, λ* and ε*.

For the radial and 1D problems handled here every positive solution is
determined by α = ‖u‖∞, so the solution continuum is the graph of a
function α ↦ λ(α). Tracing samples that function adaptively; folds are
the strict local extrema of λ along it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .admissible import _limit_at_infinity, _limit_at_zero
from .nonlinearity import DomainError, Nonlinearity, QuadratureError
from .solvers.problem import BranchPoint, ProblemSpec
from .solvers.shooting import BranchTermination, radial_shoot
from .solvers.timemap import time_map_lambda

log = logging.getLogger(__name__)

FOLD_TOL = {1: 1e-8, 2: 1e-6, 3: 1e-6}
EPS_TOL = 5e-4
INITIAL_POINTS = 512
BUMP_POINTS = 64

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


class FoldRejected(RuntimeError):
    """Golden-section refinement ended on the bracket edge: not an extremum."""


class BracketError(ValueError):
    pass


@dataclass
class FoldPoint:
    lam: float
    alpha: float
    kind: str  # "max" | "min"
    tol: float
    index: int = -1

    def to_dict(self):
        return {"lambda": self.lam, "alpha": self.alpha, "kind": self.kind}


@dataclass
class Branch:
    """Polyline of (α, λ) samples ordered along the continuum."""

    alpha: np.ndarray
    lam: np.ndarray
    solver: str = "synthetic"
    tolerances: dict = field(default_factory=dict)
    termination: str = "alpha_max"
    evaluator: Optional[Callable[[float], float]] = field(default=None, repr=False)
    profiles: Optional[list] = field(default=None, repr=False)
    fold_tol: float = 1e-8

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.alpha.shape != self.lam.shape:
            raise ValueError("alpha and lambda must have equal length")

    def __len__(self):
        return self.alpha.size

    @property
    def arclength(self):
        seg = np.hypot(np.diff(self.alpha), np.diff(self.lam))
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def points(self):
        s = self.arclength
        return [BranchPoint(float(a), float(l), float(si)) for a, l, si in zip(self.alpha, self.lam, s)]

    def reversed(self):
        ev = self.evaluator
        prof = None if self.profiles is None else self.profiles[::-1]
        return Branch(self.alpha[::-1].copy(), self.lam[::-1].copy(), self.solver,
                      dict(self.tolerances), self.termination, ev, prof, self.fold_tol)

    @classmethod
    def from_function(cls, func, alphas, fold_tol=1e-8, solver="synthetic"):
        alphas = np.asarray(alphas, dtype=float)
        lam = np.array([func(a) for a in alphas])
        return cls(alphas, lam, solver, {}, "alpha_max", func, None, fold_tol)


def branch_evaluator(problem: ProblemSpec, backend=None):
    """α ↦ λ(α) for the problem: time map in 1D, shooting on balls."""
    f = problem.f
    if problem.d == 1:
        L = problem.size

        def ev(alpha):
            return time_map_lambda(f, L, alpha)

        return ev, "time_map"
    d, R = problem.d, problem.radius

    def ev(alpha):
        return radial_shoot(f, d, R, alpha, backend=backend).lam

    return ev, "radial_shoot"


def trivial_limit(problem):
    """λ at α → 0+: λ₁/a, which is 0 when f(0) > 0."""
    a = _limit_at_zero(problem.f)
    if math.isinf(a):
        return 0.0
    return problem.lambda1 / a if a > 0 else math.inf


def _needs_split(alpha, lam, i, rel_tol, angle_tol, min_width):
    """Whether interval i (between samples i and i+1) should be bisected."""
    if alpha[i + 1] - alpha[i] <= min_width:
        return False
    dl = lam[i + 1] - lam[i]
    scale = max(abs(lam[i]), abs(lam[i + 1]), 1e-300)
    if abs(dl) > rel_tol * scale:
        return True
    # turning indicator: discrete dλ/dα changes sign next to this interval
    for j in (i - 1, i + 1):
        if 0 <= j < alpha.size - 1:
            dj = lam[j + 1] - lam[j]
            if dj * dl < 0.0:
                return True
    return False


def _bump_samples(f, alpha_max, per_bump=BUMP_POINTS):
    """Dense α samples over each bump support and one width beyond it."""
    out = []
    for b in f.bumps:
        lo, hi = b.m, b.m + 2.0 * b.width
        out.append(np.linspace(lo, hi, per_bump))
    if not out:
        return np.empty(0)
    a = np.concatenate(out)
    return a[(a > 0.0) & (a <= alpha_max)]


def trace_branch(problem: ProblemSpec, alpha_max: float, n_initial=INITIAL_POINTS,
                 rel_tol=0.02, max_rounds=8, min_width=None, backend=None):
    """Sample λ(α) on (0, alpha_max] with adaptive refinement.

    The first stored point is the trivial limit (α = 0, λ = λ₁/a); solver
    failures end the branch with the corresponding termination reason.
    """
    if not alpha_max > 0.0:
        raise DomainError("alpha_max must be positive")
    evaluate, solver = branch_evaluator(problem, backend)
    h0 = alpha_max / n_initial
    if min_width is None:
        min_width = h0 / 2**6
    head = h0 * 2.0 ** -np.arange(8, 0, -1)
    alphas = np.concatenate([head, h0 * np.arange(1, n_initial + 1), _bump_samples(problem.f, alpha_max)])
    alphas = np.unique(alphas)
    lams = []
    termination = "alpha_max"
    for a in alphas:
        try:
            lams.append(evaluate(float(a)))
        except BranchTermination as exc:
            termination = exc.reason
            break
        except (QuadratureError, DomainError) as exc:
            log.warning("branch terminated at alpha=%g: %s", a, exc)
            termination = "divergence"
            break
    alphas = alphas[: len(lams)]
    lam = np.array(lams)
    for _ in range(max_rounds):
        split = [i for i in range(alphas.size - 1)
                 if _needs_split(alphas, lam, i, rel_tol, 0.0, min_width)]
        if not split:
            break
        mids = 0.5 * (alphas[split] + alphas[np.array(split) + 1])
        new = []
        for a in mids:
            try:
                new.append(evaluate(float(a)))
            except (BranchTermination, QuadratureError, DomainError):
                new.append(np.nan)
        new = np.array(new)
        ok = np.isfinite(new)
        alphas = np.concatenate([alphas, mids[ok]])
        lam = np.concatenate([lam, new[ok]])
        order = np.argsort(alphas)
        alphas, lam = alphas[order], lam[order]
    lam0 = trivial_limit(problem)
    if math.isfinite(lam0):
        alphas = np.concatenate([[0.0], alphas])
        lam = np.concatenate([[lam0], lam])
    tol = FOLD_TOL[problem.d]
    return Branch(alphas, lam, solver, {"rel_tol": rel_tol, "min_width": min_width,
                                        "fold_tol": tol}, termination, evaluate, None, tol)


def _golden(func, a, b, tol, maximize):
    sign = -1.0 if maximize else 1.0

    def g(x):
        return sign * func(x)

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    x = 0.5 * (a + b)
    return x, func(x)


def _parabola_vertex(a, lam, i):
    x0, x1, x2 = a[i - 1], a[i], a[i + 1]
    y0, y1, y2 = lam[i - 1], lam[i], lam[i + 1]
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    C = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / den
    if A == 0.0:
        return x1, y1
    xv = -B / (2 * A)
    return xv, C - B * B / (4 * A)


def refine_fold(branch: Branch, index: int, tol=None) -> FoldPoint:
    """Locate the λ-extremum near sample ``index`` to α-resolution ``tol``."""
    a, lam = branch.alpha, branch.lam
    if not 0 < index < a.size - 1:
        raise FoldRejected("fold candidate must be interior")
    tol = branch.fold_tol if tol is None else tol
    if lam[index] > lam[index - 1] and lam[index] >= lam[index + 1]:
        kind = "max"
    elif lam[index] < lam[index - 1] and lam[index] <= lam[index + 1]:
        kind = "min"
    else:
        raise FoldRejected(f"sample {index} is not a discrete extremum")
    lo, hi = sorted((a[index - 1], a[index + 1]))
    if branch.evaluator is None:
        x, y = _parabola_vertex(a, lam, index)
        if not lo < x < hi:
            raise FoldRejected("parabolic vertex left the bracket")
        return FoldPoint(float(y), float(x), kind, float(hi - lo), index)
    x, y = _golden(branch.evaluator, lo, hi, tol, kind == "max")
    edge = 2.0 * tol
    if x - lo < edge or hi - x < edge:
        raise FoldRejected(f"refinement drifted to the bracket edge near alpha={x:.6g}")
    return FoldPoint(float(y), float(x), kind, float(tol), index)


@dataclass
class ExtremalReport:
    lambda_star: float
    attained_alpha: Optional[float]
    rationale: str  # "sublinear => infinite" | "superlinear => finite" | "empirical"

    def to_dict(self):
        ls = "inf" if math.isinf(self.lambda_star) else self.lambda_star
        return {"lambda_star": ls, "attained_alpha": self.attained_alpha,
                "rationale": self.rationale}


def extremal_lambda(problem: ProblemSpec, branch: Branch) -> ExtremalReport:
    """λ* from the growth of f at infinity, with the traced supremum."""
    f = problem.f
    xs = np.linspace(0.0, 100.0, 1001)
    if np.any(np.asarray(f(xs)) <= 0.0) or float(f(0.0)) <= 0.0:
        raise DomainError("extremal parameter needs f > 0 on [0, inf)")
    b = _limit_at_infinity(f)
    finite = np.isfinite(branch.lam)
    i = int(np.argmax(np.where(finite, branch.lam, -np.inf)))
    sup_lam = float(branch.lam[i])
    if b == 0.0:
        return ExtremalReport(math.inf, None, "sublinear => infinite")
    if b > 0.0 and i < len(branch) - 1:
        alpha = float(branch.alpha[i])
        if branch.evaluator is not None and 0 < i < len(branch) - 1:
            try:
                fp = refine_fold(branch, i)
                return ExtremalReport(max(fp.lam, sup_lam), fp.alpha, "superlinear => finite")
            except FoldRejected:
                pass
        return ExtremalReport(sup_lam, alpha, "superlinear => finite")
    return ExtremalReport(sup_lam, float(branch.alpha[i]), "empirical")


def critical_eps_search(d, size, bracket=(0.20, 0.30), alpha_max=100.0, eps_tol=EPS_TOL,
                        backend=None):
    """Bisect ε in arrhenius(ε) on the predicate "the traced branch has folds".

    Returns ((eps_lo, eps_hi), n_traces); eps_lo has two folds, eps_hi none.
    """
    from .topology import has_fold_pair

    def s_shaped(eps):
        pb = ProblemSpec(d, size, Nonlinearity.arrhenius(eps))
        return has_fold_pair(trace_branch(pb, alpha_max, backend=backend))

    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError("bracket must satisfy eps_lo < eps_hi")
    at_lo, at_hi = s_shaped(lo), s_shaped(hi)
    if at_lo == at_hi:
        raise BracketError(f"fold count is the same at both ends of ({lo}, {hi})")
    if not at_lo:
        raise BracketError("expected folds at eps_lo and none at eps_hi")
    traces = 2
    while hi - lo > eps_tol:
        mid = 0.5 * (lo + hi)
        if s_shaped(mid):
            lo = mid
        else:
            hi = mid
        traces += 1
    return (lo, hi), traces
