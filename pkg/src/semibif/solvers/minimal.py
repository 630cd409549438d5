"""Minimal solutions by monotone iteration from u = 0.

(-Δ + ω) u_{k+1} = λ f(u_k) + ω u_k with ω ≥ the one-sided Lipschitz
constant of f makes the right-hand side nondecreasing in u, so starting
from the subsolution 0 the iterates increase to the minimal solution, or
grow without bound when λ exceeds λ*.
"""
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..admissible import one_sided_lipschitz
from .fd import radial_laplacian

ITER_TOL = 1e-10
BLOW_CAP = 1e6
GRID_N = {1: 2048, 2: 4096, 3: 4096}


def default_grid(d):
    return GRID_N[d]


@dataclass
class MinimalSolution:
    lam: float
    u: np.ndarray
    r: np.ndarray
    iterations: int
    converged: bool
    diverged: bool
    min_increment: float

    @property
    def alpha(self):
        return float(self.u[0])


@dataclass
class MinimalBranchResult:
    """Minimal solutions on a λ-grid; ``beyond`` lists λ with divergence."""

    lambdas: np.ndarray
    alphas: np.ndarray
    solutions: list = field(repr=False)
    beyond: list
    unresolved: list

    @property
    def lambda_star_bracket(self):
        if not self.beyond:
            return None
        ok = [s.lam for s in self.solutions if s.converged]
        return (max(ok) if ok else 0.0, min(self.beyond))


def _omega(f, sigma=100.0):
    return one_sided_lipschitz(f, sigma)


def solve_minimal(problem, lam, grid_n=None, omega=None, u_start=None, tol=ITER_TOL,
                  max_iter=2000000, blow_cap=BLOW_CAP, backend=None):
    """Monotone iteration for one λ, returning a :class:`MinimalSolution`."""
    n = grid_n or default_grid(problem.d)
    if n < 32:
        raise ValueError("grid_n must be at least 32")
    sub, diag, sup, r = radial_laplacian(problem.d, problem.radius, n)
    if omega is None:
        omega = _omega(problem.f)
    u0 = np.zeros(n) if u_start is None else np.ascontiguousarray(u_start, dtype=float)
    if lam == 0.0:
        return MinimalSolution(0.0, np.zeros(n), r, 0, True, False, 0.0)
    k = kernels.get_backend(backend)
    code, value, eps, bumps = kernels.encode(problem.f)
    u, iters, status, incmin = k.monotone_iterate(sub, diag + omega, sup, code, value, eps, bumps,
                                                  float(lam), float(omega), u0, tol,
                                                  int(max_iter), blow_cap)
    return MinimalSolution(float(lam), np.asarray(u), r, int(iters), status == 0, status == 1,
                           float(incmin))


def minimal_branch(problem, lambdas, grid_n=None, tol=ITER_TOL, warm_start=False,
                   keep_profiles=False, backend=None, max_iter=2000000):
    """Minimal solutions for an increasing list of λ.

    Each λ starts from u = 0 unless ``warm_start``, in which case the
    previous minimal solution (a subsolution for larger λ) is used. Once
    an iteration diverges every larger λ is marked as beyond λ*.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) <= 0) or np.any(lambdas < 0):
        raise ValueError("lambdas must be nonnegative and strictly increasing")
    omega = _omega(problem.f)
    sols, beyond, unresolved = [], [], []
    alphas = np.full(lambdas.size, np.nan)
    prev = None
    for i, lam in enumerate(lambdas):
        if beyond:
            beyond.append(float(lam))
            continue
        start = prev.u if (warm_start and prev is not None) else None
        sol = solve_minimal(problem, lam, grid_n, omega, start, tol, max_iter=max_iter,
                            backend=backend)
        if sol.diverged:
            beyond.append(float(lam))
            continue
        if not sol.converged:
            unresolved.append(float(lam))
            continue
        alphas[i] = sol.alpha
        if not keep_profiles:
            sol.u = sol.u.copy()
        sols.append(sol)
        prev = sol
    return MinimalBranchResult(lambdas, alphas, sols, beyond, unresolved)
