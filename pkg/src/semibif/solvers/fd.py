"""Finite-difference operators on the symmetric half domain.

Nodes r_i = i h, h = R / n, i = 0..n-1, with u(R) = 0 eliminated. The
radial Laplacian (r^{d-1} u')' / r^{d-1} uses face weights r_{i±1/2}^{d-1};
at r = 0 the ghost value u_{-1} = u_1 gives -Δu ≈ 2d (u_0 - u_1) / h².
For d = 1 this is the interval (-R, R) folded at its midpoint.
"""
import numpy as np


def radial_grid(R, n):
    h = R / n
    return np.arange(n) * h, h


def radial_laplacian(d, R, n):
    """Tridiagonal (sub, diag, sup) of the discrete -Δ with Dirichlet at R."""
    r, h = radial_grid(R, n)
    sub = np.zeros(n - 1)
    diag = np.zeros(n)
    sup = np.zeros(n - 1)
    diag[0] = 2.0 * d / h**2
    sup[0] = -2.0 * d / h**2
    i = np.arange(1, n)
    wl = ((i - 0.5) / i) ** (d - 1)
    wr = ((i + 0.5) / i) ** (d - 1)
    diag[1:] = (wl + wr) / h**2
    sub[:] = -wl / h**2
    sup[1:] = -wr[:-1] / h**2
    return sub, diag, sup, r


def apply_tridiagonal(sub, diag, sup, u):
    out = diag * u
    out[:-1] += sup * u[1:]
    out[1:] += sub * u[:-1]
    return out


def dirichlet_laplacian_1d(n, L=1.0):
    """Dense -d²/dx² on n interior points of (0, L)."""
    h = L / (n + 1)
    A = (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2
    x = h * np.arange(1, n + 1)
    return A, x
