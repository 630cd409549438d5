"""Pure-Python implementations of the compiled kernels.

Same signatures and return conventions as ``_kernels``. Shooting uses
scipy's DOP853 with a terminal event instead of the hand-written
Dormand-Prince loop; the linear-algebra loops use a prefactored banded
solve.
"""
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .nonlinearity import smoothstep


def _make_f(code, value, eps, bumps):
    bumps = np.asarray(bumps, dtype=float).reshape(-1, 4)

    def f(x):
        x = np.asarray(x, dtype=float)
        if code == 0:
            out = np.full_like(x, value)
        elif code == 1:
            out = x.copy()
        elif code == 2:
            out = np.exp(x)
        else:
            out = np.exp(x / (1.0 + eps * x))
        for m, w, a, rise in bumps:
            t = (x - m) / w
            inside = (t > 0.0) & (t < 1.0)
            if np.any(inside):
                up = smoothstep(np.clip(t / rise, 0.0, 1.0))
                down = 1.0 - smoothstep(np.clip((t - rise) / (1.0 - rise), 0.0, 1.0))
                out = out + np.where(inside, a * np.where(t <= rise, up, down), 0.0)
        return out

    return f


def _make_fprime(code, value, eps, bumps):
    bumps = np.asarray(bumps, dtype=float).reshape(-1, 4)

    def fp(x):
        x = np.asarray(x, dtype=float)
        if code == 0:
            out = np.zeros_like(x)
        elif code == 1:
            out = np.ones_like(x)
        elif code == 2:
            out = np.exp(x)
        else:
            q = 1.0 + eps * x
            out = np.exp(x / q) / (q * q)
        for m, w, a, rise in bumps:
            t = (x - m) / w
            inside = (t > 0.0) & (t < 1.0)
            tu = np.clip(t / rise, 0.0, 1.0)
            td = np.clip((t - rise) / (1.0 - rise), 0.0, 1.0)
            up = 30.0 * tu**2 * (1 - tu) ** 2 / rise
            down = -30.0 * td**2 * (1 - td) ** 2 / (1.0 - rise)
            out = out + np.where(inside, a / w * np.where(t <= rise, up, down), 0.0)
        return out

    return fp


def f_values(code, value, eps, bumps, x):
    return _make_f(code, value, eps, bumps)(np.asarray(x, dtype=float))


def shoot(code, value, eps, bumps, d, alpha, rtol=1e-11, atol=1e-14, s_max=1e4,
          max_steps=2000000, store=False):
    f = _make_f(code, value, eps, bumps)
    fa = float(f(alpha))
    if not fa > 0.0:
        return (float("nan"), 0, 3, None, None)
    s0 = 1e-4 * math.sqrt(2.0 * d * max(alpha, 1e-300) / fa)
    y0 = [alpha - fa * s0 * s0 / (2.0 * d), -fa * s0 / d]
    dm1 = d - 1.0

    def rhs(s, y):
        return [y[1], -float(f(y[0])) - (dm1 / s) * y[1] if dm1 else -float(f(y[0]))]

    def hit(s, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (s0, s_max), y0, method="DOP853", rtol=max(rtol, 1e-13),
                    atol=atol, events=hit, dense_output=False)
    steps = sol.t.size
    if sol.status == -1:
        return (float(sol.t[-1]), steps, 2, None, None)
    if not sol.t_events[0].size:
        return (float(sol.t[-1]), steps, 1, None, None)
    sz = float(sol.t_events[0][0])
    if store:
        keep = sol.t < sz  # solve_ivp appends the event point itself
        s_nodes = np.concatenate([[0.0], sol.t[keep], [sz]])
        w_nodes = np.concatenate([[alpha], sol.y[0][keep], [0.0]])
        return (sz, steps, 0, s_nodes, w_nodes)
    return (sz, steps, 0, None, None)


def monotone_iterate(sub, diag, sup, code, value, eps, bumps, lam, omega, u0,
                     tol=1e-10, max_iter=1000000, blow_cap=1e6):
    f = _make_f(code, value, eps, bumps)
    n = len(diag)
    mat = diags([sub, diag, sup], [-1, 0, 1], shape=(n, n), format="csc")
    lu = splu(mat)
    u = np.array(u0, dtype=float, copy=True)
    incmin = 0.0
    status = 2
    k = 0
    for k in range(int(max_iter)):
        with np.errstate(over="ignore", invalid="ignore"):
            un = lu.solve(lam * f(u) + omega * u)
        inc = un - u
        incmin = min(incmin, float(inc.min()))
        u = un
        sup_norm = float(np.max(np.abs(u)))
        if not math.isfinite(sup_norm) or sup_norm > blow_cap:
            status = 1
            break
        if float(np.max(np.abs(inc))) < tol:
            status = 0
            break
    return (u, k + 1, status, incmin)


def imex_evolve(sub, diag, sup, code, value, eps, bumps, lam, u0, t_max, dt_max, dt_min,
                adaptive, steady_tol, blow_cap, out_times):
    f = _make_f(code, value, eps, bumps)
    fp = _make_fprime(code, value, eps, bumps)
    sub, diag, sup = (np.asarray(a, dtype=float) for a in (sub, diag, sup))
    out_times = np.asarray(out_times, dtype=float)
    n = diag.size
    u = np.array(u0, dtype=float, copy=True)
    t = 0.0
    rate = 0.0
    status = 2
    samples = []
    hist = []
    j = 0
    nstep = 0
    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            fu = f(u)
            reaction = float(np.max(np.abs(lam * fu))) if n else 0.0
            umax = float(np.max(u)) if n else 0.0
            slope = float(np.max(np.abs(fp(u)))) if n else 0.0
        if not math.isfinite(umax) or umax > blow_cap or not math.isfinite(reaction) \
                or reaction > blow_cap:
            status = 1
            break
        if t >= t_max:
            status = 2
            break
        dt = dt_max
        if adaptive and lam * slope > 0.0:
            dt = min(dt_max, 0.2 / (lam * slope))
        if j < out_times.size and out_times[j] - t < dt:
            dt = out_times[j] - t
        if t + dt > t_max:
            dt = t_max - t
        if dt < dt_min and not (j < out_times.size and out_times[j] - t < dt_min):
            status = 3
            break
        ab = np.zeros((3, n))
        ab[0, 1:] = dt * sup
        ab[1] = 1.0 + dt * diag
        ab[2, :-1] = dt * sub
        un = solve_banded((1, 1), ab, u + dt * lam * fu)
        with np.errstate(over="ignore", invalid="ignore"):
            # A u_{n+1} - λ f(u_{n+1}) evaluated from the update
            res = (un - u) / dt + lam * (f(un) - fu) if dt > 0 else np.zeros(n)
        rate = float(np.max(np.abs(res))) if n else 0.0
        u = un
        t += dt
        nstep += 1
        while j < out_times.size and out_times[j] <= t + 1e-14 * max(1.0, t):
            samples.append(u.copy())
            j += 1
        if nstep % 16 == 0:
            hist.append((t, float(np.max(np.abs(u)))))
        if rate < steady_tol and dt > 0.0:
            status = 0
            break
    hist.append((t, float(np.max(np.abs(u))) if n else 0.0))
    smp = np.array(samples).reshape(len(samples), n)
    return (status, t, u, rate, smp, np.asarray(hist))
