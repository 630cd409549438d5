# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

The nonlinearity arrives encoded as (code, value, eps, bumps) where code is
0 constant, 1 linear, 2 exponential, 3 arrhenius, and ``bumps`` is a
(k, 4) array of (m, width, amplitude, rise) rows. See ``kernels.encode``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, isfinite, fmax, fmin

cnp.import_array()

cdef struct FParams:
    int code
    double value
    double eps
    int nb
    double *bumps


cdef inline double _smooth(double t) noexcept nogil:
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


cdef inline double _smooth_p(double t) noexcept nogil:
    return 30.0 * t * t * (1.0 - t) * (1.0 - t)


cdef inline double feval(FParams *p, double x) noexcept nogil:
    cdef double out, t, m, w, a, rise
    cdef int k
    if p.code == 0:
        out = p.value
    elif p.code == 1:
        out = x
    elif p.code == 2:
        out = exp(x)
    else:
        out = exp(x / (1.0 + p.eps * x))
    for k in range(p.nb):
        m = p.bumps[4 * k]
        w = p.bumps[4 * k + 1]
        a = p.bumps[4 * k + 2]
        rise = p.bumps[4 * k + 3]
        t = (x - m) / w
        if t > 0.0 and t < 1.0:
            if t <= rise:
                out += a * _smooth(t / rise)
            else:
                out += a * (1.0 - _smooth((t - rise) / (1.0 - rise)))
    return out


cdef inline double fderiv(FParams *p, double x) noexcept nogil:
    cdef double out, t, m, w, a, rise, q
    cdef int k
    if p.code == 0:
        out = 0.0
    elif p.code == 1:
        out = 1.0
    elif p.code == 2:
        out = exp(x)
    else:
        q = 1.0 + p.eps * x
        out = exp(x / q) / (q * q)
    for k in range(p.nb):
        m = p.bumps[4 * k]
        w = p.bumps[4 * k + 1]
        a = p.bumps[4 * k + 2]
        rise = p.bumps[4 * k + 3]
        t = (x - m) / w
        if t > 0.0 and t < 1.0:
            if t <= rise:
                out += a / w * _smooth_p(t / rise) / rise
            else:
                out -= a / w * _smooth_p((t - rise) / (1.0 - rise)) / (1.0 - rise)
    return out


cdef FParams _params(int code, double value, double eps, double[:, ::1] bumps):
    cdef FParams p
    p.code = code
    p.value = value
    p.eps = eps
    p.nb = bumps.shape[0]
    p.bumps = &bumps[0, 0] if p.nb > 0 else NULL
    return p


def f_values(int code, double value, double eps, double[:, ::1] bumps, double[::1] x):
    """Evaluate the encoded f on an array; used to check the encoding."""
    cdef FParams p = _params(code, value, eps, bumps)
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = feval(&p, x[i])
    return out


# Dormand-Prince 5(4) tableau
DEF A21 = 1.0 / 5.0
DEF A31 = 3.0 / 40.0
DEF A32 = 9.0 / 40.0
DEF A41 = 44.0 / 45.0
DEF A42 = -56.0 / 15.0
DEF A43 = 32.0 / 9.0
DEF A51 = 19372.0 / 6561.0
DEF A52 = -25360.0 / 2187.0
DEF A53 = 64448.0 / 6561.0
DEF A54 = -212.0 / 729.0
DEF A61 = 9017.0 / 3168.0
DEF A62 = -355.0 / 33.0
DEF A63 = 46732.0 / 5247.0
DEF A64 = 49.0 / 176.0
DEF A65 = -5103.0 / 18656.0
DEF B1 = 35.0 / 384.0
DEF B3 = 500.0 / 1113.0
DEF B4 = 125.0 / 192.0
DEF B5 = -2187.0 / 6784.0
DEF B6 = 11.0 / 84.0
DEF E1 = 71.0 / 57600.0
DEF E3 = -71.0 / 16695.0
DEF E4 = 71.0 / 1920.0
DEF E5 = -17253.0 / 339200.0
DEF E6 = 22.0 / 525.0
DEF E7 = -1.0 / 40.0
DEF C2 = 1.0 / 5.0
DEF C3 = 3.0 / 10.0
DEF C4 = 4.0 / 5.0
DEF C5 = 8.0 / 9.0


cdef inline void rhs(FParams *p, double dm1, double s, double w, double v,
                     double *dw, double *dv) noexcept nogil:
    dw[0] = v
    if dm1 != 0.0:
        dv[0] = -feval(p, w) - dm1 / s * v
    else:
        dv[0] = -feval(p, w)


cdef inline double dp_step(FParams *p, double dm1, double s, double w, double v, double h,
                           double *wn, double *vn, double *err_w, double *err_v) noexcept nogil:
    """One Dormand-Prince step; returns nothing useful, outputs via pointers."""
    cdef double k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v, k5w, k5v, k6w, k6v, k7w, k7v
    rhs(p, dm1, s, w, v, &k1w, &k1v)
    rhs(p, dm1, s + C2 * h, w + h * A21 * k1w, v + h * A21 * k1v, &k2w, &k2v)
    rhs(p, dm1, s + C3 * h, w + h * (A31 * k1w + A32 * k2w),
        v + h * (A31 * k1v + A32 * k2v), &k3w, &k3v)
    rhs(p, dm1, s + C4 * h, w + h * (A41 * k1w + A42 * k2w + A43 * k3w),
        v + h * (A41 * k1v + A42 * k2v + A43 * k3v), &k4w, &k4v)
    rhs(p, dm1, s + C5 * h, w + h * (A51 * k1w + A52 * k2w + A53 * k3w + A54 * k4w),
        v + h * (A51 * k1v + A52 * k2v + A53 * k3v + A54 * k4v), &k5w, &k5v)
    rhs(p, dm1, s + h, w + h * (A61 * k1w + A62 * k2w + A63 * k3w + A64 * k4w + A65 * k5w),
        v + h * (A61 * k1v + A62 * k2v + A63 * k3v + A64 * k4v + A65 * k5v), &k6w, &k6v)
    wn[0] = w + h * (B1 * k1w + B3 * k3w + B4 * k4w + B5 * k5w + B6 * k6w)
    vn[0] = v + h * (B1 * k1v + B3 * k3v + B4 * k4v + B5 * k5v + B6 * k6v)
    rhs(p, dm1, s + h, wn[0], vn[0], &k7w, &k7v)
    err_w[0] = h * (E1 * k1w + E3 * k3w + E4 * k4w + E5 * k5w + E6 * k6w + E7 * k7w)
    err_v[0] = h * (E1 * k1v + E3 * k3v + E4 * k4v + E5 * k5v + E6 * k6v + E7 * k7v)
    return 0.0


def shoot(int code, double value, double eps, double[:, ::1] bumps, int d, double alpha,
          double rtol=1e-11, double atol=1e-14, double s_max=1e4, long max_steps=2000000,
          bint store=False):
    """Integrate w'' + (d-1)/s w' + f(w) = 0, w(0) = alpha, w'(0) = 0 to the
    first zero of w.

    Returns (s_zero, n_steps, status, s_nodes, w_nodes); status 0 ok,
    1 no zero before s_max, 2 step budget exhausted or step underflow.
    """
    cdef FParams p = _params(code, value, eps, bumps)
    cdef double dm1 = d - 1.0
    cdef double fa = feval(&p, alpha)
    cdef double s0, s, w, v, h, wn, vn, ew, ev, sw, sv, err, fac, hz, lo, hi, wz, vz, dz1, dz2
    cdef long steps = 0
    cdef int status = 0, it
    cdef list s_out = [], w_out = []
    if not (fa > 0.0):
        return (float("nan"), 0, 3, None, None)
    s0 = 1e-4 * sqrt(2.0 * d * fmax(alpha, 1e-300) / fa)
    s = s0
    w = alpha - fa * s0 * s0 / (2.0 * d)
    v = -fa * s0 / d
    h = s0
    if store:
        s_out.append(0.0)
        w_out.append(alpha)
        s_out.append(s)
        w_out.append(w)
    while True:
        if steps >= max_steps:
            status = 2
            break
        if s > s_max:
            status = 1
            break
        if h < 1e-15 * s:
            status = 2
            break
        dp_step(&p, dm1, s, w, v, h, &wn, &vn, &ew, &ev)
        sw = atol + rtol * fmax(fabs(w), fabs(wn))
        sv = atol + rtol * fmax(fabs(v), fabs(vn))
        err = sqrt(0.5 * ((ew / sw) * (ew / sw) + (ev / sv) * (ev / sv)))
        steps += 1
        if not isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            if wn <= 0.0:
                # first zero inside (s, s + h]: safeguarded Newton on the step size
                lo = 0.0
                hi = h
                hz = h * w / (w - wn)
                for it in range(60):
                    if hz <= lo or hz >= hi:
                        hz = 0.5 * (lo + hi)
                    dp_step(&p, dm1, s, w, v, hz, &wz, &vz, &dz1, &dz2)
                    if wz > 0.0:
                        lo = hz
                    else:
                        hi = hz
                    if fabs(wz) <= 1e-15 * fmax(alpha, 1.0) or hi - lo <= 4e-16 * (s + hi):
                        break
                    if vz < 0.0:
                        hz = hz - wz / vz
                    else:
                        hz = 0.5 * (lo + hi)
                s = s + hz
                if store:
                    s_out.append(s)
                    w_out.append(0.0)
                break
            s += h
            w = wn
            v = vn
            if store:
                s_out.append(s)
                w_out.append(w)
            fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
            h *= fmin(5.0, fmax(0.2, fac))
        else:
            fac = 0.9 * err ** -0.2
            h *= fmax(0.1, fac)
    if store:
        return (s, steps, status, np.asarray(s_out), np.asarray(w_out))
    return (s, steps, status, None, None)


cdef void thomas_factor(double[::1] sub, double[::1] diag, double[::1] sup,
                        double[::1] cp, double[::1] den) noexcept nogil:
    cdef Py_ssize_t i, n = diag.shape[0]
    den[0] = diag[0]
    cp[0] = sup[0] / den[0] if n > 1 else 0.0
    for i in range(1, n):
        den[i] = diag[i] - sub[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = sup[i] / den[i]


cdef void thomas_solve(double[::1] sub, double[::1] cp, double[::1] den,
                       double[::1] rhs, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = den.shape[0]
    out[0] = rhs[0] / den[0]
    for i in range(1, n):
        out[i] = (rhs[i] - sub[i - 1] * out[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


def monotone_iterate(double[::1] sub, double[::1] diag, double[::1] sup,
                     int code, double value, double eps, double[:, ::1] bumps,
                     double lam, double omega, double[::1] u0,
                     double tol=1e-10, long max_iter=1000000, double blow_cap=1e6):
    """Iterate (A + ωI) u_{k+1} = λ f(u_k) + ω u_k from u0.

    ``sub``/``diag``/``sup`` describe A + ωI. Returns
    (u, iterations, status, min_increment) with status 0 converged,
    1 diverged (sup-norm above blow_cap), 2 iteration budget exhausted.
    """
    cdef FParams p = _params(code, value, eps, bumps)
    cdef Py_ssize_t i, n = diag.shape[0]
    cp_a = np.empty(n)
    den_a = np.empty(n)
    rhs_a = np.empty(n)
    u_a = np.array(u0, dtype=float, copy=True)
    un_a = np.empty(n)
    cdef double[::1] cp = cp_a, den = den_a, r = rhs_a, u = u_a, un = un_a
    cdef double inc, incmin = 0.0, dmax, dmin, sup_norm, fv
    cdef long k
    cdef int status = 2
    thomas_factor(sub, diag, sup, cp, den)
    with nogil:
        for k in range(max_iter):
            for i in range(n):
                r[i] = lam * feval(&p, u[i]) + omega * u[i]
            thomas_solve(sub, cp, den, r, un)
            dmax = 0.0
            dmin = 0.0
            sup_norm = 0.0
            for i in range(n):
                inc = un[i] - u[i]
                if inc > dmax:
                    dmax = inc
                if inc < dmin:
                    dmin = inc
                if fabs(un[i]) > sup_norm:
                    sup_norm = fabs(un[i])
                u[i] = un[i]
            if dmin < incmin:
                incmin = dmin
            if not isfinite(sup_norm) or sup_norm > blow_cap:
                status = 1
                break
            if fmax(dmax, -dmin) < tol:
                status = 0
                break
    return (u_a, k + 1, status, incmin)


def imex_evolve(double[::1] sub, double[::1] diag, double[::1] sup,
                int code, double value, double eps, double[:, ::1] bumps,
                double lam, double[::1] u0, double t_max, double dt_max, double dt_min,
                bint adaptive, double steady_tol, double blow_cap, double[::1] out_times):
    """IMEX Euler: (I + dt A) u_{n+1} = u_n + dt λ f(u_n).

    ``sub``/``diag``/``sup`` describe A. Returns (status, t, u, rate,
    samples, history) where status 0 converged, 1 blow-up, 2 horizon
    reached, 3 step underflow; ``samples`` holds u at each requested output
    time and ``history`` rows are (t, sup-norm).
    """
    cdef FParams p = _params(code, value, eps, bumps)
    cdef Py_ssize_t i, n = diag.shape[0], n_out = out_times.shape[0], j = 0
    u_a = np.array(u0, dtype=float, copy=True)
    un_a = np.empty(n)
    r_a = np.empty(n)
    d_a = np.empty(n)
    lo_a = np.empty(max(n - 1, 1))
    up_a = np.empty(max(n - 1, 1))
    cp_a = np.empty(n)
    den_a = np.empty(n)
    samples = np.zeros((n_out, n))
    cdef double[::1] u = u_a, un = un_a, r = r_a, dd = d_a, lo = lo_a, up = up_a
    cdef double[::1] cp = cp_a, den = den_a
    cdef double[:, ::1] smp = samples
    cdef double t = 0.0, dt, rate = 0.0, sup_norm, fmaxd, fv, step_to, umax, reaction
    cdef int status = 2
    cdef list hist = []
    cdef long nstep = 0
    while True:
        umax = 0.0
        fmaxd = 0.0
        reaction = 0.0
        for i in range(n):
            if u[i] > umax:
                umax = u[i]
            fv = fabs(fderiv(&p, u[i]))
            if fv > fmaxd:
                fmaxd = fv
            fv = fabs(lam * feval(&p, u[i]))
            if fv > reaction:
                reaction = fv
        if not isfinite(umax) or umax > blow_cap or not isfinite(reaction) or reaction > blow_cap:
            status = 1
            break
        if t >= t_max:
            status = 2
            break
        dt = dt_max
        if adaptive and lam * fmaxd > 0.0:
            dt = fmin(dt_max, 0.2 / (lam * fmaxd))
        if j < n_out and out_times[j] - t < dt:
            dt = out_times[j] - t
        if t + dt > t_max:
            dt = t_max - t
        if dt < dt_min and not (j < n_out and out_times[j] - t < dt_min):
            status = 3
            break
        for i in range(n):
            dd[i] = 1.0 + dt * diag[i]
            r[i] = u[i] + dt * lam * feval(&p, u[i])
        for i in range(n - 1):
            lo[i] = dt * sub[i]
            up[i] = dt * sup[i]
        thomas_factor(lo, dd, up, cp, den)
        thomas_solve(lo, cp, den, r, un)
        rate = 0.0
        sup_norm = 0.0
        for i in range(n):
            # A u_{n+1} - λ f(u_{n+1}) evaluated from the update
            fv = fabs((un[i] - r[i]) / dt + lam * feval(&p, un[i])) if dt > 0.0 else 0.0
            if fv > rate:
                rate = fv
            u[i] = un[i]
            if fabs(u[i]) > sup_norm:
                sup_norm = fabs(u[i])
        t += dt
        nstep += 1
        while j < n_out and out_times[j] <= t + 1e-14 * fmax(1.0, t):
            for i in range(n):
                smp[j, i] = u[i]
            j += 1
        if nstep % 16 == 0:
            hist.append((t, sup_norm))
        if rate < steady_tol and dt > 0.0:
            status = 0
            break
    hist.append((t, float(np.max(np.abs(u_a))) if n else 0.0))
    return (status, t, u_a, rate, samples[:j], np.asarray(hist))
