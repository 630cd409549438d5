"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run alone with ``pytest -s tests/test_acceptance.py`` or
``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from semibif import (Box, DiscreteMap, Nonlinearity, ProblemSpec, brouwer_degree, build_report,
                     compare_diagrams, detect_folds, homotopy_sweep, instability_pipeline,
                     minimal_branch, parabolic_evolve, product_check, radial_shoot, solve_minimal,
                     time_map_lambda, trace_branch)
from semibif.continuation import critical_eps_search
from semibif.degree import excision_check, fd_extremal_lambda
from semibif.solvers.fd import radial_grid
from semibif.solvers.poisson import poisson_fd, poisson_profile

GELFAND = Nonlinearity.exponential()
BRATU_STAR = 3.513830719  # classical value of the 1D Gelfand extremal parameter on (0, 1)
SUMMARY = []  # verdict lines, echoed in the terminal summary by conftest


class Criterion:
    """Collects sub-checks, prints a single verdict line, then asserts."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.checks = []
        self.t0 = time.perf_counter()

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self.check("runtime", elapsed < self.budget, f"{elapsed:.2f}s < {self.budget}s")
        failed = [c for c in self.checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        details = "; ".join(f"{n}: {d}" for n, ok, d in self.checks if d)
        line = f"[criterion {self.number:2d}] {status} {self.title} ({elapsed:.2f}s) {details}"
        SUMMARY.append(line)
        print("\n" + line)
        assert not failed, "failed: " + ", ".join(f"{n} ({d})" for n, _, d in failed)


def test_criterion_01_time_map_oracles():
    c = Criterion(1, "time-map oracles", 1.0)
    alphas = np.geomspace(1e-3, 1e3, 50)
    lam = np.array([time_map_lambda(Nonlinearity.constant(), 1.0, a) for a in alphas])
    err = np.max(np.abs(lam / (8.0 * alphas) - 1.0))
    c.check("f=1", err < 1e-8, f"max rel err {err:.1e}")
    lam = np.array([time_map_lambda(Nonlinearity.linear(), 1.0, a) for a in alphas])
    err = np.max(np.abs(lam / math.pi**2 - 1.0))
    c.check("f=u", err < 1e-8, f"max rel err {err:.1e}")
    c.finish()


def test_criterion_02_bratu_extremal():
    c = Criterion(2, "Bratu extremal value", 5.0)
    opts = {"bounds": (0.5, 2.5), "method": "bounded", "options": {"xatol": 1e-10}}
    tm = minimize_scalar(lambda a: -time_map_lambda(GELFAND, 1.0, a), **opts)
    sh = minimize_scalar(lambda a: -radial_shoot(GELFAND, 1, 0.5, a).lam, **opts)
    lam_tm, lam_sh = -tm.fun, -sh.fun
    c.check("time map", abs(lam_tm - BRATU_STAR) < 1e-5, f"{lam_tm:.10f}")
    c.check("shooting agrees", abs(lam_sh - lam_tm) < 1e-6, f"diff {abs(lam_sh - lam_tm):.1e}")
    c.finish()


def test_criterion_03_arrhenius_regimes():
    c = Criterion(3, "Arrhenius regimes, d=1", 60.0)
    br = trace_branch(ProblemSpec(1, 2.0, Nonlinearity.arrhenius(0.30)), 100.0)
    n3 = len(detect_folds(br))
    mono = bool(np.all(np.diff(br.lam) > 0))
    c.check("eps=0.30", n3 == 0 and mono, f"{n3} folds, strictly increasing={mono}")
    br = trace_branch(ProblemSpec(1, 2.0, Nonlinearity.arrhenius(0.20)), 100.0)
    n2 = len(detect_folds(br))
    c.check("eps=0.20", n2 == 2, f"{n2} folds")
    (lo, hi), _ = critical_eps_search(1, 2.0)
    c.check("bracket", 0.229 <= lo and hi <= 0.251 and hi - lo <= 1e-3, f"({lo:.6f}, {hi:.6f})")
    c.finish()


def test_criterion_04_ball_critical_eps():
    c = Criterion(4, "critical eps on the unit ball, d=3", 120.0)
    (lo, hi), _ = critical_eps_search(3, 1.0)
    est = 0.5 * (lo + hi)
    c.check("estimate", 0.238 - 0.005 <= est <= 0.2396 + 0.005, f"{est:.6f} from ({lo:.6f}, {hi:.6f})")
    c.finish()


def test_criterion_05_gelfand_ball_limit():
    c = Criterion(5, "Gelfand d=3 oscillation", 30.0)
    br = trace_branch(ProblemSpec(3, 1.0, GELFAND), 40.0)
    lam30 = br.evaluator(30.0)
    c.check("lambda(30)", abs(lam30 - 2.0) < 0.2, f"{lam30:.6f}")
    folds = detect_folds(br)
    side = [f.lam > 2.0 for f in folds]
    alternate = all(a != b for a, b in zip(side[:-1], side[1:]))
    c.check("folds", len(folds) >= 3 and alternate, f"{len(folds)} folds, alternating={alternate}")
    c.finish()


def test_criterion_06_poisson_kernels():
    c = Criterion(6, "Poisson kernels", 5.0)
    for d in (1, 2, 3):
        r, u = poisson_fd(d, 1.0, 0.1, n=10000)
        err = np.max(np.abs(u - poisson_profile(d, 1.0, 0.1)(r)))
        c.check(f"fd d={d}", err < 1e-6, f"{err:.1e}")
    rho = 1e-6
    ratio1 = poisson_profile(1, 1.0, rho).K / (1.0 / rho)
    c.check("ratio d=1", abs(ratio1 - 1.0) < 0.05, f"{ratio1:.5f}")
    ratio2 = poisson_profile(2, 1.0, rho).K / (abs(math.log(rho)) / 2.0)
    c.check("ratio d=2", abs(ratio2 - 1.0) < 0.05, f"{ratio2:.5f}")
    k3 = poisson_profile(3, 1.0, rho).K
    c.check("K d=3", abs(k3 - 1.0 / 6.0) < 1e-4, f"{k3:.8f}")
    c.finish()


def test_criterion_07_minimal_branch():
    c = Criterion(7, "minimal branch properties", 30.0)
    pb = ProblemSpec(1, 1.0, GELFAND)
    lams = np.linspace(0.07, 3.45, 50)
    res = minimal_branch(pb, lams, keep_profiles=True)
    c.check("all converged", len(res.solutions) == 50, f"{len(res.solutions)}/50")
    inc = min(s.min_increment for s in res.solutions)
    c.check("monotone steps", inc >= 0.0, f"min increment {inc:.1e}")
    drop = max(float(np.max(a.u - b.u)) for a, b in zip(res.solutions[:-1], res.solutions[1:]))
    c.check("ordered in lambda", drop <= 0.0, f"max decrease {max(drop, 0.0):.1e}")
    a_fold = minimize_scalar(lambda a: -time_map_lambda(GELFAND, 1.0, a), bounds=(0.5, 2.5),
                             method="bounded", options={"xatol": 1e-10}).x
    errs = [abs(brentq(lambda a: time_map_lambda(GELFAND, 1.0, a) - s.lam, 1e-12, a_fold,
                       xtol=1e-13) - s.alpha) for s in res.solutions]
    c.check("time map", max(errs) < 1e-4, f"max alpha err {max(errs):.1e}")
    c.finish()


def _pipeline_checks(c, eps, label):
    g = Nonlinearity.arrhenius(eps)
    pb = ProblemSpec(1, 2.0, g)
    res = instability_pipeline(g, pb, 0.3)
    g_hat = res.g_hat
    lo, hi = g_hat.bump.support
    xs = np.linspace(0.0, 50.0, 200001)
    diff = g_hat(xs) - g(xs)
    c.check(f"{label} sup-norm", np.max(np.abs(diff)) <= 0.3, f"{np.max(np.abs(diff)):.4f}")
    outside = (xs < lo) | (xs > hi)
    c.check(f"{label} support", np.all(diff[outside] == 0.0), f"[{lo:g}, {hi:g}]")
    c.check(f"{label} increasing", np.all(np.diff(g_hat(xs)) > 0.0))
    c.check(f"{label} locality", res.locality_error < 1e-8, f"{res.locality_error:.1e}")
    before, after = res.before, res.after
    new = len(after.folds) - len(before.folds)
    c.check(f"{label} new folds", new >= 2, f"{len(before.folds)} -> {len(after.folds)}")
    up = [j for j in after.minimal_jumps if j[2] > j[1]]
    c.check(f"{label} jump", bool(up), f"{len(up)} upward")
    v = compare_diagrams(before, after)
    c.check(f"{label} verdict", str(v) == "NotEquivalent(fold_count)", str(v))
    return res


def test_criterion_08a_instability_case_iii():
    c = Criterion(8, "instability pipeline, arrhenius(0.3)", 120.0)
    _pipeline_checks(c, 0.3, "case iii")
    c.finish()


def test_criterion_08b_instability_case_i():
    c = Criterion(8, "instability pipeline, arrhenius(0.2)", 120.0)
    res = _pipeline_checks(c, 0.2, "case i")
    lam_m = res.before.lambda_m
    low = [f.lam for f in res.after.folds if f.lam < lam_m]
    c.check("folds below lambda_m", len(low) >= 1, f"lambda_m={lam_m:.5f}, below={len(low)}")
    c.finish()


def test_criterion_09_degree_suite():
    c = Criterion(9, "degree suite", 60.0)
    degs = [brouwer_degree(DiscreteMap.identity(n), 0.0, Box.cube(n)).degree for n in range(1, 9)]
    c.check("identity", degs == [1] * 8, str(degs))
    g = DiscreteMap.gelfand_fd(5)
    lam_star = fd_extremal_lambda(g)
    sweep = homotopy_sweep(g, np.linspace(0.0, 0.9 * lam_star, 10), Box.cube(5, 1.0))
    c.check("sweep", sweep.constant and set(sweep.degrees) == {1}, f"lambda*_FD={lam_star:.5f}")
    sq = DiscreteMap.custom(lambda u: u**2 - 1.0, 1, jac=lambda u: np.diag(2.0 * u))
    ident = DiscreteMap.identity(1)
    wide, unit = Box([-2.0], [2.0]), Box.cube(1)
    pairs = [(ident, unit, ident, unit), (sq, wide, ident, unit), (ident, unit, sq, wide),
             (sq, wide, sq, wide), (DiscreteMap.identity(2), Box.cube(2), ident, unit)]
    ok = True
    for fa, ba, fb, bb in pairs:
        dp, da, db = product_check(fa, ba, fb, bb)
        ok &= dp == da * db
    c.check("product", ok, f"{len(pairs)} pairs")
    cases = [(ident, wide, Box([0.5], [1.5])), (sq, wide, Box([-0.5], [0.5])),
             (DiscreteMap.identity(2), Box.cube(2, 2.0), Box([0.5, 0.5], [1.5, 1.5])),
             (sq.product(sq), Box.cube(2, 2.0), Box([-0.5, -0.5], [0.5, 0.5]))]
    ok = True
    for fmap, box, hole in cases:
        full, rest, in_hole = excision_check(fmap, 0.0, box, hole)
        ok &= in_hole == 0 and full == rest
    c.check("excision", ok, f"{len(cases)} cases")
    c.finish()


def test_criterion_10_parabolic():
    c = Criterion(10, "parabolic consistency", 30.0)
    pb = ProblemSpec(1, 1.0, GELFAND)
    ev = parabolic_evolve(pb, 1.0, grid_n=512)
    um = solve_minimal(pb, 1.0, grid_n=512)
    err = float(np.max(np.abs(ev.u - um.u)))
    c.check("steady state", ev.outcome == "converged" and err < 1e-4, f"{ev.outcome}, err {err:.1e}")
    ev4 = parabolic_evolve(pb, 4.0, grid_n=256)
    c.check("blow-up", ev4.outcome == "blowup", f"{ev4.outcome} at t={ev4.time:.3f}")
    rng = np.random.default_rng(7)
    n = 128
    x = radial_grid(pb.radius, n)[0] / pb.radius
    times = np.linspace(0.02, 0.5, 25)
    worst = -np.inf
    for _ in range(10):
        u0 = rng.uniform(0.0, 1.0) * np.cos(0.5 * np.pi * x) * rng.uniform(0.5, 1.0, n)
        v0 = u0 + rng.uniform(0.0, 0.5, n) * np.cos(0.5 * np.pi * x)
        a = parabolic_evolve(pb, 2.0, u0, t_max=0.5, adaptive=False, dt_max=1e-3, out_times=times)
        b = parabolic_evolve(pb, 2.0, v0, t_max=0.5, adaptive=False, dt_max=1e-3, out_times=times)
        m = min(len(a.samples), len(b.samples))
        worst = max(worst, float(np.max(np.asarray(a.samples[:m]) - np.asarray(b.samples[:m]))))
        worst = max(worst, float(np.max(a.u - b.u)))
    c.check("comparison", worst <= 0.0, f"max(u - v) = {worst:.1e}")
    c.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main(["-s", "-q", __file__]))
