"""Discrete fold and multiple-point detectors, minimal-branch jumps,
classification of a diagram into the three perturbation cases, the
non-equivalence comparator and the perturbation pipeline.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .continuation import (Branch, ExtremalReport, FoldPoint, FoldRejected, extremal_lambda,
                           refine_fold, trace_branch)
from .nonlinearity import InfeasibleAmplitudeError, build_perturbation, monotone_amplitude_cap

log = logging.getLogger(__name__)

JUMP_TOL = 1e-3
MULTIPLE_TOL = 1e-6
SPHERE_FACTORS = (2.0, 4.0, 8.0)


# ---------------------------------------------------------------- folds
def _l1(a0, l0, a, lam):
    return np.abs(np.asarray(lam) - l0) + np.abs(np.asarray(a) - a0)


def sphere_count(alpha, lam, center, radius):
    """Crossings of the polyline with the L1 sphere of given radius."""
    a0, l0 = center
    dist = _l1(a0, l0, alpha, lam) - radius
    s = np.sign(dist)
    s[s == 0] = 1
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _strict_window(lam, i, kind):
    lo, hi = max(0, i - 2), min(lam.size, i + 3)
    others = np.concatenate([lam[lo:i], lam[i + 1:hi]])
    if kind == "max":
        return bool(np.all(others < lam[i]))
    return bool(np.all(others > lam[i]))


def fold_candidates(branch):
    """Indices of strict discrete λ-extrema and plateau (degenerate) ones."""
    lam = branch.lam
    d = np.diff(lam)
    cands, degenerate = [], []
    for i in range(1, lam.size - 1):
        left, right = d[i - 1], d[i]
        if left > 0 and right < 0:
            kind = "max"
        elif left < 0 and right > 0:
            kind = "min"
        elif (left == 0 or right == 0) and (left != 0 or right != 0):
            degenerate.append(i)
            continue
        else:
            continue
        if _strict_window(lam, i, kind):
            cands.append((i, kind))
        else:
            degenerate.append(i)
    return cands, degenerate


def check_sphere(branch, fold, index):
    """Discrete (F3): two sphere crossings at radii 2, 4, 8 × local step."""
    ascending = branch.alpha[-1] >= branch.alpha[0]
    pos = index + ((branch.alpha[index] < fold.alpha) == ascending)
    a = np.insert(branch.alpha, pos, fold.alpha)
    lam = np.insert(branch.lam, pos, fold.lam)
    i = index
    step = max(abs(branch.alpha[i + 1] - branch.alpha[i - 1]) + abs(branch.lam[i + 1] - branch.lam[i - 1]),
               1e-300) / 2.0
    return all(sphere_count(a, lam, (fold.alpha, fold.lam), k * step) == 2
               for k in SPHERE_FACTORS)


def detect_folds(branch: Branch, return_rejected=False):
    """Refined fold points of a traced branch, ordered along the branch."""
    folds, rejected = [], []
    if len(branch) < 3:
        return (folds, rejected) if return_rejected else folds
    cands, degenerate = fold_candidates(branch)
    for i in degenerate:
        rejected.append((i, "degenerate plateau"))
    for i, kind in cands:
        try:
            fp = refine_fold(branch, i)
        except FoldRejected as exc:
            rejected.append((i, str(exc)))
            continue
        if not check_sphere(branch, fp, i):
            rejected.append((i, "sphere cardinality differs from two"))
            continue
        folds.append(fp)
    if rejected:
        log.info("rejected fold candidates: %s", rejected)
    return (folds, rejected) if return_rejected else folds


def has_fold_pair(branch: Branch, gap_factor=10.0):
    """True when the branch has a max/min fold pair with a resolvable gap."""
    folds = detect_folds(branch)
    if len(folds) < 2:
        return False
    for f1, f2 in zip(folds[:-1], folds[1:]):
        if f1.kind != f2.kind and abs(f1.lam - f2.lam) > gap_factor * branch.fold_tol:
            return True
    return False


# ---------------------------------------------------------- multiple points
@dataclass
class MultiplePoint:
    lam: float
    alpha: float
    branch_count: int
    segments: list
    ambiguous: bool = False

    def to_dict(self):
        return {"lambda": self.lam, "alpha": self.alpha, "branch_count": self.branch_count,
                "segments": [list(s) for s in self.segments], "ambiguous": self.ambiguous}


def _segment_distance(p0, p1, q0, q1):
    """Minimum distance between 2D segments and the closest point on the first."""
    best = (math.inf, p0)
    for a, b, pts, on_first in ((p0, p1, (q0, q1), True), (q0, q1, (p0, p1), False)):
        ab = b - a
        den = float(ab @ ab)
        for p in pts:
            t = 0.0 if den == 0 else min(1.0, max(0.0, float((p - a) @ ab) / den))
            c = a + t * ab
            dist = float(np.hypot(*(p - c)))
            if dist < best[0]:
                best = (dist, c if on_first else p)
    # proper intersection
    d1, d2 = p1 - p0, q1 - q0
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den != 0.0:
        t = ((q0[0] - p0[0]) * d2[1] - (q0[1] - p0[1]) * d2[0]) / den
        s = ((q0[0] - p0[0]) * d1[1] - (q0[1] - p0[1]) * d1[0]) / den
        if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
            return 0.0, p0 + t * d1
    return best


def detect_multiple_points(branches, tol=MULTIPLE_TOL, profile_tol=None):
    """Points where at least three distinct local pieces of the diagram meet.

    Pieces are maximal runs of one branch; two meetings of the same branch
    count as distinct pieces only when far apart along it. When every
    member of a cluster carries a profile, members whose profiles differ by
    more than ``profile_tol`` in sup-norm are separated first.
    """
    profile_tol = tol if profile_tol is None else profile_tol
    segs = []
    for b_id, br in enumerate(branches):
        pts = np.column_stack([br.lam, br.alpha])
        for i in range(len(pts) - 1):
            segs.append((b_id, i, pts[i], pts[i + 1]))
    if len(segs) < 3:
        return []
    mids = np.array([0.5 * (s[2] + s[3]) for s in segs])
    half = max(0.5 * float(np.hypot(*(s[3] - s[2]))) for s in segs)
    tree = cKDTree(mids)
    meetings = []
    for i, j in tree.query_pairs(2.0 * half + tol):
        bi, ii, p0, p1 = segs[i]
        bj, jj, q0, q1 = segs[j]
        if bi == bj and abs(ii - jj) <= 2:
            continue
        dist, point = _segment_distance(p0, p1, q0, q1)
        if dist <= tol:
            meetings.append((point, (bi, ii), (bj, jj)))
    if not meetings:
        return []
    pts = np.array([m[0] for m in meetings])
    groups = _cluster(pts, tol)
    out = []
    for members in groups:
        pieces = set()
        for k in members:
            pieces.update([meetings[k][1], meetings[k][2]])
        pieces = _merge_pieces(pieces)
        center = pts[members].mean(axis=0)
        ambiguous = False
        prof = [_profile_at(branches, p) for p in pieces]
        if all(p is not None for p in prof):
            ref = prof[0]
            pieces = [pc for pc, p in zip(pieces, prof) if _sup_distance(ref, p) <= profile_tol]
        else:
            ambiguous = True
        if len(pieces) < 3:
            continue
        arcs, consistent = _arc_count(branches, center, pieces)
        if arcs < 3:
            continue
        ambiguous = ambiguous or not consistent
        out.append(MultiplePoint(float(center[0]), float(center[1]), arcs,
                                 sorted(pieces), ambiguous))
    return out


def _cluster(pts, tol):
    tree = cKDTree(pts)
    parent = list(range(len(pts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in tree.query_pairs(tol):
        parent[find(i)] = find(j)
    groups = {}
    for i in range(len(pts)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _merge_pieces(pieces):
    """Collapse segment ids of one branch that lie within two segments of each other."""
    merged = []
    for b, i in sorted(pieces):
        if merged and merged[-1][0] == b and i - merged[-1][2] <= 2:
            merged[-1] = (b, merged[-1][1], i)
        else:
            merged.append((b, i, i))
    return [(b, i) for b, i, _ in merged]


def _profile_at(branches, piece):
    b, i = piece
    prof = branches[b].profiles
    if prof is None:
        return None
    return prof[min(i, len(prof) - 1)]


def _sup_distance(p, q):
    p, q = np.asarray(p), np.asarray(q)
    if p.shape != q.shape:
        return math.inf
    return float(np.max(np.abs(p - q)))


def _arc_count(branches, center, pieces):
    """(G3) proxy: sphere crossings of the member pieces around the point.

    Returns (count, consistent) where consistent means the same count at
    every tested radius.
    """
    step = min(_local_step(branches[b], i) for b, i in pieces)
    counts = []
    for k in SPHERE_FACTORS:
        total = 0
        for b, i in pieces:
            br = branches[b]
            lo, hi = max(0, i - 3), min(len(br), i + 5)
            total += sphere_count(br.alpha[lo:hi], br.lam[lo:hi], (center[1], center[0]), k * step)
        counts.append(total)
    return max(set(counts), key=counts.count), len(set(counts)) == 1


def _local_step(br, i):
    i = min(i, len(br) - 2)
    return max(0.25 * (abs(br.alpha[i + 1] - br.alpha[i]) + abs(br.lam[i + 1] - br.lam[i])), 1e-300)


# ---------------------------------------------------------- minimal branch
def minimal_envelope(branch: Branch, lambdas, folds=None, locate=False):
    """Minimal solutions read off a traced α-branch.

    For each λ the minimal solution is the smallest α with λ(α) = λ along
    the continuum. Refined fold points, when given, are merged into the
    polyline so its local maxima sit at the true fold values. Returns a
    Branch in the λ-parameterisation (``alpha`` holds the minimal
    sup-norms) whose evaluator maps λ to that α by polyline crossing.
    With ``locate`` the stored values are polished by bisection on the
    branch evaluator.
    """
    a, lam = branch.alpha, branch.lam
    if folds:
        a = np.concatenate([a, [f.alpha for f in folds]])
        lam = np.concatenate([lam, [f.lam for f in folds]])
        order = np.argsort(a, kind="stable")
        a, lam = a[order], lam[order]
    ev = branch.evaluator

    def crossing(level, polish=False):
        above = np.nonzero(lam >= level)[0]
        if above.size == 0:
            return math.nan
        k = int(above[0])
        if k == 0:
            return float(a[0])
        lo, hi = a[k - 1], a[k]
        if not polish or ev is None:
            t = (level - lam[k - 1]) / (lam[k] - lam[k - 1])
            return float(lo + t * (hi - lo))
        for _ in range(80):
            if hi - lo <= 1e-10 * max(1.0, hi):
                break
            mid = 0.5 * (lo + hi)
            if ev(mid) < level:
                lo = mid
            else:
                hi = mid
        return float(0.5 * (lo + hi))

    lambdas = np.asarray(lambdas, dtype=float)
    alphas = np.array([crossing(l, locate) for l in lambdas])
    return Branch(alphas, lambdas, "minimal_envelope", {}, "alpha_max", crossing)


def minimal_lambda_grid(branch: Branch, folds=(), n=200, cluster=(1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)):
    """Uniform λ-grid up to the traced maximum plus points clustered
    geometrically on both sides of every max-fold value."""
    top = float(np.nanmax(branch.lam))
    grid = [np.linspace(0.0, top, n + 1)[1:]]
    for f in folds:
        if f.kind == "max":
            off = f.lam * np.asarray(cluster)
            grid.append(f.lam - off)
            grid.append(f.lam + off)
    g = np.unique(np.concatenate(grid))
    return g[(g > 0.0) & (g <= top)]


@dataclass
class MinimalJumps:
    jumps: list
    flags: list = field(default_factory=list)


def detect_minimal_jump(minimal: Branch, jump_tol=JUMP_TOL, subcells=16):
    """Upward discontinuities of λ ↦ α on a minimal branch.

    ``minimal.lam`` is the λ-grid and ``minimal.alpha`` the minimal
    sup-norms. Every cell whose α-gap exceeds ``jump_tol`` gets one
    refinement round of ``subcells`` subcells through ``minimal.evaluator``
    (λ ↦ α). A jump is reported when one subcell carries more than half of
    the gap; a dominant but less concentrated subcell is flagged as
    grid-too-coarse.
    """
    lam, alpha = minimal.lam, minimal.alpha
    ok = np.isfinite(alpha)
    lam, alpha = lam[ok], alpha[ok]
    jumps, flags = [], []
    for i in range(lam.size - 1):
        gap = alpha[i + 1] - alpha[i]
        if gap <= jump_tol:
            continue
        if minimal.evaluator is None:
            flags.append(("unrefined", float(lam[i]), float(lam[i + 1])))
            continue
        sub_l = np.linspace(lam[i], lam[i + 1], subcells + 1)
        sub_a = np.array([alpha[i]] + [minimal.evaluator(x) for x in sub_l[1:-1]] + [alpha[i + 1]])
        gaps = np.diff(sub_a)
        k = int(np.argmax(gaps))
        if gaps[k] <= jump_tol:
            continue
        if gaps[k] >= 0.5 * gap:
            jumps.append((float(0.5 * (sub_l[k] + sub_l[k + 1])), float(sub_a[k]), float(sub_a[k + 1])))
        elif gaps[k] >= 0.25 * gap:
            flags.append(("grid-too-coarse", float(lam[i]), float(lam[i + 1])))
    return MinimalJumps(jumps, flags)


# ------------------------------------------------------------ classification
@dataclass
class DiagramReport:
    folds: list
    multiple_points: list = field(default_factory=list)
    continua_count: int = 1
    minimal_jumps: list = field(default_factory=list)
    case: str = "unclassified"
    lambda_m: Optional[float] = None
    lambda_sharp: Optional[float] = None
    lambda_star: Optional[float] = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        ls = self.lambda_star
        return {
            "folds": [f.to_dict() for f in self.folds],
            "multiple_points": [m.to_dict() for m in self.multiple_points],
            "continua_count": self.continua_count,
            "minimal_jumps": [list(j) for j in self.minimal_jumps],
            "case": self.case,
            "lambda_m": self.lambda_m,
            "lambda_sharp": self.lambda_sharp,
            "lambda_star": "inf" if ls is not None and math.isinf(ls) else ls,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data):
        folds = [FoldPoint(f["lambda"], f["alpha"], f["kind"], 0.0) for f in data.get("folds", [])]
        mps = [MultiplePoint(m["lambda"], m["alpha"], m["branch_count"],
                             [tuple(s) for s in m.get("segments", [])], m.get("ambiguous", False))
               for m in data.get("multiple_points", [])]
        ls = data.get("lambda_star")
        ls = math.inf if ls == "inf" else ls
        return cls(folds, mps, int(data.get("continua_count", 1)),
                   [tuple(j) for j in data.get("minimal_jumps", [])], data.get("case", "unclassified"),
                   data.get("lambda_m"), data.get("lambda_sharp"), ls, list(data.get("notes", [])))


def _first_segment_alpha(branch, folds, level):
    """α where the initial increasing segment reaches λ = level."""
    end = folds[0].alpha if folds else branch.alpha[-1]
    sel = branch.alpha <= end
    a, lam = branch.alpha[sel], branch.lam[sel]
    k = np.nonzero(lam >= level)[0]
    if k.size == 0:
        return math.nan
    k = int(k[0])
    if k == 0:
        return float(a[0])
    t = (level - lam[k - 1]) / (lam[k] - lam[k - 1])
    return float(a[k - 1] + t * (a[k] - a[k - 1]))


def _gamma_minus_is_minimal(branch, folds, level, tol=1e-9):
    """Branch ∩ {λ < level, α < α_min(level)} lies on the initial segment."""
    a_min = _first_segment_alpha(branch, folds, level)
    if not math.isfinite(a_min):
        return False
    beyond = branch.alpha > folds[0].alpha
    bad = beyond & (branch.lam < level - tol) & (branch.alpha < a_min - tol)
    return not bool(np.any(bad))


def _oscillatory_limit(folds, branch):
    """λ♯ estimate when fold λ-values alternate with shrinking amplitude."""
    if len(folds) < 3:
        return None
    lams = np.array([f.lam for f in folds])
    kinds = [f.kind for f in folds]
    if any(k1 == k2 for k1, k2 in zip(kinds[:-1], kinds[1:])):
        return None
    amp = np.abs(np.diff(lams))
    if not np.all(np.diff(amp) < 0):
        return None
    # consecutive extrema straddle the limit; average the last pair
    est = 0.5 * (lams[-1] + lams[-2])
    tail = branch.lam[branch.alpha > folds[-1].alpha]
    if tail.size and abs(tail[-1] - est) > amp[-1]:
        return None
    return float(est)


def classify_case(report: DiagramReport, extremal: ExtremalReport, branch: Branch):
    """Assign case (i), (ii), (iii) or "unclassified"; fills λ_m / λ♯."""
    folds = report.folds
    if report.continua_count != 1:
        report.case = "unclassified"
        return report.case
    if not folds:
        inc = bool(np.all(np.diff(branch.lam) > 0))
        report.case = "iii" if inc else "unclassified"
        return report.case
    lam_star = extremal.lambda_star
    sharp = _oscillatory_limit(folds, branch)
    if sharp is not None and 0.0 < sharp < lam_star and _gamma_minus_is_minimal(branch, folds, sharp):
        report.case = "ii"
        report.lambda_sharp = sharp
        report.lambda_m = min(f.lam for f in folds)
        return report.case
    lam_m = min(f.lam for f in folds)
    if 0.0 < lam_m < lam_star and _gamma_minus_is_minimal(branch, folds, lam_m):
        report.case = "i"
        report.lambda_m = lam_m
        return report.case
    report.case = "unclassified"
    return report.case


def build_report(problem, branch, minimal_lambdas=None, extremal=None, multiple=True):
    folds = detect_folds(branch)
    extremal = extremal or extremal_lambda(problem, branch)
    mps = detect_multiple_points([branch]) if multiple else []
    report = DiagramReport(folds, mps, 1, lambda_star=extremal.lambda_star)
    if minimal_lambdas is None:
        minimal_lambdas = minimal_lambda_grid(branch, folds)
    env = minimal_envelope(branch, minimal_lambdas, folds)
    mj = detect_minimal_jump(env)
    report.minimal_jumps = mj.jumps
    report.notes.extend(f"{k} in [{a:.6g}, {b:.6g}]" for k, a, b in mj.flags)
    classify_case(report, extremal, branch)
    return report


# ---------------------------------------------------------------- comparison
@dataclass(frozen=True)
class Verdict:
    status: str  # "NotEquivalent" | "Inconclusive"
    reason: Optional[str] = None

    def __str__(self):
        return f"{self.status}({self.reason})" if self.reason else self.status

    def to_dict(self):
        return {"verdict": self.status, "reason": self.reason}


def compare_diagrams(a: DiagramReport, b: DiagramReport) -> Verdict:
    """Sufficient criteria for non-equivalence of two diagrams."""
    if a.continua_count != b.continua_count:
        return Verdict("NotEquivalent", "continua_count")
    if len(a.folds) != len(b.folds):
        return Verdict("NotEquivalent", "fold_count")
    if len(a.multiple_points) != len(b.multiple_points):
        return Verdict("NotEquivalent", "multiple_point_count")
    return Verdict("Inconclusive")


# ------------------------------------------------------------------ pipeline
class SearchExhausted(RuntimeError):
    def __init__(self, tried):
        super().__init__(f"no placement produced new structure ({len(tried)} tried)")
        self.tried = tried


@dataclass
class PipelineResult:
    g_hat: object
    before: DiagramReport
    after: DiagramReport
    verdict: Verdict
    placement: Optional[dict]
    tried: list
    locality_error: float
    after_branch: Optional[Branch] = field(default=None, repr=False)
    before_branch: Optional[Branch] = field(default=None, repr=False)

    def to_dict(self):
        return {"before": self.before.to_dict(), "after": self.after.to_dict(),
                "verdict": self.verdict.to_dict(), "placement": self.placement,
                "tried": self.tried, "locality_error": self.locality_error,
                "g_hat": self.g_hat.to_dict()}


def admissible_window(report: DiagramReport, branch: Branch):
    """Upper bound on M + width allowed by the case of the diagram."""
    if report.case == "i":
        return _first_segment_alpha(branch, report.folds, report.lambda_m)
    if report.case == "ii":
        return _first_segment_alpha(branch, report.folds, report.lambda_sharp)
    if report.case == "iii":
        return math.inf
    raise ValueError("the perturbation window needs a classified diagram")


def _new_folds(before_folds, after_folds, case, lambda_m):
    if len(after_folds) <= len(before_folds):
        return False
    if case == "i":
        return any(f.lam < lambda_m for f in after_folds)
    return True


def instability_pipeline(g, problem, eps_amp, alpha_max=None, m_grid=None, widths=None,
                         rises=(0.1, 0.2, 0.3, 0.5), amplitude=None, before=None, backend=None):
    """Search bump placements that create structure absent from g's diagram.

    Placements are tried in lexicographic (M, width, rise) order and the
    first success is returned. The amplitude is min(eps_amp, monotone cap)
    unless forced through ``amplitude``. Raises SearchExhausted with the
    list of tried placements when nothing is found.
    """
    if not eps_amp > 0.0:
        raise ValueError("eps_amp must be positive")
    pb = problem.with_f(g)
    if alpha_max is None:
        alpha_max = 100.0 if problem.d == 1 else 40.0
    if before is None:
        br0 = trace_branch(pb, alpha_max, backend=backend)
        before = build_report(pb, br0)
    else:
        before, br0 = before
    limit = admissible_window(before, br0)
    widths = [eps_amp, 0.5 * eps_amp] if widths is None else list(widths)
    if m_grid is None:
        top = min(limit, 0.5 * alpha_max)
        m_grid = [m for m in (1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 0.5, 0.25) if m < top]
    tried = []
    for m in m_grid:
        for w in widths:
            if not m + w < limit:
                continue
            for rise in rises:
                if amplitude is None:
                    cap = monotone_amplitude_cap(g, m, w, 1.0, rise)
                    amp = min(eps_amp, cap)
                else:
                    amp = float(amplitude)
                entry = {"M": m, "width": w, "rise": rise, "amplitude": amp}
                try:
                    g_hat = build_perturbation(g, m, w, amp, monotone=True, rise=rise)
                except InfeasibleAmplitudeError as exc:
                    entry["status"] = f"infeasible: {exc}"
                    tried.append(entry)
                    continue
                pb_hat = problem.with_f(g_hat)
                br1 = trace_branch(pb_hat, alpha_max, backend=backend)
                found = amp != 0.0 and _new_folds(before.folds, detect_folds(br1), before.case,
                                                  before.lambda_m)
                entry["status"] = "success" if found else "no new structure"
                tried.append(entry)
                if found or amp == 0.0:
                    after = build_report(pb_hat, br1)
                    loc = locality_error(br0, br1, m)
                    verdict = compare_diagrams(before, after)
                    return PipelineResult(g_hat, before, after, verdict, entry if found else None,
                                          tried, loc, br1, br0)
    raise SearchExhausted(tried)


def locality_error(before: Branch, after: Branch, m):
    """Largest relative λ difference over the before-samples with α ≤ M."""
    sel = (before.alpha > 0.0) & (before.alpha <= m)
    if not np.any(sel) or after.evaluator is None:
        return 0.0
    lam_after = np.array([after.evaluator(a) for a in before.alpha[sel]])
    return float(np.max(np.abs(lam_after - before.lam[sel]) / np.abs(before.lam[sel])))
