import math

import numpy as np
import pytest

from semibif.continuation import (BracketError, Branch, FoldRejected, critical_eps_search,
                                  extremal_lambda, refine_fold, trace_branch, trivial_limit)
from semibif.nonlinearity import DomainError, Nonlinearity
from semibif.solvers import ProblemSpec, time_map_lambda
from semibif.topology import detect_folds

BRATU_STAR = 3.513830719


def test_trace_starts_at_trivial_limit():
    br = trace_branch(ProblemSpec(1, 1.0, Nonlinearity.linear()), 5.0, n_initial=32)
    assert br.alpha[0] == 0.0 and br.lam[0] == pytest.approx(math.pi**2)
    assert np.allclose(br.lam, math.pi**2, rtol=1e-12)
    br = trace_branch(ProblemSpec(1, 1.0, Nonlinearity.exponential()), 5.0, n_initial=32)
    assert br.lam[0] == 0.0
    assert trivial_limit(ProblemSpec(1, 1.0, Nonlinearity.constant())) == 0.0


def test_trace_is_sorted_and_on_time_map():
    f = Nonlinearity.arrhenius(0.2)
    br = trace_branch(ProblemSpec(1, 2.0, f), 30.0, n_initial=64)
    assert np.all(np.diff(br.alpha) > 0)
    for i in (5, 40, len(br) - 1):
        assert br.lam[i] == pytest.approx(time_map_lambda(f, 2.0, br.alpha[i]), rel=1e-14)


def test_trace_rejects_nonpositive_alpha_max():
    with pytest.raises(DomainError):
        trace_branch(ProblemSpec(1, 1.0, Nonlinearity.exponential()), 0.0)


def test_refine_fold_bratu():
    br = trace_branch(ProblemSpec(1, 1.0, Nonlinearity.exponential()), 10.0, n_initial=64)
    i = int(np.argmax(br.lam))
    fp = refine_fold(br, i)
    assert fp.kind == "max"
    assert fp.lam == pytest.approx(BRATU_STAR, abs=1e-8)


def test_refine_fold_rejects_non_extremum():
    br = Branch.from_function(lambda a: a, np.linspace(0.1, 1, 10))
    with pytest.raises(FoldRejected):
        refine_fold(br, 4)
    with pytest.raises(FoldRejected):
        refine_fold(br, 0)


def test_synthetic_cubic_fold():
    br = Branch.from_function(lambda a: a**3 - 3 * a + 10, np.linspace(0.1, 3.0, 30))
    fp = refine_fold(br, int(np.argmin(br.lam)))
    assert fp.kind == "min"
    assert fp.alpha == pytest.approx(1.0, abs=1e-6) and fp.lam == pytest.approx(8.0, abs=1e-10)


def test_parabolic_vertex_without_evaluator():
    a = np.linspace(0.0, 2.0, 21)
    br = Branch(a, 1 - (a - 1.03) ** 2)
    fp = refine_fold(br, 10)
    assert fp.alpha == pytest.approx(1.03, abs=1e-12)


def test_extremal_lambda_cases():
    pb = ProblemSpec(1, 1.0, Nonlinearity.exponential())
    rep = extremal_lambda(pb, trace_branch(pb, 10.0, n_initial=64))
    assert rep.rationale == "superlinear => finite"
    assert rep.lambda_star == pytest.approx(BRATU_STAR, abs=1e-6)
    assert rep.attained_alpha == pytest.approx(1.1868, abs=1e-3)
    pb = ProblemSpec(1, 2.0, Nonlinearity.arrhenius(0.3))
    rep = extremal_lambda(pb, trace_branch(pb, 10.0, n_initial=64))
    assert math.isinf(rep.lambda_star) and rep.to_dict()["lambda_star"] == "inf"


def test_extremal_rejects_f_vanishing_at_zero():
    pb = ProblemSpec(1, 1.0, Nonlinearity.linear())
    with pytest.raises(DomainError):
        extremal_lambda(pb, trace_branch(pb, 2.0, n_initial=16))


def test_branch_reversal_keeps_folds():
    pb = ProblemSpec(1, 2.0, Nonlinearity.arrhenius(0.2))
    br = trace_branch(pb, 40.0, n_initial=256)
    f1 = detect_folds(br)
    f2 = detect_folds(br.reversed())
    assert len(f1) == len(f2) == 2
    for a, b in zip(f1, f2[::-1]):
        assert abs(a.lam - b.lam) <= 10 * br.fold_tol


def test_grid_doubling_keeps_folds():
    pb = ProblemSpec(1, 2.0, Nonlinearity.arrhenius(0.2))
    f1 = detect_folds(trace_branch(pb, 40.0, n_initial=256))
    f2 = detect_folds(trace_branch(pb, 40.0, n_initial=512))
    assert len(f1) == len(f2)
    for a, b in zip(f1, f2):
        assert abs(a.lam - b.lam) <= 10 * 1e-8


def test_critical_eps_bracket_errors():
    with pytest.raises(BracketError):
        critical_eps_search(1, 2.0, (0.3, 0.2))
    with pytest.raises(BracketError):
        critical_eps_search(1, 2.0, (0.3, 0.4), alpha_max=30.0)
