import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semibif.nonlinearity import (AMPLITUDE_CAP, Bump, DomainError, InfeasibleAmplitudeError,
                                  Nonlinearity, build_perturbation, bump_shape, bump_shape_prime,
                                  monotone_amplitude_cap)

from conftest import simpson


def test_eval_examples():
    assert Nonlinearity.constant().__call__(3.0) == 1.0
    assert Nonlinearity.exponential()(0.0) == 1.0
    assert Nonlinearity.arrhenius(0.25)(4.0) == pytest.approx(math.exp(2.0), rel=1e-15)
    assert Nonlinearity.linear()(2.5) == 2.5


@pytest.mark.parametrize("x", [-1e-12, -1.0, math.nan, math.inf])
def test_domain_rejected(x):
    with pytest.raises(DomainError):
        Nonlinearity.exponential()(x)


def test_bad_constructors():
    with pytest.raises(DomainError):
        Nonlinearity.arrhenius(0.0)
    with pytest.raises(DomainError):
        Nonlinearity("cubic")
    with pytest.raises(DomainError):
        Bump(1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        Bump(1.0, 0.5, AMPLITUDE_CAP * 1.01)
    with pytest.raises(DomainError):
        Bump(-0.1, 0.5, 0.1)


def test_closed_form_antiderivatives():
    assert Nonlinearity.constant(2.0).antiderivative(3.0) == 6.0
    assert Nonlinearity.linear().antiderivative(3.0) == 4.5
    assert Nonlinearity.exponential().antiderivative(1.0) == pytest.approx(math.e - 1.0, rel=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.25, 0.3])
@pytest.mark.parametrize("x", [0.5, 3.0, 20.0])
def test_arrhenius_antiderivative_against_simpson(eps, x):
    f = Nonlinearity.arrhenius(eps)
    ref = simpson(lambda s: np.exp(s / (1.0 + eps * s)), 0.0, x)
    assert f.antiderivative(x) == pytest.approx(ref, rel=1e-10)


def test_perturbed_antiderivative_against_simpson():
    g = build_perturbation(Nonlinearity.arrhenius(0.3), 1.0, 0.3, 0.1, rise=0.2)
    ref = simpson(g._raw, 0.0, 2.0, 2_000_000)
    assert g.antiderivative(2.0) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("f", [Nonlinearity.arrhenius(0.2), Nonlinearity.exponential(),
                               build_perturbation(Nonlinearity.arrhenius(0.3), 1.0, 0.3, 0.14,
                                                  monotone=True, rise=0.3)])
def test_tail_integrals_match_antiderivative(f):
    alpha = 2.5
    u = np.linspace(0.0, alpha, 40, endpoint=False)
    ref = np.array([f.antiderivative(alpha) - f.antiderivative(x) for x in u])
    assert np.allclose(f.tail_integrals(u, alpha), ref, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("f", [Nonlinearity.arrhenius(0.2), Nonlinearity.exponential(),
                               build_perturbation(Nonlinearity.arrhenius(0.3), 1.0, 0.3, 0.1)])
def test_derivative_against_central_differences(f):
    x = np.linspace(0.05, 3.0, 60)
    h = 1e-6
    fd = (f._raw(x + h) - f._raw(x - h)) / (2 * h)
    assert np.allclose(f.derivative(x), fd, rtol=1e-6, atol=1e-7)


def test_bump_shape_peak_and_smoothness():
    for rise in (0.1, 0.3, 0.5):
        t = np.linspace(0.0, 1.0, 100001)
        v = bump_shape(t, rise)
        assert v.max() == pytest.approx(1.0, abs=1e-12)
        assert v[0] == 0.0 and v[-1] == 0.0
        assert bump_shape(rise, rise) == 1.0
        # slope continuous at the peak and ends
        assert abs(bump_shape_prime(rise - 1e-9, rise)) < 1e-6
        assert abs(bump_shape_prime(1e-9, rise)) < 1e-6


def test_support_locality_is_exact():
    g = Nonlinearity.arrhenius(0.3)
    gh = build_perturbation(g, 1.0, 0.3, 0.2)
    x = np.concatenate([np.linspace(0.0, 1.0, 500), np.linspace(1.3, 20.0, 500)])
    assert np.array_equal(gh._raw(x), g._raw(x))
    inside = np.linspace(1.01, 1.29, 50)
    assert np.all(gh._raw(inside) > g._raw(inside))


def test_monotone_cap_and_infeasible():
    g = Nonlinearity.arrhenius(0.3)
    cap = monotone_amplitude_cap(g, 1.0, 0.3, rise=0.2)
    gh = build_perturbation(g, 1.0, 0.3, cap, monotone=True, rise=0.2)
    x = np.linspace(0.0, 3.0, 200001)
    assert np.all(np.diff(gh._raw(x)) >= 0.0)
    with pytest.raises(InfeasibleAmplitudeError) as info:
        build_perturbation(g, 1.0, 0.3, 1.2 * cap, monotone=True, rise=0.2)
    assert info.value.cap == pytest.approx(cap)


def test_nonmonotone_base_rejected():
    class Dec:
        def __call__(self, x):
            return np.exp(-np.asarray(x))
    with pytest.raises(DomainError):
        build_perturbation(Dec(), 1.0, 0.5, 0.1)


def test_serialisation_round_trip():
    g = build_perturbation(Nonlinearity.arrhenius(0.3), 1.0, 0.3, 0.1, monotone=True, rise=0.2)
    h = Nonlinearity.from_dict(g.to_dict())
    x = np.linspace(0.0, 3.0, 301)
    assert np.array_equal(h._raw(x), g._raw(x))
    assert h.breakpoints == (1.0, 1.3)


@settings(max_examples=40, deadline=None)
@given(eps=st.floats(0.05, 1.0), alpha=st.floats(0.1, 30.0))
def test_tail_integrals_positive_and_decreasing(eps, alpha):
    f = Nonlinearity.arrhenius(eps)
    u = np.linspace(0.0, alpha, 25, endpoint=False)
    t = f.tail_integrals(u, alpha)
    assert np.all(t > 0.0)
    assert np.all(np.diff(t) < 0.0)


@settings(max_examples=40, deadline=None)
@given(m=st.floats(0.0, 5.0), w=st.floats(0.05, 1.0), a=st.floats(-0.5, 0.5))
def test_perturbation_support_property(m, w, a):
    g = Nonlinearity.arrhenius(0.3)
    gh = build_perturbation(g, m, w, a)
    x = np.linspace(0.0, m + 2 * w + 1, 400)
    out = (x <= m) | (x >= m + w)
    assert np.array_equal(gh._raw(x[out]), g._raw(x[out]))
    assert np.max(np.abs(gh._raw(x) - g._raw(x))) <= abs(a) + 1e-15
