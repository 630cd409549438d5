import math

import numpy as np
import pytest

from semibif.admissible import (_limit_at_infinity, _limit_at_zero, admissibility_check,
                                arrhenius_ratio_derivative, one_sided_lipschitz, ratio_decreasing)
from semibif.nonlinearity import DomainError, Nonlinearity


def test_limits():
    assert math.isinf(_limit_at_zero(Nonlinearity.exponential()))
    assert _limit_at_zero(Nonlinearity.linear()) == pytest.approx(1.0)
    assert _limit_at_infinity(Nonlinearity.arrhenius(0.3)) == 0.0
    assert _limit_at_infinity(Nonlinearity.constant()) == 0.0
    assert math.isinf(_limit_at_infinity(Nonlinearity.exponential()))
    assert _limit_at_infinity(Nonlinearity.linear()) == pytest.approx(1.0)


def test_admissible_interval():
    lam1 = math.pi**2
    rep = admissibility_check(Nonlinearity.arrhenius(0.3), lam1)
    assert rep.lambda_star_interval == (0.0, math.inf)
    rep = admissibility_check(Nonlinearity.linear(), lam1)
    assert rep.interval_empty


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.3, 0.5])
def test_ratio_derivative_against_differences(eps):
    f = Nonlinearity.arrhenius(eps)
    x = np.linspace(0.2, 20.0, 80)
    h = 1e-6 * x
    q = lambda s: f._raw(s) / s
    fd = (q(x + h) - q(x - h)) / (2 * h)
    assert np.allclose(arrhenius_ratio_derivative(eps, x), fd, rtol=1e-6)
    with pytest.raises(DomainError):
        arrhenius_ratio_derivative(eps, [0.0])


def test_ratio_decreasing_threshold():
    # the quadratic factor has no positive root exactly when eps >= 1/4
    assert ratio_decreasing(Nonlinearity.arrhenius(0.3))[0]
    assert not ratio_decreasing(Nonlinearity.arrhenius(0.2))[0]


def test_one_sided_lipschitz():
    assert one_sided_lipschitz(Nonlinearity.exponential(), 10.0) == 0.0
    dec = lambda x: np.exp(-np.asarray(x))
    # sampled sup of |slope| is just under 1, plus 10% headroom
    assert 1.0 < one_sided_lipschitz(dec, 5.0) <= 1.1
