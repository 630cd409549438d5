import numpy as np
import pytest

from semibif.degree import (Box, BoundaryCrossingError, DiscreteMap, DegreeError, box_complement,
                            brouwer_degree, excision_check, fd_extremal_lambda, homotopy_sweep,
                            minimal_fd_solution, product_check)
from semibif.solvers import time_map_lambda
from semibif.nonlinearity import Nonlinearity

SQ = DiscreteMap.custom(lambda u: u**2 - 1.0, 1, jac=lambda u: np.diag(2.0 * u))


@pytest.mark.parametrize("n", range(1, 9))
def test_identity_degree_one(n):
    res = brouwer_degree(DiscreteMap.identity(n), 0.0, Box.cube(n))
    assert res.degree == 1 and len(res.zeros) == 1
    assert np.allclose(res.zeros[0], 0.0)
    assert res.boundary_clear


def test_gelfand_map_at_zero_lambda_is_identity():
    g = DiscreteMap.gelfand_fd(4)
    u = np.linspace(-1, 1, 4)
    assert np.array_equal(g(0.0, u), u)


def test_square_map():
    res = brouwer_degree(SQ, 0.0, Box([-2.0], [2.0]))
    assert res.degree == 0
    assert sorted(round(float(z[0]), 9) for z in res.zeros) == [-1.0, 1.0]
    assert sorted(res.signs) == [-1, 1]


def test_boundary_crossing_raised():
    with pytest.raises(BoundaryCrossingError):
        brouwer_degree(SQ, 0.0, Box([-1.0], [2.0]))


def test_regularity_doubt_warning():
    cube = DiscreteMap.custom(lambda u: u**3, 1, jac=lambda u: np.diag(3 * u**2))
    res = brouwer_degree(cube, 0.0, Box([-1.0], [1.0]), n_starts=20)
    assert any("regularity" in w for w in res.warnings)


def test_fd_jacobian_fallback():
    m = DiscreteMap.custom(lambda u: np.array([u[0] ** 2 + u[1] - 1, u[1] - u[0]]), 2)
    res = brouwer_degree(m, 0.0, Box([-3, -3], [3, 3]))
    assert len(res.zeros) == 2


@pytest.fixture(scope="module")
def gelfand5():
    g = DiscreteMap.gelfand_fd(5)
    return g, fd_extremal_lambda(g)


def test_fd_extremal_close_to_continuum(gelfand5):
    _, lam = gelfand5
    assert 3.0 < lam < 3.6


def test_gelfand_minimal_degree_one(gelfand5):
    g, lam_star = gelfand5
    lam = 0.5 * lam_star
    um = minimal_fd_solution(g, lam)
    res = brouwer_degree(g, lam, Box.cube(5, 1.0))
    assert res.degree == 1 and len(res.zeros) == 1
    assert np.allclose(res.zeros[0], um, atol=1e-10)
    # the upper solution is found outside the box
    assert any(z.max() > 1.0 for z in res.exterior_zeros)


def test_homotopy_sweep_constant(gelfand5):
    g, lam_star = gelfand5
    sweep = homotopy_sweep(g, np.linspace(0, 0.9 * lam_star, 8), Box.cube(5, 1.0))
    assert sweep.constant and set(sweep.degrees) == {1}


def test_homotopy_sweep_reports_exit(gelfand5):
    g, lam_star = gelfand5
    sweep = homotopy_sweep(g, np.linspace(0, 0.9 * lam_star, 8), Box.cube(5, 0.3))
    assert not sweep.constant
    lo, hi = sweep.crossing
    assert minimal_fd_solution(g, lo).max() < 0.3 < minimal_fd_solution(g, hi).max() + 1e-9


def test_identity_sweep():
    sweep = homotopy_sweep(DiscreteMap.identity(3), [0.0, 1.0, 2.0], Box.cube(3))
    assert sweep.degrees == [1, 1, 1]


def test_product_formula():
    ident = DiscreteMap.identity(1)
    assert product_check(ident, Box.cube(1), ident, Box.cube(1)) == (1, 1, 1)
    assert product_check(SQ, Box([-2.0], [2.0]), ident, Box.cube(1)) == (0, 0, 1)
    assert product_check(SQ, Box([-2.0], [2.0]), SQ, Box([-2.0], [2.0])) == (0, 0, 0)
    res = brouwer_degree(SQ.product(SQ), 0.0, Box([-2, -2], [2, 2]))
    assert len(res.zeros) == 4 and sorted(res.signs) == [-1, -1, 1, 1]


def test_box_complement_covers_volume():
    box, hole = Box([-2, -2], [2, 2]), Box([-0.5, 0.0], [0.5, 1.0])
    pieces = box_complement(box, hole)
    vol = sum(np.prod(p.hi - p.lo) for p in pieces)
    assert vol == pytest.approx(16.0 - 1.0)


@pytest.mark.parametrize("fmap,box,hole", [
    (DiscreteMap.identity(1), Box([-2.0], [2.0]), Box([0.5], [1.5])),
    (SQ, Box([-2.0], [2.0]), Box([-0.5], [0.5])),
    (DiscreteMap.identity(2), Box([-2, -2], [2, 2]), Box([0.5, 0.5], [1.5, 1.5])),
    (SQ.product(SQ), Box([-2, -2], [2, 2]), Box([-0.5, -0.5], [0.5, 0.5])),
])
def test_excision(fmap, box, hole):
    full, rest, in_hole = excision_check(fmap, 0.0, box, hole)
    assert in_hole == 0 and full == rest
