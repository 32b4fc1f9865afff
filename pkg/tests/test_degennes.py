import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from glsurface.degennes import (
    DEFAULT_GRID,
    DeGennesSolver,
    lowest_two,
    mu1,
    theta0,
)
from glsurface.exceptions import GridError
from glsurface.numcore import Grid1D
from glsurface.oracles import load_fixture, richardson_mu1

ORACLE = load_fixture("theta0_oracle.json")
COARSE = Grid1D(12.0, 1200)


@pytest.fixture(scope="module")
def theta0_default():
    return theta0()


def test_mu1_at_zero_is_one():
    assert mu1(0.0).mu1 == pytest.approx(1.0, abs=1e-6)


def test_mu1_negative_shift_above_square():
    assert mu1(-2.0).mu1 >= 4.0


def test_mu1_at_xi_lin_matches_oracle():
    assert mu1(ORACLE["xi_lin"]).mu1 == pytest.approx(ORACLE["theta0"], abs=1e-4)


def test_mu1_rejects_short_grid():
    with pytest.raises(GridError):
        mu1(5.0, Grid1D(10.0, 1000))


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 3.0))
def test_mu1_agrees_with_cell_centred_oracle(xi):
    assert mu1(xi, COARSE).mu1 == pytest.approx(richardson_mu1(xi, 0.01), abs=1e-6)


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.0, 3.0))
def test_eigenfunction_normalized_nonnegative_neumann(xi):
    p = mu1(xi, COARSE, extrapolate=False)
    u = p.eigfn.values
    assert p.mu1 > 0
    assert u.min() >= -1e-12 * u.max()
    assert np.sum(COARSE.weights * u**2) == pytest.approx(1.0, rel=1e-10)
    assert p.neumann_residual <= 1e-8


def test_theta0_bounds(theta0_default):
    r = theta0_default
    assert 0.5 < r.theta0 < 0.7
    assert r.theta0 < mu1(0.0).mu1


def test_theta0_square_identity(theta0_default):
    assert abs(theta0_default.theta0 - theta0_default.xi_lin**2) <= 1e-3


def test_theta0_matches_frozen_oracle(theta0_default):
    assert theta0_default.theta0 == pytest.approx(ORACLE["theta0"], abs=1e-4)
    assert theta0_default.xi_lin == pytest.approx(ORACLE["xi_lin"], abs=1e-3)


def test_simplicity_gap():
    for xi in np.linspace(-1.0, 3.0, 9):
        lo, hi = lowest_two(xi, COARSE)
        assert hi - lo > 0.1


def test_lipschitz_continuity():
    xs = np.linspace(-0.5, 2.5, 13)
    vals = np.array([mu1(x, COARSE).mu1 for x in xs])
    lip = np.abs(np.diff(vals) / np.diff(xs)).max() * 1.5
    for x in (0.3, 1.1, 1.9):
        for d in (1e-2, 1e-3):
            assert abs(mu1(x + d, COARSE).mu1 - mu1(x, COARSE).mu1) <= lip * d


def test_second_order_refinement():
    g = Grid1D(12.0, 601)
    a, b, c = (mu1(0.8, g.refined(k), extrapolate=False).mu1 for k in (1, 2, 4))
    assert (a - b) / (b - c) == pytest.approx(4.0, rel=0.05)


def test_estimator_api():
    est = DeGennesSolver(n=1200)
    assert est.get_params()["n"] == 1200
    fitted = clone(est).fit()
    assert fitted.theta0_ == pytest.approx(ORACLE["theta0"], abs=1e-4)
    pred = fitted.predict([0.0, fitted.xi_lin_])
    assert pred[0] == pytest.approx(1.0, abs=1e-6)
    assert pred[1] == pytest.approx(fitted.theta0_, abs=1e-10)
    assert fitted.transform([0.5]).shape == (1, 1200)


def test_estimator_rejects_bad_params():
    with pytest.raises(ValueError):
        DeGennesSolver(n=2).fit()


def test_default_grid_resolution():
    assert DEFAULT_GRID.h == pytest.approx(12.0 / 2399)
