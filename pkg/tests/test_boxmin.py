import numpy as np
import pytest

from glsurface import boxmin
from glsurface.boxmin import (
    BoxSpec,
    BoxState,
    box_energy,
    gauge_check,
    minimize_box,
    shear_transform_check,
    trial_1d,
)
from glsurface.gl1d import e1d0

SWEEP_B = (0.65, 0.75, 0.85, 0.95)


@pytest.fixture(scope="module")
def e07():
    return e1d0(0.7)


@pytest.fixture(scope="module")
def sweep():
    # coarse transverse resolution keeps each minimization around a second
    return {b: minimize_box(BoxSpec(b=b, nu=0.0, ell=8.0, h=0.5)) for b in SWEEP_B}


def test_spec_defaults():
    s = BoxSpec(b=0.7, nu=0.0, ell=3.0)
    assert s.ell3 == 3.0 and s.beta == 0.0
    assert s.area == 36.0
    assert s.x1_max == 14.0 and s.h == 0.25


def test_spec_rejects_bad_beta():
    with pytest.raises(ValueError):
        BoxSpec(b=0.7, nu=0.0, ell=3.0, beta=np.pi / 2)


def test_tilted_domain():
    s = BoxSpec(b=0.7, nu=0.5, ell=2.0, ell3=1.5, beta=0.3, h=0.5, x1_max=4.0)
    x = s.grid.positions()
    free = s.grid.free_mask()
    assert np.all(x[..., 0] >= 0)
    assert np.all(np.abs(x[free][:, 1] - x[free][:, 0] * np.tan(0.3)) < 2.0)
    assert np.all(np.abs(x[free][:, 2]) < 1.5)


def test_dirichlet_nodes_zero():
    s = BoxSpec(b=0.7, nu=0.0, ell=2.0, h=0.5, x1_max=4.0)
    st = BoxState(np.ones(s.grid.shape), s)
    assert not np.any(st.values[~s.grid.free_mask()])
    assert np.all(st.values[0, 1:-1, 1:-1] == 1)


def test_zero_state_energy():
    s = BoxSpec(b=0.7, nu=0.3, ell=2.0, h=0.5, x1_max=4.0)
    assert box_energy(BoxState(np.zeros(s.grid.shape), s)) == 0.0


def test_gauge_invariance(e07):
    s = BoxSpec(b=0.7, nu=0.4, ell=4.0, h=0.5)
    assert gauge_check(trial_1d(s, e07)) <= 1e-10


def test_trial_energy_linear_in_ell(e07):
    # E(trial) = 4 ell^2 E1D + c ell + c0: fit c, c0 on two sizes, predict a third
    excess = {}
    for ell in (4.0, 6.0, 8.0):
        s = BoxSpec(b=0.7, nu=0.0, ell=ell)
        excess[ell] = box_energy(trial_1d(s, e07)) - 4 * ell**2 * e07.e0
    c = (excess[6.0] - excess[4.0]) / 2.0
    c0 = excess[4.0] - 4.0 * c
    assert c > 0
    assert excess[8.0] == pytest.approx(8.0 * c + c0, rel=1e-2)


def test_trial_per_area_near_e1d(e07):
    # desk-scale target; the boundary cost c ell dominates at ell = 8
    s = BoxSpec(b=0.7, nu=0.0, ell=8.0)
    per_area = box_energy(trial_1d(s, e07)) / s.area
    assert abs(per_area - e07.e0) <= 0.15 * abs(e07.e0)


def test_minimizer_bounds(sweep):
    for r in sweep.values():
        assert r.state.sup <= 1 + 1e-9
        if not r.meta["zero_state"]:
            assert r.outer_mass_fraction <= 1e-3
            assert r.stationarity_defect <= 1e-6
            assert r.energy == pytest.approx(-0.5 * r.state.spec.b * r.l4_integral, rel=1e-6)


def test_per_area_monotone_concave_in_b(sweep):
    e = np.array([sweep[b].per_area for b in SWEEP_B])
    band = 0.02 * np.abs(e).max()
    assert np.all(np.diff(e) <= band)
    slopes = np.diff(e) / np.diff(SWEEP_B)
    assert np.all(np.diff(slopes) <= band / 0.1)


def test_below_theta0_zero():
    s = BoxSpec(b=0.55, nu=0.0, ell=4.0, h=0.5, x1_max=8.0)
    r = minimize_box(s)
    volume = 4 * s.ell * s.ell3 * s.x1_max
    assert r.energy >= -1e-8 * volume
    assert r.meta["zero_state"]


def test_rejects_b_out_of_range():
    s = BoxSpec(b=1.2, nu=0.0, ell=2.0, h=0.5, x1_max=4.0)
    with pytest.raises(ValueError):
        minimize_box(s)


def test_minimizer_below_trial(e07):
    s = BoxSpec(b=0.7, nu=0.0, ell=6.0, h=0.5, x1_max=8.0)
    r = minimize_box(s, e1d=e07)
    assert r.energy <= box_energy(trial_1d(s, e07))


@pytest.mark.slow
def test_beta_independence():
    vals = [minimize_box(BoxSpec(b=0.7, nu=0.5, ell=8.0, beta=beta)).per_area
            for beta in (0.0, 0.3)]
    scale = max(abs(v) for v in vals)
    assert abs(vals[0] - vals[1]) <= 0.05 * scale + 1e-12


def test_shear_zero_state():
    rep = shear_transform_check(lambda x: np.zeros(x.shape[:-1], complex), 0.7, np.pi / 4, 2.0,
                                h=0.5, x1_max=4.0)
    assert rep.energy == 0.0 and rep.energy_tilde == 0.0


def test_shear_parameters():
    rep = shear_transform_check(lambda x: np.zeros(x.shape[:-1], complex), 0.7, np.pi / 4, 2.0,
                                h=0.5, x1_max=4.0)
    assert rep.alpha == pytest.approx(np.pi / 4)
    assert rep.L == pytest.approx(2.0)
    assert rep.L3 == 2.0


def test_shear_rejects_endpoints():
    with pytest.raises(ValueError):
        shear_transform_check(lambda x: np.zeros(x.shape[:-1], complex), 0.7, 0.0, 2.0)


def test_tilde_coordinates_area():
    # the map v -> x has Jacobian determinant cos(nu) / sin(nu) in the (x1, x2) block
    nu = 0.6
    e = np.eye(3)
    cols = np.stack([boxmin.tilde_coordinates(nu, e[k]) for k in range(3)], axis=1)
    assert np.linalg.det(cols) == pytest.approx(np.cos(nu) / np.sin(nu))
