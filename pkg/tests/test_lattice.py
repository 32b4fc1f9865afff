import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glsurface import lattice
from glsurface.halfplane import Phi3DFunction, default_grid, zeta
from glsurface.lattice import (
    CellGrid3D,
    LatticeSpec,
    PhaseCocycle,
    cocycle_check,
    magnetic_field,
    make_lattice,
    minimize_periodic,
    neumann_defect,
    periodic_energy,
    periodic_sum_state,
    periodicity_check,
    quartic_trial,
    vector_potential,
)
from glsurface.linkform import GLObjective
from glsurface.numcore import gradient_check

NU = np.pi / 4
PAIR_H = 0.1
CELL_H = 0.2


def _spec(nu=NU, tau=0.0):
    return make_lattice(np.sqrt(2 * np.pi / np.sin(nu)), theta=np.pi / 2, nu=nu, tau=tau,
                        flux_n=1)


@pytest.fixture(scope="module")
def pair():
    return zeta(NU, default_grid(NU, PAIR_H))


@pytest.fixture(scope="module")
def phi(pair):
    return Phi3DFunction(pair)


@pytest.fixture(scope="module")
def state(phi):
    return periodic_sum_state(phi, _spec(), cell_h=CELL_H)


class TestLatticeSpec:
    def test_arithmetic(self):
        L = make_lattice(3.0, theta=np.pi / 2, nu=np.pi / 6, flux_n=1)
        assert L.Rp == pytest.approx(4 * np.pi / 3, rel=1e-15)

    @settings(max_examples=50)
    @given(st.floats(0.5, 10), st.floats(0.05, 3.09), st.floats(0.01, 1.56), st.integers(1, 9))
    def test_quantized(self, R, theta, nu, n):
        L = make_lattice(R, theta=theta, nu=nu, flux_n=n)
        assert L.quantized
        assert L.flux == pytest.approx(n, abs=1e-12 * n)

    def test_flux_from_hint(self):
        L = make_lattice(3.0, Rp_hint=8.5, theta=np.pi / 2, nu=np.pi / 6)
        assert L.flux_n == 2

    @pytest.mark.parametrize("nu", [0.0, np.pi / 2])
    def test_rejects_endpoint_angles(self, nu):
        with pytest.raises(ValueError):
            make_lattice(np.sqrt(2 * np.pi), theta=np.pi / 2, nu=nu, flux_n=1)

    def test_rejects_zero_flux(self):
        with pytest.raises(ValueError):
            make_lattice(2.0, nu=0.5, flux_n=0)


class TestField:
    def test_tau_zero(self):
        L = _spec(0.6)
        x = np.array([1.3, -0.4, 2.2])
        a = vector_potential(L, x)
        assert a[1] == pytest.approx(-0.5 * x[2] * np.sin(0.6))
        np.testing.assert_allclose(magnetic_field(L), [np.sin(0.6), np.cos(0.6), 0.0])

    @settings(max_examples=30)
    @given(st.floats(0.01, 1.56), st.floats(-3, 3))
    def test_unit_field(self, nu, tau):
        assert np.linalg.norm(magnetic_field(_spec(nu, tau))) == pytest.approx(1.0)

    @settings(max_examples=20)
    @given(st.floats(0.01, 1.56), st.floats(-3, 3))
    def test_discrete_curl(self, nu, tau):
        L = _spec(nu, tau)
        h = 0.1
        x = np.array([0.7, -1.1, 0.4])
        J = np.zeros((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            J[:, k] = (vector_potential(L, x + e) - vector_potential(L, x - e)) / (2 * h)
        curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
        np.testing.assert_allclose(curl, magnetic_field(L), atol=1e-12)


class TestCocycle:
    def test_quantized(self):
        rep = cocycle_check(PhaseCocycle(_spec()), rng=np.random.default_rng(5))
        assert rep.max_defect <= 1e-12

    def test_s_t_ordering(self):
        pc = PhaseCocycle(_spec(0.9))
        x = np.array([0.3, 1.7, -2.4])
        lhs = pc.phase(1, 1, x)
        rhs = pc.phase(1, 0, x + pc.vector(0, 1)) * pc.phase(0, 1, x)
        assert abs(lhs - rhs) <= 1e-12

    def test_zero_vector(self):
        pc = PhaseCocycle(_spec())
        x = np.random.default_rng(0).uniform(-5, 5, (10, 3))
        assert np.all(pc.g(0, 0, x) == 0)

    def test_unquantized_negative_control(self):
        good = _spec()
        bad = LatticeSpec(R=good.R, Rp=1.5 * good.Rp, theta=good.theta, nu=good.nu,
                          tau=0.0, flux_n=1)
        assert not bad.quantized
        assert cocycle_check(PhaseCocycle(bad)).max_defect > 1e-3


def test_cell_grid_counts():
    L = _spec()
    cell = CellGrid3D.for_lattice(np.linspace(0, 5, 6), L, 0.2)
    assert cell.shape == (6, int(np.ceil(L.R / 0.2)), int(np.ceil(L.Rp / 0.2)))


class TestSummedState:
    def test_periodicity_and_translation(self, state):
        rep = periodicity_check(state, rng=np.random.default_rng(2))
        assert rep.periodicity_defect <= 1e-6
        assert rep.translation_defect <= 1e-8
        assert rep.neumann_residual <= 1e-8

    def test_neumann(self, state):
        assert neumann_defect(state) <= 1e-8

    def test_rayleigh_close_to_zeta(self, state, pair):
        # coarse cell: second-order error about 1.5e-3 at h = 0.14, 3 times that at 0.2
        assert abs(state.rayleigh() - pair.zeta) <= 5e-3

    def test_translate_window_too_small(self, phi):
        with pytest.raises(ValueError, match="window too small"):
            periodic_sum_state(phi, _spec(), j_range=(0, 0), k_range=(0, 0), cell_h=0.5)

    def test_meta(self, state):
        assert state.meta["f_weight"].startswith("gaussian")
        assert state.meta["translates_used"][0] > 0


@pytest.mark.slow
def test_tau_invariance(pair):
    phi = Phi3DFunction(pair)
    qs = [periodic_sum_state(phi, _spec(tau=t), cell_h=CELL_H).rayleigh()
          for t in (0.0, np.pi / 6, np.pi / 3)]
    assert max(qs) - min(qs) <= 2e-3


class TestEnergy:
    def test_quartic_closed_form(self, state, pair):
        b = pair.zeta + 0.02
        tr = quartic_trial(state, b)
        num = periodic_energy(state.with_vector(tr.eps_star * state.vector), b)
        assert tr.energy < 0
        assert num == pytest.approx(tr.energy, rel=1e-6)

    def test_quartic_is_minimum_over_eps(self, state, pair):
        tr = quartic_trial(state, pair.zeta + 0.02)
        for f in (0.5, 0.9, 1.1, 2.0):
            assert tr.at(f * tr.eps_star) >= tr.energy

    def test_zero_state_energy(self, state):
        assert periodic_energy(state.with_vector(0 * state.vector), 0.9) == 0.0

    def test_rejects_b_below_zeta(self, state, pair):
        with pytest.raises(ValueError):
            minimize_periodic(state, pair.zeta - 0.01, zeta_value=pair.zeta)

    def test_gradient(self, state):
        rng = np.random.default_rng(0)
        obj = GLObjective(state.form, 0.9)
        v = state.vector
        for _ in range(10):
            x = v * (1 + 0.3 * rng.standard_normal(v.size))
            # many unknowns: a unit direction moves the energy little, so use a larger step
            assert gradient_check(obj.energy, obj.gradient, x, rng, eps=1e-3) <= 1e-5


@pytest.mark.slow
def test_minimized_below_trial(state, pair):
    b = 0.5 * (pair.zeta + 1)
    m = minimize_periodic(state, b, zeta_value=pair.zeta)
    assert m.energy < 0
    assert m.energy <= m.trial_energy
    assert m.stationarity_defect <= 1e-6


def test_module_exports_cocycle():
    assert lattice.wedge(np.array([0, 1.0, 0]), np.array([0, 0, 1.0])) == 1.0
