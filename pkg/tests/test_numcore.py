import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glsurface.degennes import operator
from glsurface.exceptions import ConvergenceError, GridError
from glsurface.numcore import (
    BandedSymmetricOperator,
    Grid1D,
    Profile1D,
    cumulative_trapezoid,
    gradient_check,
    lowest_eigenpair,
    minimize_scalar,
    projected_gradient_descent,
    sturm_count,
    trapezoid,
    tridiagonal_eigenvalue,
)


def _residual_ok(op, pair, tol):
    r = op.matvec(pair.vector) - pair.value * pair.vector
    return np.linalg.norm(r) <= tol * (abs(pair.value) + 1)


class TestGrid:
    def test_rejects_small_n(self):
        with pytest.raises(GridError):
            Grid1D(1.0, 2)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(GridError):
            Grid1D(0.0, 10)

    def test_node_zero_on_boundary(self):
        g = Grid1D(12.0, 2400)
        assert g.nodes[0] == 0.0
        assert g.nodes[-1] == pytest.approx(12.0)

    def test_refined_keeps_interval(self):
        g = Grid1D(3.0, 31).refined(2)
        assert g.n == 61 and g.h == pytest.approx(0.05)

    @given(st.floats(0.5, 20.0), st.integers(3, 400))
    def test_weights_sum_to_length(self, t_max, n):
        assert Grid1D(t_max, n).weights.sum() == pytest.approx(t_max, rel=1e-12)

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.integers(20, 400))
    def test_trapezoid_quadratic_second_order(self, a, b, c, n):
        g = Grid1D(2.0, n)
        t = g.nodes
        exact = a * 8.0 / 3.0 + b * 2.0 + 2.0 * c
        # trapezoid error for a t^2 over [0, L] is a L h^2 / 6
        assert trapezoid(a * t**2 + b * t + c, g) - exact == pytest.approx(a * 2.0 * g.h**2 / 6,
                                                                             abs=1e-12)

    def test_cumulative_trapezoid_ends_at_total(self):
        g = Grid1D(5.0, 101)
        f = np.exp(-g.nodes)
        c = cumulative_trapezoid(f, g)
        assert c[0] == 0.0
        assert c[-1] == pytest.approx(trapezoid(f, g), rel=1e-14)

    def test_profile_is_read_only(self):
        p = Profile1D(Grid1D(1.0, 5), np.ones(5))
        with pytest.raises(ValueError):
            p.values[0] = 2.0


class TestEigen:
    def test_diagonal_2x2(self):
        op = BandedSymmetricOperator.from_dense(np.diag([1.0, 3.0]), 0)
        pair = lowest_eigenpair(op, 1e-12)
        assert pair.value == pytest.approx(1.0, abs=1e-12)
        assert abs(pair.vector[0]) == pytest.approx(1.0)
        assert abs(pair.vector[1]) < 1e-12

    @pytest.mark.parametrize("n", [50, 200, 800])
    def test_dirichlet_laplacian(self, n):
        t_max = 1.0
        h = t_max / (n + 1)
        op = BandedSymmetricOperator.tridiagonal(np.full(n, 2 / h**2), np.full(n - 1, -1 / h**2))
        # residual floor is ~eps * ||op|| ~ eps * 4/h^2
        pair = lowest_eigenpair(op, 1e-9)
        exact_discrete = 4 / h**2 * math.sin(math.pi * h / 2) ** 2
        assert pair.value == pytest.approx(exact_discrete, rel=1e-10)
        assert pair.value == pytest.approx(math.pi**2, rel=2 * h**2)
        assert _residual_ok(op, pair, 1e-9)

    def test_harmonic_oscillator_half_line(self):
        g = Grid1D(12.0, 2400)
        op, w = operator(0.0, g)
        pair = lowest_eigenpair(op, 1e-10, weights=w)
        # three-point stencil on exp(-t^2/2): lambda_h = 1 - h^2/16 + O(h^4)
        assert pair.value == pytest.approx(1.0 - g.h**2 / 16, abs=1e-9)
        assert np.sum(w * pair.vector**2) == pytest.approx(1.0, rel=1e-12)

    def test_harmonic_oscillator_extrapolated(self):
        from glsurface.degennes import mu1
        assert mu1(0.0, Grid1D(12.0, 2400)).mu1 == pytest.approx(1.0, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 2**32 - 1))
    def test_random_tridiagonal_matches_lapack(self, n, seed):
        rng = np.random.default_rng(seed)
        d = rng.uniform(-2, 2, n)
        e = rng.uniform(-1, 1, n - 1)
        dense = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        op = BandedSymmetricOperator.tridiagonal(d, e)
        pair = lowest_eigenpair(op, 1e-11)
        ref = np.linalg.eigvalsh(dense)
        assert pair.value == pytest.approx(ref[0], abs=1e-9)
        assert _residual_ok(op, pair, 1e-8)
        assert tridiagonal_eigenvalue(d, e, min(1, n - 1)) == pytest.approx(ref[min(1, n - 1)],
                                                                            abs=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 25), st.integers(0, 2**32 - 1))
    def test_wider_band_matches_lapack(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(-1, 1, (n, n))
        a = np.triu(np.tril(a + a.T, 2), -2)
        op = BandedSymmetricOperator.from_dense(a, 2)
        pair = lowest_eigenpair(op, 1e-11)
        assert pair.value == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-9)

    def test_sturm_count(self):
        d = np.array([1.0, 2.0, 3.0])
        e = np.zeros(2)
        assert list(sturm_count(d, e, [0.5, 1.5, 2.5, 3.5])) == [0, 1, 2, 3]

    def test_rejects_bad_tolerance(self):
        op = BandedSymmetricOperator.from_dense(np.eye(2), 0)
        with pytest.raises(ValueError):
            lowest_eigenpair(op, 0.0)

    def test_truncation_monotone(self):
        # growing t_max at fixed h never raises the lowest Neumann/Dirichlet eigenvalue
        vals = []
        for t_max in (3.0, 4.0, 6.0, 8.0):
            g = Grid1D(t_max, int(round(t_max / 0.01)) + 1)
            op, w = operator(1.0, g)
            vals.append(lowest_eigenpair(op, 1e-10, weights=w).value)
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestMinimizeScalar:
    def test_quadratic(self):
        r = minimize_scalar(lambda x: (x - 2) ** 2, (0, 5), 1e-8)
        assert r.argmin == pytest.approx(2.0, abs=1e-8)
        assert r.bracket[1] - r.bracket[0] <= 1e-8
        assert r.bracket[0] <= r.argmin <= r.bracket[1]

    def test_cosine(self):
        r = minimize_scalar(math.cos, (2, 4), 1e-8)
        assert r.argmin == pytest.approx(math.pi, abs=1e-8)

    def test_rejects_infinite_bracket(self):
        with pytest.raises(ValueError):
            minimize_scalar(math.cos, (0, math.inf))

    @given(st.floats(-10, 10), st.floats(0.1, 5))
    def test_shifted_parabola(self, c, w):
        r = minimize_scalar(lambda x: (x - c) ** 2, (c - w, c + 2 * w), 1e-7)
        assert abs(r.argmin - c) <= 1e-7


class TestDescent:
    @pytest.mark.parametrize("policy", ["armijo", "lbfgs"])
    def test_convex_quadratic(self, policy):
        rng = np.random.default_rng(0)
        x0 = rng.standard_normal(20)
        res = projected_gradient_descent(lambda v: 0.5 * v @ v, lambda v: v, x0, policy, 1e-10)
        assert np.abs(res.x).max() <= 1e-10
        energies = res.history
        assert all(b <= a + 1e-15 for a, b in zip(energies, energies[1:]))

    def test_projection_respected(self):
        target = np.array([-1.0, 2.0, -3.0])
        res = projected_gradient_descent(lambda v: 0.5 * np.sum((v - target) ** 2),
                                         lambda v: v - target, np.ones(3), "armijo", 1e-10,
                                         project=lambda v: np.maximum(v, 0.0),
                                         residual=lambda v, g: float(np.abs(
                                             v - np.maximum(v - g, 0.0)).max()))
        np.testing.assert_allclose(res.x, [0.0, 2.0, 0.0], atol=1e-9)

    def test_iteration_cap_raises(self):
        with pytest.raises(ConvergenceError):
            projected_gradient_descent(lambda v: 0.5 * v @ v * 1e-8 + v[0] ** 4,
                                       lambda v: 1e-8 * v + np.array([4 * v[0] ** 3, 0]),
                                       np.ones(2), "armijo", 1e-30, max_iter=5)

    def test_gradient_check_detects_wrong_gradient(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5)
        assert gradient_check(lambda v: np.sum(v**4), lambda v: 4 * v**3, x, rng) < 1e-6
        assert gradient_check(lambda v: np.sum(v**4), lambda v: 3 * v**3, x, rng) > 1e-2
