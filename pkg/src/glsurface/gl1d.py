"""One-dimensional Ginzburg-Landau functional on the half-line.

    E_{b,xi}(f) = int_0^inf f'^2 + (t - xi)^2 f^2 - b f^2 + (b/2) f^4 dt

Discretized with the same quadratic form as ``degennes`` plus trapezoidal
potential and quartic terms, so that at a discrete critical point the
identity E = -(b/2) ||f||_4^4 holds exactly, not just up to O(h^2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import degennes
from ._validation import check_parameter_vector, check_positive_int, check_real
from .exceptions import ConvergenceError, Violation
from .numcore import (
    Grid1D,
    Profile1D,
    cumulative_trapezoid,
    minimize_scalar,
    projected_gradient_descent,
)

log = logging.getLogger(__name__)

DEFAULT_GRID = Grid1D(16.0, 3201)
SEED_AMPLITUDE = 0.1
ZERO_TOL = 1e-10
# below theta0 + band the minimal energy, of order (b - theta0)^2, is not
# resolvable against the grid error of mu1 and is returned as 0
THRESHOLD_BAND = 1e-6


def check_b(b: float) -> float:
    return check_real(b, "b", min_val=0.0, max_val=1.0, include_boundaries="right")


class _Functional:
    """Discrete energy, gradient and Hessian pieces on the free nodes."""

    def __init__(self, b: float, xi: float, grid: Grid1D):
        self.b, self.xi, self.grid = b, xi, grid
        self.h = grid.h
        self.t = grid.nodes[:-1]
        self.w = grid.weights[:-1]
        self.v = (self.t - xi) ** 2
        self.stiff = np.full(self.t.size, 2.0 / self.h)
        self.stiff[0] = 1.0 / self.h

    def apply_stiffness(self, f):
        out = self.stiff * f
        out[:-1] -= f[1:] / self.h
        out[1:] -= f[:-1] / self.h
        return out

    def energy(self, f):
        df = np.diff(np.append(f, 0.0))
        w, b = self.w, self.b
        return float(np.sum(df * df) / self.h + np.sum(w * (self.v - b) * f * f)
                     + 0.5 * b * np.sum(w * f**4))

    def energy_delta(self, f, f_new):
        d = f_new - f
        dd = np.diff(np.append(d, 0.0))
        df = np.diff(np.append(f, 0.0))
        w, b = self.w, self.b
        quad = (np.sum(dd * (2.0 * df + dd)) / self.h
                + np.sum(w * (self.v - b) * d * (2.0 * f + d)))
        quart = 0.5 * b * np.sum(w * d * (4 * f**3 + 6 * f * f * d + 4 * f * d * d + d**3))
        return float(quad + quart)

    def gradient(self, f):
        return 2.0 * (self.apply_stiffness(f) + self.w * ((self.v - self.b) * f + self.b * f**3))

    def strong_residual(self, f):
        """-f'' + (t - xi)^2 f - b (1 - f^2) f at the nodes, Neumann row included."""
        return self.gradient(f) / (2.0 * self.w)

    def hessian_bands(self, f, drop_negative_shift=False):
        shift = 0.0 if drop_negative_shift else self.b
        diag = 2.0 * (self.stiff + self.w * (self.v - shift + 3.0 * self.b * f * f))
        off = np.full(self.t.size - 1, -2.0 / self.h)
        return diag, off


class _NewtonPolicy:
    """Newton direction from the tridiagonal Hessian; where that Hessian is
    not positive definite the -b shift is dropped, which keeps a positive
    definite preconditioner pointing downhill."""

    def __init__(self, functional: _Functional):
        self.fn = functional

    def reset(self):
        pass

    def update(self, s, y):
        pass

    def direction(self, f, g):
        for drop in (False, True):
            diag, off = self.fn.hessian_bands(f, drop_negative_shift=drop)
            bands = np.vstack([diag, np.append(off, 0.0)])
            try:
                chol = sla.cholesky_banded(bands, lower=True)
            except sla.LinAlgError:
                continue
            return -sla.cho_solve_banded((chol, True), g)
        return -g


@dataclass(frozen=True)
class GL1DResult:
    b: float
    xi: float
    energy: float
    profile: Profile1D
    el_residual: float
    l4_norm_4: float
    mu1_grid: float
    nonzero: bool
    iterations: int
    endpoint_flag: bool = False

    @property
    def identity_defect(self) -> float:
        """|E + (b/2)||f||_4^4| relative to |E| (absolute when E = 0)."""
        gap = abs(self.energy + 0.5 * self.b * self.l4_norm_4)
        return gap / abs(self.energy) if self.energy != 0 else gap


def el_residual(profile: Profile1D, b: float, xi: float) -> float:
    """Sup-norm of the discrete Euler-Lagrange defect, Neumann row included.

    Evaluated on every node except the last, using the profile's own value
    there as the right neighbour of the last free node.
    """
    fn = _Functional(b, xi, profile.grid)
    f = profile.values
    res = fn.strong_residual(f[:-1])
    res[-1] -= f[-1] / (fn.h * fn.w[-1])
    return float(np.max(np.abs(res)))


def minimize_1d(
    b: float,
    xi: float,
    grid: Grid1D = DEFAULT_GRID,
    tol: float = 1e-10,
    *,
    init: np.ndarray | None = None,
    step_policy="newton",
    max_iter: int = 2000,
    shift_hint: float | None = None,
) -> GL1DResult:
    """Nonnegative discrete minimizer of E_{b,xi}.

    Starts from ``init`` (free-node values) or from 0.1 times the lowest
    eigenfunction at the same shift. The result is the zero profile when the
    descent ends at nonnegative energy: every nonzero f has positive energy
    when the discrete mu1(xi) >= b, and the minimizer has negative energy
    when mu1(xi) < b. The consistency with mu1 is checked afterwards.
    """
    b = check_b(b)
    xi = check_real(xi, "xi")
    degennes.check_grid_for_shift(xi, grid)
    fn = _Functional(b, xi, grid)
    lin = degennes.mu1(xi, grid, extrapolate=False, shift_hint=shift_hint)
    if init is None:
        x0 = SEED_AMPLITUDE * lin.eigfn.values[:-1]
    else:
        x0 = np.clip(np.asarray(init, dtype=float)[: grid.n - 1], 0.0, None)

    def residual(f, g):
        r = g / (2.0 * fn.w)
        r = np.where((f <= 0.0) & (r > 0.0), 0.0, r)
        return float(np.max(np.abs(r)))

    policy = _NewtonPolicy(fn) if step_policy == "newton" else step_policy
    try:
        out = projected_gradient_descent(
            fn.energy, fn.gradient, x0, policy, tol,
            project=lambda v: np.maximum(v, 0.0), residual=residual,
            energy_delta=fn.energy_delta, max_iter=max_iter,
        )
    except ConvergenceError as err:
        raise ConvergenceError(
            f"1D minimization did not converge for b={b}, xi={xi}", **err.diagnostics
        ) from err
    f = out.x
    nonzero = bool(np.max(f) > ZERO_TOL and fn.energy(f) < 0.0)
    if not nonzero:
        f = np.zeros_like(f)
    values = np.append(f, 0.0)
    profile = Profile1D(grid, values)
    energy = fn.energy(f)
    l4 = float(np.sum(fn.w * f**4))
    result = GL1DResult(
        b=b, xi=xi, energy=energy, profile=profile,
        el_residual=el_residual(profile, b, xi), l4_norm_4=l4,
        mu1_grid=lin.mu1_grid,
        nonzero=nonzero, iterations=out.iterations, endpoint_flag=(b == 1.0),
    )
    _check_minimizer(result)
    return result


def _check_minimizer(r: GL1DResult) -> None:
    f = r.profile.values
    if np.max(f) > 1.0 + 1e-9:
        raise Violation("1D minimizer exceeds 1", b=r.b, xi=r.xi, sup=float(np.max(f)))
    if r.nonzero and r.mu1_grid >= r.b:
        raise Violation("nonzero 1D minimizer although mu1(xi) >= b",
                        b=r.b, xi=r.xi, mu1=r.mu1_grid)
    if r.nonzero and r.b < 1.0:
        t = r.profile.t
        interior = t <= r.profile.grid.t_max - 2.0
        if np.any(f[interior] <= 0.0):
            k = int(np.argmax(f[interior] <= 0.0))
            raise Violation("1D minimizer not strictly positive", b=r.b, xi=r.xi,
                            node=k, t=float(t[k]))


@dataclass(frozen=True)
class E1D0Result:
    b: float
    e0: float
    xi0: float
    f0: Profile1D
    below_threshold: bool
    xi_bracket: tuple
    dE_dxi: float


def first_moment(profile: Profile1D, xi: float) -> np.ndarray:
    """Running integral 2 int_0^x (t - xi) f(t)^2 dt at every node."""
    f = profile.values
    return 2.0 * cumulative_trapezoid((profile.t - xi) * f * f, profile.grid)


def energy_derivative(result: GL1DResult) -> float:
    """d/dxi of the minimal energy at fixed minimizer: -2 int (t - xi) f^2."""
    return float(-first_moment(result.profile, result.xi)[-1])


def e1d0(
    b: float,
    grid: Grid1D = DEFAULT_GRID,
    xi_tol: float = 1e-6,
    tol: float = 1e-10,
    *,
    theta: degennes.Theta0Result | None = None,
) -> E1D0Result:
    """Minimal 1D energy over all shifts, the minimizing shift and profile.

    Golden section over [xi_lin - 0.5, xi_lin + 0.8], then the shift is
    polished by bisection on the energy derivative, ending on the side where
    F0(t_max) = -dE/dxi is nonnegative.
    """
    b = check_b(b)
    theta = theta or degennes.theta0()
    bracket = (theta.xi_lin - 0.5, theta.xi_lin + 0.8)
    if b <= theta.theta0 + THRESHOLD_BAND:
        zero = Profile1D(grid, np.zeros(grid.n))
        return E1D0Result(b=b, e0=0.0, xi0=theta.xi_lin, f0=zero, below_threshold=True,
                          xi_bracket=bracket, dE_dxi=0.0)

    cache = {}

    def solve(x):
        key = float(x)
        if key not in cache:
            warm, hint = None, None
            if cache:
                near = cache[min(cache, key=lambda k: abs(k - key))]
                hint = near.mu1_grid
                if near.nonzero:
                    warm = near.profile.values
            cache[key] = minimize_1d(b, key, grid, tol, init=warm, shift_hint=hint)
        return cache[key]

    res = minimize_scalar(lambda x: solve(x).energy, bracket, tol=xi_tol)
    ends = [solve(x).energy for x in bracket]
    if min(ends) <= res.min_value:
        raise ConvergenceError("minimal 1D energy sits on the shift bracket edge",
                               bracket=bracket, edge_energies=ends, interior=res.min_value)

    # polish: bisect the sign change of the energy derivative and stop on the
    # side where F0(t_max) = -dE/dxi >= 0
    lo, hi = res.bracket
    width = hi - lo
    for _ in range(40):
        if energy_derivative(solve(lo)) < 0:
            break
        lo -= width
    for _ in range(40):
        if energy_derivative(solve(hi)) > 0:
            break
        hi += width
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if energy_derivative(solve(mid)) < 0:
            lo = mid
        else:
            hi = mid
    best = solve(lo)
    if not best.energy < 0:
        raise Violation("minimal 1D energy is not negative above theta0", b=b, e0=best.energy)
    return E1D0Result(b=b, e0=best.energy, xi0=best.xi, f0=best.profile,
                      below_threshold=False, xi_bracket=bracket,
                      dE_dxi=energy_derivative(best))


class GL1DSolver(BaseEstimator):
    """Estimator wrapper around the 1D functional at fixed ``b``.

    ``fit`` computes the minimal energy over shifts; ``predict`` returns the
    minimal energy at each requested shift; ``transform`` the profiles.
    """

    def __init__(self, b=0.7, t_max=16.0, n=3201, tol=1e-10, xi_tol=1e-6):
        self.b = b
        self.t_max = t_max
        self.n = n
        self.tol = tol
        self.xi_tol = xi_tol

    def _grid(self):
        return Grid1D(check_real(self.t_max, "t_max", min_val=0, include_boundaries="neither"),
                      check_positive_int(self.n, "n", min_val=3))

    def fit(self, X=None, y=None):
        self.grid_ = self._grid()
        self.result_ = e1d0(self.b, self.grid_, self.xi_tol, self.tol)
        self.e0_ = self.result_.e0
        self.xi0_ = self.result_.xi0
        return self

    def predict(self, X):
        check_is_fitted(self, "grid_")
        xi = check_parameter_vector(X, "xi")
        return np.array([minimize_1d(self.b, x, self.grid_, self.tol).energy for x in xi])

    def transform(self, X):
        check_is_fitted(self, "grid_")
        xi = check_parameter_vector(X, "xi")
        return np.vstack([minimize_1d(self.b, x, self.grid_, self.tol).profile.values
                          for x in xi])
