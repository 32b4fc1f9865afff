"""The half-line harmonic oscillator -d^2/dt^2 + (t - xi)^2 with Neumann at 0.

Its lowest eigenvalue mu1(xi) as a function of the shift, and the minimum
of that curve (value theta0, location xi_lin).

Discretization: the quadratic form
    sum_i (u[i+1] - u[i])^2 / h + sum_i w_i (t_i - xi)^2 u_i^2
with trapezoid weights w (half weight at t = 0) and u = 0 at t_max. This is
the three-point stencil with a mirror ghost node at t = 0, so Neumann is
natural and the matrix is symmetric after scaling by w^{-1/2}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_parameter_vector, check_positive_int, check_real
from .exceptions import ConvergenceError, GridError
from .numcore import (
    BandedSymmetricOperator,
    Grid1D,
    Profile1D,
    lowest_eigenpair,
    minimize_scalar,
    tridiagonal_eigenvalue,
)

log = logging.getLogger(__name__)

DEFAULT_GRID = Grid1D(12.0, 2400)
XI_BRACKET = (0.2, 1.6)
WELL_MARGIN = 8.0


def check_grid_for_shift(xi: float, grid: Grid1D) -> None:
    if grid.t_max < xi + WELL_MARGIN:
        raise GridError(
            f"t_max = {grid.t_max} too small for xi = {xi}; need t_max >= {xi + WELL_MARGIN}"
        )


def operator(xi: float, grid: Grid1D) -> tuple[BandedSymmetricOperator, np.ndarray]:
    """Symmetrized tridiagonal matrix on the free nodes and their weights."""
    t = grid.nodes[:-1]
    w = grid.weights[:-1]
    h = grid.h
    stiff = np.full(t.size, 2.0 / h)
    stiff[0] = 1.0 / h
    diag = stiff / w + (t - xi) ** 2
    off = -1.0 / (h * np.sqrt(w[:-1] * w[1:]))
    return BandedSymmetricOperator.tridiagonal(diag, off), w


@dataclass(frozen=True)
class SpectralCurvePoint:
    """One point of the curve xi -> mu1(xi).

    ``mu1`` is the Richardson combination of the grid and half-grid
    eigenvalues when extrapolation is on; ``mu1_grid`` is always the raw
    lowest eigenvalue of the discrete operator on ``eigfn.grid``.
    """

    xi: float
    mu1: float
    eigfn: Profile1D
    mu1_grid: float
    neumann_residual: float


def _raw_pair(xi, grid, tol, shift_hint):
    op, w = operator(xi, grid)
    pair = lowest_eigenpair(op, tol, weights=w, shift_hint=shift_hint)
    u = np.append(pair.vector, 0.0)
    # ghost-node Neumann defect: one-sided slope minus its second-order correction
    h = grid.h
    defect = (u[1] - u[0]) / h - 0.5 * h * (xi**2 - pair.value) * u[0]
    return pair.value, u, abs(defect)


def mu1(
    xi: float,
    grid: Grid1D = DEFAULT_GRID,
    *,
    extrapolate: bool = True,
    tol: float = 1e-10,
    shift_hint: float | None = None,
) -> SpectralCurvePoint:
    """Lowest eigenvalue of the discretized operator at shift ``xi``."""
    xi = check_real(xi, "xi")
    check_grid_for_shift(xi, grid)
    value, u, defect = _raw_pair(xi, grid, tol, shift_hint)
    best = value
    if extrapolate:
        fine, _, _ = _raw_pair(xi, grid.refined(2), tol, value)
        best = (4.0 * fine - value) / 3.0
    return SpectralCurvePoint(xi=xi, mu1=best, eigfn=Profile1D(grid, u), mu1_grid=value,
                              neumann_residual=defect)


def lowest_two(xi: float, grid: Grid1D = DEFAULT_GRID) -> tuple[float, float]:
    """First and second discrete eigenvalues, by Sturm bisection."""
    op, _ = operator(xi, grid)
    d, e = op.bands[0], op.bands[1, :-1]
    return tridiagonal_eigenvalue(d, e, 0), tridiagonal_eigenvalue(d, e, 1)


@dataclass(frozen=True)
class Theta0Result:
    theta0: float
    xi_lin: float
    t_max: float
    n: int
    xi_tol: float
    extrapolated: bool
    scan_xi: tuple
    scan_mu1: tuple


def theta0(
    grid: Grid1D = DEFAULT_GRID,
    xi_tol: float = 1e-6,
    *,
    bracket: tuple[float, float] = XI_BRACKET,
    extrapolate: bool = True,
    scan_points: int = 15,
) -> Theta0Result:
    """Minimize xi -> mu1(xi) by golden section over ``bracket``.

    A coarse scan first checks that the bracket holds an interior minimum
    with a single descent-then-ascent pattern.
    """
    xi_tol = check_real(xi_tol, "xi_tol", min_val=0, include_boundaries="neither")
    lo, hi = bracket
    check_grid_for_shift(hi, grid)
    xs = np.linspace(lo, hi, scan_points)
    mus = []
    hint = None
    for x in xs:
        p = mu1(x, grid, extrapolate=False, shift_hint=hint)
        hint = p.mu1_grid
        mus.append(p.mu1)
    mus = np.array(mus)
    k = int(np.argmin(mus))
    steps = np.sign(np.diff(mus))
    unimodal = np.all(steps[:k] <= 0) and np.all(steps[k:] >= 0)
    log.info("theta0 bracket scan: xi=%s mu1=%s", xs.tolist(), mus.tolist())
    if k in (0, scan_points - 1) or not unimodal:
        raise ConvergenceError(
            "mu1 has no single interior minimum on the search bracket",
            scan_xi=xs.tolist(), scan_mu1=mus.tolist(),
        )

    state = {"hint": float(mus[k])}

    def curve(x):
        p = mu1(x, grid, extrapolate=extrapolate, shift_hint=state["hint"])
        state["hint"] = p.mu1_grid
        return p.mu1

    res = minimize_scalar(curve, (xs[k - 1], xs[k + 1]), tol=xi_tol)
    return Theta0Result(
        theta0=res.min_value, xi_lin=res.argmin, t_max=grid.t_max, n=grid.n,
        xi_tol=xi_tol, extrapolated=extrapolate,
        scan_xi=tuple(xs.tolist()), scan_mu1=tuple(mus.tolist()),
    )


class DeGennesSolver(BaseEstimator):
    """Estimator wrapper: ``fit`` locates theta0, ``predict`` evaluates mu1.

    Parameters
    ----------
    t_max, n : truncation length and node count of the half-line grid.
    xi_tol : golden-section tolerance on the minimizing shift.
    extrapolate : Richardson-combine grid and half-grid eigenvalues.
    """

    def __init__(self, t_max=12.0, n=2400, xi_tol=1e-6, extrapolate=True):
        self.t_max = t_max
        self.n = n
        self.xi_tol = xi_tol
        self.extrapolate = extrapolate

    def _grid(self):
        return Grid1D(check_real(self.t_max, "t_max", min_val=0, include_boundaries="neither"),
                      check_positive_int(self.n, "n", min_val=3))

    def fit(self, X=None, y=None):
        self.grid_ = self._grid()
        self.result_ = theta0(self.grid_, self.xi_tol, extrapolate=self.extrapolate)
        self.theta0_ = self.result_.theta0
        self.xi_lin_ = self.result_.xi_lin
        return self

    def predict(self, X):
        """mu1 at each shift in ``X``."""
        check_is_fitted(self, "grid_")
        xi = check_parameter_vector(X, "xi")
        out = np.empty_like(xi)
        hint = None
        for i, x in enumerate(xi):
            p = mu1(x, self.grid_, extrapolate=self.extrapolate, shift_hint=hint)
            hint = p.mu1_grid
            out[i] = p.mu1
        return out

    def transform(self, X):
        """Eigenfunction samples, one row per shift in ``X``."""
        check_is_fitted(self, "grid_")
        xi = check_parameter_vector(X, "xi")
        return np.vstack([mu1(x, self.grid_, extrapolate=False).eigfn.values for x in xi])
