"""Independent reference computations used by the tests and ``verify-all``.

Nothing here is on the main computational path. Each oracle deliberately
uses a different discretization or method than the production code:

* the half-line eigenvalue on a cell-centred grid (mirror ghost cell at 0),
  solved with LAPACK's tridiagonal eigensolver and Richardson-extrapolated;
* a shooting method for the 1D Euler-Lagrange equation, started deep in the
  Gaussian tail from parabolic cylinder data and integrated inward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal


# --------------------------------------------------------------------------
# lowest eigenvalue of -u'' + (t - xi)^2 u, u'(0) = 0, cell-centred grid


def cell_centred_mu1(xi: float, h: float, t_max: float = 12.0) -> float:
    n = int(round(t_max / h))
    t = (np.arange(n) + 0.5) * h
    diag = 2.0 / h**2 + (t - xi) ** 2
    diag[0] -= 1.0 / h**2  # mirror cell: u_{-1} = u_0
    off = np.full(n - 1, -1.0 / h**2)
    return float(eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                                  select_range=(0, 0))[0])


def richardson_mu1(xi: float, h: float, t_max: float = 12.0) -> float:
    coarse = cell_centred_mu1(xi, h, t_max)
    fine = cell_centred_mu1(xi, h / 2, t_max)
    return (4.0 * fine - coarse) / 3.0


def theta0_dense_scan(h: float = 0.01, t_max: float = 12.0, lo: float = 0.70,
                      hi: float = 0.84, step: float = 1e-3) -> dict:
    """Dense scan of the extrapolated curve, minimum refined by a local parabola."""
    xs = np.arange(lo, hi + 0.5 * step, step)
    mus = np.array([richardson_mu1(x, h, t_max) for x in xs])
    k = int(np.argmin(mus))
    a, b, c = np.polyfit(xs[k - 2:k + 3] - xs[k], mus[k - 2:k + 3], 2)
    x_star = xs[k] - b / (2 * a)
    return {
        "theta0": float(richardson_mu1(x_star, h, t_max)),
        "xi_lin": float(x_star),
        "h": h, "t_max": t_max, "scan_step": step,
        "method": "cell-centred FD, LAPACK tridiagonal eigensolver, Richardson h and h/2, "
                  "dense xi scan plus local parabola",
    }


def load_fixture(name: str) -> dict:
    with resources.files("glsurface.data").joinpath(name).open() as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# shooting method for -f'' + (t - xi)^2 f = b (1 - f^2) f, f'(0) = 0


@dataclass(frozen=True)
class ShootingSolution:
    t: np.ndarray
    f: np.ndarray
    amplitude: float
    slope_at_zero: float


def _tail_data(b: float, xi: float, t_end: float):
    # decaying solution of the linearized equation: D_v(sqrt(2)(t - xi)), v = (b - 1)/2
    v = 0.5 * (b - 1.0)
    d, dp = special.pbdv(v, np.sqrt(2.0) * (t_end - xi))
    return d, np.sqrt(2.0) * dp


def _shoot(b, xi, log_amp, t_end, t_eval=None):
    d, dp = _tail_data(b, xi, t_end)
    amp = np.exp(log_amp)
    y0 = [amp * d, amp * dp]

    def rhs(t, y):
        f, g = y
        return [g, ((t - xi) ** 2 - b + b * f * f) * f]

    sol = solve_ivp(rhs, (t_end, 0.0), y0, method="DOP853", rtol=1e-13, atol=1e-300,
                    t_eval=t_eval, dense_output=False)
    return sol


def shooting_profile(b: float, xi: float, t: np.ndarray, tail: float = 7.0) -> ShootingSolution:
    """Positive solution sampled at the increasing nodes ``t``.

    The inward integration starts at ``xi + tail`` where the profile is
    ~1e-11 and the cubic term is negligible; the amplitude of the tail data
    is found by bisection on the sign of f'(0).
    """
    t_end = xi + tail

    def slope(log_amp):
        sol = _shoot(b, xi, log_amp, t_end)
        return sol.y[1, -1], sol.y[0]

    grid = np.linspace(-5.0, 15.0, 81)
    vals = [slope(a) for a in grid]
    root = None
    for (a0, (s0, f0)), (a1, (s1, _)) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if np.sign(s0) != np.sign(s1):
            root = (a0, a1, s0)
            break
    if root is None:
        raise RuntimeError("no sign change of f'(0) over the amplitude scan")
    lo, hi, s_lo = root
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        s_mid, _ = slope(mid)
        if np.sign(s_mid) == np.sign(s_lo):
            lo, s_lo = mid, s_mid
        else:
            hi = mid
    log_amp = 0.5 * (lo + hi)
    inside = t[t < t_end]
    sol = _shoot(b, xi, log_amp, t_end, t_eval=inside[::-1])
    f = np.zeros_like(t, dtype=float)
    f[: inside.size] = sol.y[0][::-1]
    d, _ = _tail_data(b, xi, t[t >= t_end]) if np.any(t >= t_end) else (None, None)
    if d is not None:
        f[inside.size:] = np.exp(log_amp) * d
    return ShootingSolution(t=t, f=f, amplitude=float(np.exp(log_amp)),
                            slope_at_zero=float(slope(log_amp)[0]))
