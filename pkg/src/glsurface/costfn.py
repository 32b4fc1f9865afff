"""The auxiliary functions F0(x) = 2 int_0^x (y - xi0) f0(y)^2 dy and
K0 = f0^2 + F0 built from the optimal 1D profile, with their sign checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import Violation
from .gl1d import E1D0Result
from .numcore import Grid1D, Profile1D, cumulative_trapezoid

TAIL_BAND = 2.0
TAIL_TOL = 1e-13


@dataclass(frozen=True)
class CostFunctions:
    grid: Grid1D
    f0: Profile1D
    F0: np.ndarray
    K0: np.ndarray
    b: float
    xi0: float


def cost_functions_from_profile(f0: Profile1D, xi0: float, b: float = float("nan")) -> CostFunctions:
    """F0 by cumulative trapezoid (F0[0] = 0 exactly) and K0 pointwise."""
    f2 = f0.values ** 2
    F0 = 2.0 * cumulative_trapezoid((f0.t - xi0) * f2, f0.grid)
    F0[0] = 0.0
    return CostFunctions(grid=f0.grid, f0=f0, F0=F0, K0=f2 + F0, b=b, xi0=xi0)


def build_cost_functions(result: E1D0Result) -> CostFunctions:
    if result.below_threshold or result.f0.is_zero():
        raise ValueError("cost functions need a nonzero optimal profile (b above theta0)")
    return cost_functions_from_profile(result.f0, result.xi0, result.b)


@dataclass(frozen=True)
class SignReport:
    F0_max_interior: float
    F0_argmax_t: float
    F0_end: float
    K0_min: float
    K0_argmin_t: float
    interior_nodes: int
    tail_nodes: int


def verify_signs(cf: CostFunctions, tail_tol: float = TAIL_TOL,
                 band: float = TAIL_BAND) -> SignReport:
    """F0 < 0 on the interior, K0 > 0 everywhere.

    The strict sign of F0 is tested on nodes 0 < t; a node counts as tail,
    where only |F0| <= tail_tol is required, when it lies within ``band`` of
    t_max or when both |F0| and f0^2 have dropped below ``tail_tol`` (there
    the sign of F0 is the sign of a round-off-sized constant).
    """
    t = cf.grid.nodes
    f2 = cf.f0.values ** 2
    small = (np.abs(cf.F0) <= tail_tol) & (f2 <= tail_tol)
    beyond = np.zeros_like(small)
    if np.any(small):
        # tail = everything past the first node from which the profile stays negligible
        last_big = np.flatnonzero(~small)
        start = last_big[-1] + 1 if last_big.size else 0
        beyond[start:] = True
    tail = (t > cf.grid.t_max - band) | beyond
    interior = (t > 0) & ~tail

    if np.any(cf.F0[interior] >= 0):
        k = np.flatnonzero(interior)[int(np.argmax(cf.F0[interior]))]
        raise Violation("F0 is not negative on the interior", node=int(k), t=float(t[k]),
                        F0=float(cf.F0[k]), b=cf.b)
    if np.any(np.abs(cf.F0[tail]) > tail_tol):
        k = np.flatnonzero(tail)[int(np.argmax(np.abs(cf.F0[tail])))]
        raise Violation("F0 does not vanish in the truncation tail", node=int(k),
                        t=float(t[k]), F0=float(cf.F0[k]), b=cf.b)
    if np.any(cf.K0 <= 0):
        k = int(np.argmin(cf.K0))
        raise Violation("K0 is not positive", node=k, t=float(t[k]), K0=float(cf.K0[k]),
                        b=cf.b)
    ki = np.flatnonzero(interior)
    kmax = ki[int(np.argmax(cf.F0[ki]))] if ki.size else 0
    kmin = int(np.argmin(cf.K0))
    return SignReport(
        F0_max_interior=float(cf.F0[kmax]), F0_argmax_t=float(t[kmax]),
        F0_end=float(cf.F0[-1]), K0_min=float(cf.K0[kmin]), K0_argmin_t=float(t[kmin]),
        interior_nodes=int(interior.sum()), tail_nodes=int(tail.sum()),
    )
