"""Shared numerical kernels.

Grids and trapezoidal quadrature, banded symmetric operators with a
lowest-eigenpair solver (Sturm multisection plus inverse iteration), golden
section search, and a projected descent driver with Armijo backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg as sla

from .exceptions import ConvergenceError, GridError


# --------------------------------------------------------------------------
# grids and quadrature


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, t_max] with node 0 on the boundary t = 0."""

    t_max: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 3):
            raise GridError(f"Grid1D needs n >= 3, got {self.n!r}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise GridError(f"Grid1D needs t_max > 0, got {self.t_max!r}")

    @property
    def h(self) -> float:
        return self.t_max / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refined(self, factor: int = 2) -> "Grid1D":
        """Same interval, spacing divided by ``factor``."""
        return Grid1D(self.t_max, (self.n - 1) * factor + 1)

    def with_t_max(self, t_max: float) -> "Grid1D":
        """Extend or shrink the interval keeping the spacing."""
        n = int(round(t_max / self.h)) + 1
        return Grid1D(self.h * (n - 1), n)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Trapezoid weights for an arbitrary increasing node set."""
    nodes = np.asarray(nodes, dtype=float)
    d = np.diff(nodes)
    w = np.zeros_like(nodes)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def trapezoid(values: np.ndarray, grid: Grid1D) -> float:
    """Trapezoidal integral of node samples over the grid."""
    return float(np.dot(grid.weights, values))


def cumulative_trapezoid(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Running trapezoidal integral from t = 0; entry 0 is exactly 0.

    Accumulated with Neumaier compensation, so late entries keep their
    relative accuracy even when they are tiny differences of O(1) sums.
    """
    pieces = (0.5 * grid.h * (values[1:] + values[:-1])).tolist()
    out = np.zeros(grid.n)
    total = comp = 0.0
    for i, p in enumerate(pieces, start=1):
        s = total + p
        if abs(total) >= abs(p):
            comp += (total - s) + p
        else:
            comp += (p - s) + total
        total = s
        out[i] = total + comp
    return out


@dataclass(frozen=True)
class Profile1D:
    """Real samples f(t_i) on a Grid1D; Neumann at t = 0, zero at t_max."""

    grid: Grid1D
    values: np.ndarray
    boundary: str = "neumann-at-0"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"profile needs {self.grid.n} samples, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def norm(self, p: int = 2) -> float:
        return trapezoid(np.abs(self.values) ** p, self.grid) ** (1.0 / p)

    def is_zero(self) -> bool:
        return not np.any(self.values)


# --------------------------------------------------------------------------
# banded symmetric operators and the lowest eigenpair


@dataclass(frozen=True)
class BandedSymmetricOperator:
    """Real symmetric banded matrix in LAPACK lower storage.

    ``bands[k, i]`` holds ``A[i + k, i]``; row ``k`` has ``dimension - k``
    meaningful entries, the tail is ignored. Symmetry is structural.
    """

    bands: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bands, dtype=float)
        if b.ndim != 2 or b.shape[1] < 1:
            raise ValueError("bands must be a 2D array (bandwidth + 1, dimension)")
        if not np.all(np.isfinite(b[0])):
            raise ValueError("diagonal has non-finite entries")
        object.__setattr__(self, "bands", b)

    @classmethod
    def tridiagonal(cls, diag, off) -> "BandedSymmetricOperator":
        diag = np.asarray(diag, dtype=float)
        bands = np.zeros((2, diag.size))
        bands[0] = diag
        bands[1, :-1] = off
        return cls(bands)

    @classmethod
    def from_dense(cls, a, bandwidth: int) -> "BandedSymmetricOperator":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        bands = np.zeros((bandwidth + 1, n))
        for k in range(bandwidth + 1):
            bands[k, : n - k] = np.diagonal(a, -k)
        return cls(bands)

    @property
    def dimension(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        a = np.diag(self.bands[0])
        for k in range(1, self.bandwidth + 1):
            off = self.bands[k, : n - k]
            a += np.diag(off, -k) + np.diag(off, k)
        return a

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.bands[0] * v
        n = self.dimension
        for k in range(1, self.bandwidth + 1):
            off = self.bands[k, : n - k]
            out[k:] += off * v[:-k]
            out[:-k] += off * v[k:]
        return out

    def gershgorin(self) -> tuple[float, float]:
        n = self.dimension
        radius = np.zeros(n)
        for k in range(1, self.bandwidth + 1):
            off = np.abs(self.bands[k, : n - k])
            radius[k:] += off
            radius[:-k] += off
        return float(np.min(self.bands[0] - radius)), float(np.max(self.bands[0] + radius))


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue and eigenvector, unit norm under the stated grid norm."""

    value: float
    vector: np.ndarray
    norm_kind: str = "L2-grid"
    residual: float = 0.0


def sturm_count(diag: np.ndarray, off: np.ndarray, shifts) -> np.ndarray:
    """Number of eigenvalues below each shift for a symmetric tridiagonal.

    Counts negative pivots of the LDL^T factorization of T - shift.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    tiny = np.finfo(float).tiny ** 0.5
    if shifts.size == 1:
        # scalar loop on Python floats is several times faster than numpy here
        x = float(shifts[0])
        dl = np.asarray(diag, dtype=float).tolist()
        o2 = (np.asarray(off, dtype=float) ** 2).tolist()
        q = dl[0] - x
        count = q < 0
        for di, ei in zip(dl[1:], o2):
            if q == 0.0:
                q = -tiny
            q = di - x - ei / q
            count += q < 0
        return np.array([count])
    off2 = np.asarray(off, dtype=float) ** 2
    q = diag[0] - shifts
    count = (q < 0).astype(int)
    for i in range(1, diag.size):
        q = np.where(q == 0.0, -tiny, q)
        q = diag[i] - shifts - off2[i - 1] / q
        count += q < 0
    return count


def _lowest_tridiagonal_value(diag, off, lo, hi, atol, k=127):
    # multisection: k interior shifts per sweep shrink the bracket (k+1)-fold
    while hi - lo > atol:
        shifts = np.linspace(lo, hi, k + 2)[1:-1]
        below = sturm_count(diag, off, shifts)
        first = int(np.argmax(below >= 1)) if np.any(below >= 1) else k
        new_lo = lo if first == 0 else shifts[first - 1]
        new_hi = hi if first == k else shifts[first]
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return lo, hi


def tridiagonal_eigenvalue(diag, off, index: int, atol: float = 1e-12) -> float:
    """The ``index``-th smallest eigenvalue (0-based) by Sturm bisection."""
    op = BandedSymmetricOperator.tridiagonal(diag, off)
    lo, hi = op.gershgorin()
    while hi - lo > atol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if sturm_count(op.bands[0], op.bands[1, :-1], [mid])[0] > index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _is_positive_definite(op: BandedSymmetricOperator, shift: float) -> bool:
    b = op.bands.copy()
    b[0] -= shift
    try:
        sla.cholesky_banded(b, lower=True)
    except sla.LinAlgError:
        return False
    return True


def _lowest_banded_value(op, lo, hi, atol):
    while hi - lo > atol:
        mid = 0.5 * (lo + hi)
        if _is_positive_definite(op, mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _shifted_solve(op: BandedSymmetricOperator, shift: float, y: np.ndarray) -> np.ndarray:
    n = op.dimension
    if op.bandwidth == 1:
        ab = np.zeros((3, n))
        ab[0, 1:] = op.bands[1, : n - 1]
        ab[1] = op.bands[0] - shift
        ab[2, :-1] = op.bands[1, : n - 1]
        return sla.solve_banded((1, 1), ab, y)
    b = op.bands.copy()
    b[0] -= shift
    return sla.cho_solve_banded((sla.cholesky_banded(b, lower=True), True), y)


def _below_count(op: BandedSymmetricOperator, shift: float) -> int:
    """Eigenvalues strictly below ``shift`` (exact for tridiagonal, 0/1 otherwise)."""
    n = op.dimension
    if op.bandwidth == 1:
        return int(sturm_count(op.bands[0], op.bands[1, : n - 1], [shift])[0])
    return 0 if _is_positive_definite(op, shift) else 1


def _inverse_iteration(op, shift, y, tol, max_iter):
    value, residual = np.nan, np.inf
    for _ in range(max_iter):
        y = _shifted_solve(op, shift, y)
        y /= np.linalg.norm(y)
        ay = op.matvec(y)
        value = float(y @ ay)
        residual = float(np.linalg.norm(ay - value * y))
        if residual <= tol * (abs(value) + 1):
            break
    return y, value, residual


def lowest_eigenpair(
    op: BandedSymmetricOperator,
    tol: float = 1e-10,
    *,
    weights: np.ndarray | None = None,
    shift_hint: float | None = None,
    max_iter: int = 200,
) -> EigenPair:
    """Smallest eigenvalue and eigenvector of a banded symmetric operator.

    The lowest eigenvalue is bracketed by Sturm multisection (tridiagonal)
    or by Cholesky bisection on positive definiteness (wider bands); inverse
    iteration shifted just below the bracket then gives the vector, and the
    value is its Rayleigh quotient. With ``shift_hint`` (a nearby value,
    e.g. from a neighbouring parameter) the bracketing is skipped when a
    Sturm count below the converged value certifies that it is the lowest.

    If ``weights`` are given, ``op`` is taken to be the symmetrized form
    W^{-1/2} K W^{-1/2} and the returned vector is W^{-1/2} y, normalized so
    that sum(weights * v**2) = 1.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = op.dimension
    y0 = np.ones(n) + np.linspace(0.0, 1e-3, n)
    certified = False
    if shift_hint is not None:
        shift = float(shift_hint) - 1e-3 * max(1.0, abs(shift_hint))
        try:
            y, value, residual = _inverse_iteration(op, shift, y0, tol, max_iter)
        except (sla.LinAlgError, ValueError):
            residual = np.inf
        if residual <= tol * (abs(value) + 1):
            margin = 2 * residual + 1e-13 * max(1.0, abs(value))
            certified = _below_count(op, value - margin) == 0
    if not certified:
        lo, _ = op.gershgorin()
        lo -= 1e-9 * max(1.0, abs(lo))
        hi = float(np.min(op.bands[0]))
        atol = 1e-4 * max(1.0, abs(hi - lo) * 1e-6)
        if op.bandwidth == 1:
            lo, hi = _lowest_tridiagonal_value(op.bands[0], op.bands[1, : n - 1], lo, hi, atol)
        else:
            lo, hi = _lowest_banded_value(op, lo, hi, atol)
        y, value, residual = _inverse_iteration(op, lo - atol, y0, tol, max_iter)
    if not residual <= tol * (abs(value) + 1):
        raise ConvergenceError(
            "inverse iteration did not reach the residual tolerance",
            residual=residual, value=value, iterations=max_iter,
        )

    # deterministic sign: positive at the entry of largest modulus
    if y[np.argmax(np.abs(y))] < 0:
        y = -y
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        y = y / np.sqrt(weights)
        y = y / math.sqrt(float(np.sum(weights * y * y)))
    return EigenPair(value=value, vector=y, residual=residual)


# --------------------------------------------------------------------------
# scalar minimization


@dataclass(frozen=True)
class MinimizeScalarResult:
    argmin: float
    min_value: float
    iterations: int
    bracket: tuple[float, float]


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(fn: Callable[[float], float], bracket, tol: float = 1e-8,
                    max_iter: int = 500) -> MinimizeScalarResult:
    """Golden section search on ``bracket`` until its width is below ``tol``."""
    a, b = (float(v) for v in bracket)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"bracket endpoints must be finite, got {bracket!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a > b:
        a, b = b, a
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
        it += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return MinimizeScalarResult(argmin=x, min_value=float(fx), iterations=it, bracket=(a, b))


# --------------------------------------------------------------------------
# projected descent


def _inner(a, b) -> float:
    return float(np.vdot(a, b).real)


class SteepestDescent:
    """Negative gradient direction, optionally preconditioned."""

    def __init__(self, precondition: Callable | None = None):
        self.precondition = precondition

    def reset(self):
        pass

    def direction(self, x, g):
        return -g if self.precondition is None else -self.precondition(x, g)

    def update(self, s, y):
        pass


class LBFGS:
    """Limited-memory BFGS two-loop direction."""

    def __init__(self, memory: int = 10):
        self.memory = memory
        self.pairs = []

    def reset(self):
        self.pairs = []

    def direction(self, x, g):
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * _inner(s, q)
            alphas.append(a)
            q -= a * y
        if self.pairs:
            s, y, _ = self.pairs[-1]
            q *= _inner(s, y) / _inner(y, y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            bcoef = rho * _inner(y, q)
            q += (a - bcoef) * s
        return -q

    def update(self, s, y):
        sy = _inner(s, y)
        if sy > 1e-12 * math.sqrt(_inner(s, s) * _inner(y, y)):
            self.pairs.append((s, y, 1.0 / sy))
            if len(self.pairs) > self.memory:
                self.pairs.pop(0)


@dataclass
class DescentResult:
    x: np.ndarray
    energy: float
    residual: float
    iterations: int
    history: list = field(default_factory=list)


def projected_gradient_descent(
    energy: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    init: np.ndarray,
    step_policy="armijo",
    tol: float = 1e-8,
    *,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    residual: Callable[[np.ndarray, np.ndarray], float] | None = None,
    energy_delta: Callable[[np.ndarray, np.ndarray], float] | None = None,
    max_iter: int = 10_000,
    armijo: float = 1e-4,
    min_step: float = 1e-20,
) -> DescentResult:
    """Minimize ``energy`` by projected descent with Armijo backtracking.

    ``step_policy`` is "armijo" (steepest descent), "lbfgs", or an object
    with ``direction(x, g)``, ``update(s, y)`` and ``reset()``. Each trial
    step starts at 1.0 and is halved until the projected Armijo condition
    holds; accepted steps never increase the energy. Stops when
    ``residual(x, g) <= tol`` (default: sup-norm of the gradient).

    ``energy_delta(x, x_new)``, when given, returns E(x_new) - E(x) computed
    without cancellation; the Armijo test then stays meaningful after the
    energy itself has converged to round-off.
    """
    if step_policy == "armijo":
        policy = SteepestDescent()
    elif step_policy == "lbfgs":
        policy = LBFGS()
    elif hasattr(step_policy, "direction"):
        policy = step_policy
    else:
        raise ValueError(f"unknown step policy {step_policy!r}")
    proj = project if project is not None else (lambda v: v)
    res_fn = residual if residual is not None else (lambda x, g: float(np.max(np.abs(g))))

    x = proj(np.array(init, copy=True))
    e = float(energy(x))
    g = gradient(x)
    r = res_fn(x, g)
    history = [e]
    fallback = False
    for it in range(max_iter):
        if r <= tol:
            return DescentResult(x, e, r, it, history)
        d = policy.direction(x, g) if not fallback else -g
        slope = _inner(g, d)
        if not slope < 0:
            policy.reset()
            d = -g
        step = 1.0
        while True:
            x_new = proj(x + step * d)
            decrease = _inner(g, x_new - x)
            if energy_delta is not None:
                delta = float(energy_delta(x, x_new))
                if delta <= armijo * decrease:
                    e_new = float(energy(x_new))
                    break
                e_new = e + delta
            else:
                e_new = float(energy(x_new))
                if e_new <= e + armijo * decrease:
                    break
            # round-off floor: the predicted change is below what float can resolve
            if e_new <= e and abs(decrease) < 64 * np.finfo(float).eps * max(abs(e), 1e-300):
                break
            step *= 0.5
            if step < min_step:
                break
        if step < min_step:
            if not fallback:
                fallback = True
                policy.reset()
                continue
            raise ConvergenceError(
                "line search step underflow before the tolerance was reached",
                x=x, energy=e, residual=r, iterations=it,
            )
        fallback = False
        g_new = gradient(x_new)
        policy.update(x_new - x, g_new - g)
        x, e, g = x_new, e_new, g_new
        r = res_fn(x, g)
        history.append(e)
    if r <= tol:
        return DescentResult(x, e, r, max_iter, history)
    raise ConvergenceError(
        "projected descent hit the iteration cap",
        x=x, energy=e, residual=r, iterations=max_iter,
    )


def gradient_check(energy, gradient, x, rng, n_dirs: int = 3, eps: float = 1e-6) -> float:
    """Worst relative mismatch between central differences and the gradient."""
    g = gradient(x)
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.standard_normal(x.shape)
        if np.iscomplexobj(x):
            d = d + 1j * rng.standard_normal(x.shape)
        d /= np.linalg.norm(d)
        fd = (energy(x + eps * d) - energy(x - eps * d)) / (2 * eps)
        an = _inner(g, d)
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-12))
    return worst
