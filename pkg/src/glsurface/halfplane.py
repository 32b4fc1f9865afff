"""The Neumann magnetic Laplacian on the half-plane,

    L(nu) = -d1^2 - d2^2 + (-x1 cos nu + x2 sin nu)^2,   x1 > 0,

its ground state zeta(nu) with eigenfunction, and 3D states built from it.

Grids. The well sits on the line x2 = x1 cot nu. For small nu the ground
state hugs the boundary and a rectangle in (x1, x2) suffices. For larger nu
it spreads along the well, so the grid uses the sheared coordinates
(u1, y) = (x1, x2 - x1 cot nu), in which the well is the line y = 0 and the
potential is sin(nu)^2 y^2. Along u1 the mesh is uniform near the boundary
and grows geometrically further out, where the state is a slowly decaying
exponential times a Gaussian in y.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_parameter_vector, check_real
from .linkform import AssembledForm, Axis, StructuredGrid, assemble

log = logging.getLogger(__name__)

THETA0 = 0.5901061249536643  # refreshed by tests against degennes.theta0
XI_LIN = 0.7681841899978016
SHEAR_SWITCH = 2.0
ESSENTIAL_MARGIN = 1e-4
DEFAULT_H = 0.05
EDGE_TOL = 1e-7
MAX_EXTENT = 5000.0


def check_angle(nu: float, *, closed: bool = True) -> float:
    return check_real(nu, "nu", min_val=0.0, max_val=np.pi / 2,
                      include_boundaries="both" if closed else "neither")


@dataclass(frozen=True)
class HalfPlaneGrid:
    """Tensor grid for L(nu).

    Nodes are (u1, y) with x1 = u1 and x2 = y + shear * u1; ``shear`` is 0
    for a plain rectangle. ``x2_min``/``x2_max`` bound the y coordinate.
    The u1 spacing is ``h`` up to ``uniform_until`` and then grows by
    ``growth`` per cell up to ``h_max``. Neumann at u1 = 0, Dirichlet on the
    three artificial edges.
    """

    x1_max: float
    x2_min: float
    x2_max: float
    h: float = DEFAULT_H
    shear: float = 0.0
    uniform_until: float | None = None
    growth: float = 1.05
    h_max: float = 0.5

    @cached_property
    def x1_nodes(self) -> np.ndarray:
        end = self.x1_max if self.uniform_until is None else min(self.uniform_until, self.x1_max)
        n = max(int(round(end / self.h)), 2)
        nodes = list(np.linspace(0.0, n * self.h, n + 1))
        step = self.h
        while nodes[-1] < self.x1_max - 1e-12:
            step = min(step * self.growth, self.h_max)
            nodes.append(min(nodes[-1] + step, self.x1_max)
                         if self.x1_max - nodes[-1] > 1.5 * step else self.x1_max)
        return np.array(nodes)

    @cached_property
    def y_nodes(self) -> np.ndarray:
        n = max(int(round((self.x2_max - self.x2_min) / self.h)), 2)
        return np.linspace(self.x2_min, self.x2_max, n + 1)

    @property
    def n1(self) -> int:
        return self.x1_nodes.size

    @property
    def n2(self) -> int:
        return self.y_nodes.size

    @property
    def h1(self) -> float:
        return float(self.x1_nodes[1] - self.x1_nodes[0])

    @property
    def h2(self) -> float:
        return float(self.y_nodes[1] - self.y_nodes[0])

    @cached_property
    def structured(self) -> StructuredGrid:
        frame = np.array([[1.0, 0.0], [self.shear, 1.0]])
        return StructuredGrid(
            (Axis(self.x1_nodes, "neumann", "dirichlet"),
             Axis(self.y_nodes, "dirichlet", "dirichlet")),
            frame,
        )

    def physical(self) -> tuple[np.ndarray, np.ndarray]:
        u1, y = np.meshgrid(self.x1_nodes, self.y_nodes, indexing="ij")
        return u1, y + self.shear * u1

    def scaled(self, factor: float) -> "HalfPlaneGrid":
        """Grid with every artificial edge pushed ``factor`` times further out
        from the well (same spacing near the boundary)."""
        c = 0.5 * (self.x2_min + self.x2_max)
        half = 0.5 * (self.x2_max - self.x2_min) * factor
        return replace(self, x2_min=c - half, x2_max=c + half, x1_max=self.x1_max * factor)

    @classmethod
    def for_angle(cls, nu: float, h: float = DEFAULT_H, *, zeta_hint: float | None = None,
                  tail: float = 18.0) -> "HalfPlaneGrid":
        """Default grid for angle ``nu``.

        ``zeta_hint`` (a rough value of zeta) sets how far the sheared grid
        reaches along the well: the state decays like exp(-k u1) there with
        k = sqrt(1 - zeta) / sin(nu), and the grid extends ``tail``/k past the
        boundary layer.
        """
        nu = check_angle(nu, closed=False)
        s, c = np.sin(nu), np.cos(nu)
        cot = c / s
        if cot >= SHEAR_SWITCH:
            centre = XI_LIN / (np.tan(nu) * np.sqrt(c))
            half = 12.0 + 8.0 / np.sqrt(s)
            return cls(x1_max=14.0, x2_min=centre - half, x2_max=centre + half, h=h)
        zh = 0.9 if zeta_hint is None else min(zeta_hint, 1.0 - 1e-6)
        k = np.sqrt(1.0 - zh) / s
        y_half = 6.0 + 6.0 / np.sqrt(s)
        return cls(x1_max=10.0 + tail / k, x2_min=-y_half, x2_max=y_half, h=h, shear=cot,
                   uniform_until=10.0, growth=1.05, h_max=max(4 * h, min(0.25 / k, 8.0)))


def potential(nu: float):
    s, c = np.sin(nu), np.cos(nu)
    return lambda x: (-x[..., 0] * c + x[..., 1] * s) ** 2


def assemble_operator(nu: float, grid: HalfPlaneGrid) -> AssembledForm:
    return assemble(grid.structured, potential=potential(nu))


@dataclass(frozen=True)
class EigenPair2D:
    """Ground state of L(nu) on a grid.

    ``phi`` holds nodal values on the full grid (zeros on Dirichlet edges),
    nonnegative, with unit discrete L2 norm. ``flag`` is "computed",
    "analytic-endpoint" (nu = pi/2) or "delegated" (nu = 0, value theta0).
    """

    zeta: float
    phi: np.ndarray | None
    grid: HalfPlaneGrid | None
    nu: float
    residual: float = 0.0
    neumann_residual: float = 0.0
    edge_decay: float = 0.0
    flag: str = "computed"
    form: AssembledForm | None = field(default=None, repr=False, compare=False)

    def rayleigh(self) -> float:
        v = self.form.from_full(self.phi)
        return self.form.quadratic(v) / self.form.l2(v)


def boundary_residuals(form: AssembledForm, psi_full: np.ndarray, lam: float) -> tuple:
    """Sup of |(K - lam M) psi| per unit measure over all free nodes and over
    the x1 = 0 row, where it is the discrete conormal (Neumann) defect."""
    v = form.from_full(psi_full)
    r = form.matrix @ v - lam * form.mass * v
    full = form.to_full(r)
    mass = form.to_full(form.mass.astype(float))
    grid = form.grid
    h1 = grid.axes[0].nodes[1] - grid.axes[0].nodes[0]
    dens = np.zeros(full.shape)
    free = mass > 0
    dens[free] = np.abs(full[free]) / mass[free]
    scale = np.max(np.abs(psi_full))
    # boundary row: defect per unit boundary length = row residual / (transverse weight)
    row0 = np.abs(full[0]) / np.where(free[0], mass[0] / (0.5 * h1), 1.0)
    return float(dens.max() / scale), float(row0.max() / scale)


def edge_decay(phi: np.ndarray, width: int = 3) -> float:
    """Largest |phi| within ``width`` nodes of an artificial edge, relative to sup |phi|."""
    a = np.abs(phi)
    ring = np.concatenate([a[-width:].ravel(), a[:, :width].ravel(), a[:, -width:].ravel()])
    return float(ring.max() / a.max())


def _solve(form: AssembledForm, sigma: float, tol: float):
    d = 1.0 / np.sqrt(form.mass)
    S = sparse.diags(d) @ form.matrix @ sparse.diags(d)
    S = S.tocsc()
    vals, vecs = eigsh(S, k=1, sigma=sigma, which="LM", tol=tol)
    return float(vals[0]), vecs[:, 0] * d


def zeta(nu: float, grid: HalfPlaneGrid | None = None, tol: float = 1e-12, *,
         sigma: float | None = None, edge_tol: float = EDGE_TOL) -> EigenPair2D:
    """Lowest eigenvalue and nonnegative ground state of L(nu).

    At nu = 0 the value is theta0 (the problem reduces to the half-line), at
    nu = pi/2 it is 1; both are returned with a flag and no eigenfunction.
    Without an explicit grid the sheared extent is sized from a coarse solve
    and then grown until the state at the far edge is below ``edge_tol``
    relative to its maximum.
    """
    nu = check_angle(nu)
    if nu == 0.0:
        return EigenPair2D(zeta=THETA0, phi=None, grid=None, nu=0.0, flag="delegated")
    if nu == np.pi / 2:
        return EigenPair2D(zeta=1.0, phi=None, grid=None, nu=nu, flag="analytic-endpoint")
    adaptive = grid is None
    if adaptive:
        grid, z_coarse = _initial_grid(nu)
        if sigma is None:
            sigma = z_coarse - 0.02 * (1.0 - z_coarse) - 1e-3
    pair = _pair_on(nu, grid, tol, THETA0 - 0.05 if sigma is None else sigma)
    while adaptive and grid.shear and pair.edge_decay > edge_tol and grid.x1_max < MAX_EXTENT:
        # the tail is exponential in u1: extrapolate the extent that reaches edge_tol
        grow = 1.1 * np.log(edge_tol) / np.log(min(pair.edge_decay, 0.5))
        grid = replace(grid, x1_max=grid.x1_max * float(np.clip(grow, 1.3, 4.0)))
        log.info("zeta(%s): edge amplitude %.2e, extending the grid to x1 = %.1f",
                 nu, pair.edge_decay, grid.x1_max)
        pair = _pair_on(nu, grid, tol, sigma)
    if pair.zeta >= 1.0 - ESSENTIAL_MARGIN:
        warnings.warn(f"zeta({nu}) = {pair.zeta} is within {ESSENTIAL_MARGIN} of the essential "
                      "spectrum; the discrete ground state may be a truncation artifact",
                      RuntimeWarning, stacklevel=2)
    return pair


def _pair_on(nu, grid, tol, sigma):
    form = assemble_operator(nu, grid)
    lam, v = _solve(form, sigma, tol)
    full = form.to_full(v)
    k = np.unravel_index(np.argmax(np.abs(full)), full.shape)
    full = full * np.sign(full[k])
    full = full / np.sqrt(form.l2(form.from_full(full)))
    if full.min() < -1e-8 * full.max():
        log.warning("ground state of L(%s) changes sign (min %.3e)", nu, full.min())
    else:
        full = np.maximum(full, 0.0)
    res, neu = boundary_residuals(form, full, lam)
    return EigenPair2D(zeta=lam, phi=full, grid=grid, nu=nu, residual=res,
                       neumann_residual=neu, edge_decay=edge_decay(full), form=form)


def _initial_grid(nu: float, h: float = DEFAULT_H) -> tuple[HalfPlaneGrid, float]:
    grid = HalfPlaneGrid.for_angle(nu, h)
    if grid.shear == 0.0:
        return grid, THETA0
    coarse = HalfPlaneGrid.for_angle(nu, 0.1, zeta_hint=0.9999)
    z = _solve(assemble_operator(nu, coarse), THETA0 - 0.05, 1e-8)[0]
    return HalfPlaneGrid.for_angle(nu, h, zeta_hint=z), z


def default_grid(nu: float, h: float = DEFAULT_H) -> HalfPlaneGrid:
    """The grid ``zeta`` settles on when none is given."""
    return zeta(check_angle(nu, closed=False), None).grid if h == DEFAULT_H else \
        _initial_grid(nu, h)[0]


# --------------------------------------------------------------------------
# 3D states phi3d(x) = F^{-1}[xi3 -> f(xi3) phi2d(x1, x2 - xi3 / sin nu)](x3)


@dataclass(frozen=True)
class SpectralWeight:
    """A real weight f on [-support, support], vanishing outside."""

    support: float
    fn: object
    label: str = "custom"

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        inside = np.abs(xi) < self.support
        out[inside] = self.fn(xi[inside])
        return out

    @classmethod
    def from_samples(cls, xi, values) -> "SpectralWeight":
        from scipy.interpolate import CubicSpline

        xi = np.asarray(xi, dtype=float)
        spline = CubicSpline(xi, np.asarray(values, dtype=float))
        return cls(support=float(np.max(np.abs(xi))), fn=spline, label="samples")


def bump_weight(support: float = 4.5, width: float = 0.5) -> SpectralWeight:
    """Gaussian of the given width times the standard bump exp(1 - 1/(1 - s^2)),
    s = xi/support. Smooth with compact support; the Gaussian factor makes
    the state decay like exp(-(width x3)^2 / 2) along x3 and the bump keeps
    the support exact."""
    def fn(xi):
        s = xi / support
        return np.exp(-0.5 * (xi / width) ** 2) * np.exp(1.0 - 1.0 / (1.0 - s * s))

    return SpectralWeight(support=support, fn=fn,
                          label=f"gaussian(width={width})*bump(support={support})")


DEFAULT_WEIGHT = bump_weight()


@dataclass(frozen=True)
class Field3D:
    """Complex field on (u1, y, x3) nodes, x1 = u1, x2 = y + shear u1.

    Neumann at u1 = 0, zero on the last u1 node and on both y edges,
    periodic in x3 with the given period.
    """

    values: np.ndarray
    x1: np.ndarray
    y: np.ndarray
    shear: float
    x3: np.ndarray
    period: float
    nu: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def h3(self) -> float:
        return self.period / self.x3.size

    @cached_property
    def plane(self) -> StructuredGrid:
        return StructuredGrid(
            (Axis(self.x1, "neumann", "dirichlet"), Axis(self.y, "dirichlet", "dirichlet")),
            np.array([[1.0, 0.0], [self.shear, 1.0]]),
        )

    def a3(self) -> np.ndarray:
        """Third component of the potential at the plane nodes."""
        pos = self.plane.positions()
        return -pos[..., 0] * np.cos(self.nu) + pos[..., 1] * np.sin(self.nu)

    def l2(self) -> float:
        w = self.plane.weights()[..., None]
        return float(np.sum(w * np.abs(self.values) ** 2) * self.h3)


def _crop(phi, rel):
    """Index bounds of the box outside which |phi| < rel * max."""
    a = np.abs(phi) >= rel * np.abs(phi).max()
    rows = np.flatnonzero(a.any(axis=1))
    cols = np.flatnonzero(a.any(axis=0))
    return rows[-1] + 2, max(cols[0] - 1, 0), cols[-1] + 2


def synthesize_phi3d(pair: EigenPair2D, f_weight: SpectralWeight | None = None, *,
                     period: float = 28.0, n3: int | None = None,
                     crop: float = 1e-10) -> Field3D:
    """Sample phi3d on the plane grid of ``pair`` times a periodic x3 axis.

    The frequency step is chosen so that every shift xi/sin(nu) is a whole
    number of y cells (no interpolation); the x3 period is then the nearest
    admissible value to ``period``. Convention: the inverse transform uses
    the kernel exp(-i x3 xi), under which the shift x2 - xi/sin(nu) pairs
    with (-i d3 + A3). The plane grid is trimmed where |phi2d| < ``crop``
    times its maximum.
    """
    if pair.phi is None:
        raise ValueError("synthesis needs a computed eigenpair (0 < nu < pi/2)")
    f = DEFAULT_WEIGHT if f_weight is None else f_weight
    grid = pair.grid
    s = np.sin(pair.nu)
    h2 = grid.h2
    m = max(1, int(round(2 * np.pi / (period * h2 * s))))
    dxi = m * h2 * s
    L3 = 2 * np.pi / dxi
    kmax = int(np.ceil(f.support / dxi))
    ks = np.arange(-kmax, kmax + 1)
    xi = ks * dxi
    if n3 is None:
        n3 = int(2 ** np.ceil(np.log2(2 * kmax + 2)))
    nyquist = np.pi * n3 / L3
    if f.support >= nyquist:
        raise ValueError(f"weight support {f.support} exceeds the x3 frequency band "
                         f"{nyquist:.4g}; use n3 > {int(np.ceil(f.support * L3 / np.pi))}")
    coeff = f(xi) * dxi / np.sqrt(2 * np.pi)
    keep = coeff != 0
    ks, xi, coeff = ks[keep], xi[keep], coeff[keep]

    n1, j0, j1 = _crop(pair.phi, crop)
    n1 = min(n1, grid.n1)
    pad = int(np.max(np.abs(ks))) * m
    j0 = max(j0 - pad, 0)
    j1 = min(j1 + pad, grid.n2)
    phi = pair.phi[:n1].copy()
    phi[-1] = 0.0
    x3 = -0.5 * L3 + np.arange(n3) * (L3 / n3)
    phase = np.exp(-1j * np.outer(xi, x3))  # (K, n3)
    values = np.zeros((n1, j1 - j0, n3), dtype=complex)
    for k, c, ph in zip(ks, coeff, phase):
        shifted = np.zeros((n1, grid.n2))
        d = k * m
        if d >= 0:
            shifted[:, d:] = phi[:, : grid.n2 - d]
        else:
            shifted[:, :d] = phi[:, -d:]
        values += (c * shifted[:, j0:j1])[..., None] * ph[None, None, :]
    values[:, 0] = 0.0
    values[:, -1] = 0.0
    return Field3D(values=values, x1=grid.x1_nodes[:n1], y=grid.y_nodes[j0:j1],
                   shear=grid.shear, x3=x3, period=L3, nu=pair.nu,
                   meta={"f_weight": f.label, "support": f.support, "n_modes": int(ks.size),
                         "frequency_step": dxi, "zeta": pair.zeta})


def _d3(field_: Field3D, psi: np.ndarray, a3: np.ndarray) -> np.ndarray:
    """(-i d3 + A3) psi with the x3 derivative taken spectrally."""
    kappa = 2 * np.pi * np.fft.fftfreq(field_.x3.size, field_.h3)
    return np.fft.ifft(kappa * np.fft.fft(psi, axis=-1), axis=-1) + a3[..., None] * psi


@dataclass(frozen=True)
class Rayleigh3D:
    quotient: float
    neumann_residual: float
    residual: float
    decay: float


def rayleigh_3d(field_: Field3D, zeta_ref: float | None = None) -> Rayleigh3D:
    """Rayleigh quotient of a synthesized state under (-i grad + A_nu)^2.

    In the plane the form is the finite-difference Laplacian form, along x3
    the covariant derivative is spectral. Residuals are those of the
    eigen-equation with eigenvalue ``zeta_ref`` (default: the quotient).
    """
    form = assemble(field_.plane)
    n3 = field_.x3.size
    psi = field_.values
    a3 = field_.a3()
    w = field_.plane.weights()
    flat = psi.reshape(-1, n3)[form.free]
    k_psi = form.matrix @ flat
    perp = float(np.real(np.vdot(flat, k_psi))) * field_.h3
    d3 = _d3(field_, psi, a3)
    along = float(np.sum(w[..., None] * np.abs(d3) ** 2)) * field_.h3
    norm = field_.l2()
    q = (perp + along) / norm
    lam = q if zeta_ref is None else zeta_ref

    r = np.zeros(psi.shape, dtype=complex).reshape(-1, n3)
    r[form.free] = k_psi
    r = r.reshape(psi.shape) + w[..., None] * (_d3(field_, d3, a3) - lam * psi)
    free = field_.plane.free_mask()
    scale = np.abs(psi).max()
    dens = np.abs(r[free]) / w[free][:, None]
    h1 = field_.x1[1] - field_.x1[0]
    row0 = np.abs(r[0][free[0]]) / (w[0][free[0]][:, None] / (0.5 * h1))
    amp = np.abs(psi)
    ring = max(amp[-3:].max(), amp[:, :3].max(), amp[:, -3:].max())
    far3 = np.abs(field_.x3) >= 0.5 * field_.period - 1.0
    decay = max(ring, amp[..., far3].max()) / amp.max()
    return Rayleigh3D(quotient=q, neumann_residual=float(row0.max() / scale),
                      residual=float(dens.max() / scale), decay=float(decay))


class HalfPlaneSolver(BaseEstimator):
    """Estimator wrapper around ``zeta``: ``fit`` solves at each angle of X,
    ``predict`` returns zeta (solving angles not seen in ``fit``).

    Parameters
    ----------
    h : spacing near the boundary.
    tol : eigensolver tolerance.
    """

    def __init__(self, h=DEFAULT_H, tol=1e-12):
        self.h = h
        self.tol = tol

    def _pair(self, nu):
        grid = None if self.h == DEFAULT_H else _initial_grid(nu, self.h)[0]
        return zeta(nu, grid, self.tol)

    def fit(self, X, y=None):
        check_real(self.h, "h", min_val=0, include_boundaries="neither")
        nus = check_parameter_vector(X, "nu")
        self.pairs_ = {float(nu): self._pair(nu) for nu in nus}
        self.nu_ = nus
        self.zeta_ = np.array([self.pairs_[float(nu)].zeta for nu in nus])
        return self

    def predict(self, X):
        check_is_fitted(self, "pairs_")
        nus = check_parameter_vector(X, "nu")
        return np.array([(self.pairs_.get(float(nu)) or self._pair(nu)).zeta for nu in nus])


class Phi3DFunction:
    """phi3d as a function on x1-node slices, for evaluation at arbitrary
    (x2, x3), e.g. at lattice translates.

    The xi3 integral uses a uniform frequency grid whose shifts xi/sin(nu)
    are whole y cells; the result is periodic in x3 with period ``period``,
    chosen large enough that the copies do not overlap where |phi3d| is
    above round-off. Each x1 slice is tabulated on a uniform (x2, x3) grid
    and evaluated off-grid by cubic spline interpolation.
    """

    def __init__(self, pair: EigenPair2D, f_weight: SpectralWeight | None = None, *,
                 period: float = 60.0, h3: float = 0.05, tol: float = 1e-13,
                 profile: np.ndarray | None = None):
        if pair.phi is None:
            raise ValueError("needs a computed eigenpair (0 < nu < pi/2)")
        self.pair = pair
        self.profile = pair.phi if profile is None else profile
        self.f = DEFAULT_WEIGHT if f_weight is None else f_weight
        grid = pair.grid
        s = np.sin(pair.nu)
        self.m = max(1, int(round(2 * np.pi / (period * grid.h2 * s))))
        dxi = self.m * grid.h2 * s
        kmax = int(np.ceil(self.f.support / dxi))
        ks = np.arange(-kmax, kmax + 1)
        coeff = self.f(ks * dxi) * dxi / np.sqrt(2 * np.pi)
        keep = coeff != 0
        self.ks, self.xi, self.coeff = ks[keep], ks[keep] * dxi, coeff[keep]
        self.period = 2 * np.pi / dxi
        self.tol = tol
        # x3 extent: where the transform of f alone has dropped to tol
        probe = np.arange(0.0, 0.45 * self.period, h3)
        prof = np.abs(np.exp(-1j * np.outer(probe, self.xi)) @ self.coeff)
        above = np.flatnonzero(prof >= tol * prof[0])
        self.x3_max = min(probe[above[-1]] * 1.25 + 1.0, 0.45 * self.period)
        n3 = int(np.ceil(2 * self.x3_max / h3))
        self.x3 = np.linspace(-self.x3_max, self.x3_max, n3 + 1)
        self.x1 = grid.x1_nodes
        rows = np.abs(pair.phi).max(axis=1)
        self.rows = int(np.flatnonzero(rows >= 1e-10 * rows.max())[-1]) + 2
        self.scale = float(np.abs(pair.phi).max() * np.abs(self.coeff).sum())

    def slice(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """x2 nodes and phi3d values on (x2 nodes) x (self.x3) at x1 = x1[i]."""
        grid = self.pair.grid
        row = self.profile[i]
        n2 = row.size
        F = np.zeros((n2, self.ks.size))
        for c, k in enumerate(self.ks):
            d = k * self.m
            if d >= 0:
                F[d:, c] = row[: n2 - d]
            else:
                F[:d, c] = row[-d:]
        E = self.coeff[:, None] * np.exp(-1j * np.outer(self.xi, self.x3))
        x2 = grid.y_nodes + grid.shear * self.x1[i]
        return x2, F @ E

    def support(self, values: np.ndarray) -> tuple | None:
        a = np.abs(values) >= self.tol * self.scale
        if not a.any():
            return None
        r = np.flatnonzero(a.any(axis=1))
        c = np.flatnonzero(a.any(axis=0))
        return r[0], r[-1], c[0], c[-1]
