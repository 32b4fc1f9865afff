"""Magnetic lattices in the (x2, x3) plane, magnetic-periodic states over a
fundamental cell times the half-line in x1, and the periodic GL energy.

Lattice: s = R e2, t = R' (cos theta e2 + sin theta e3), with flux
quantization R R' sin(nu) sin(theta) = 2 pi n built into the constructor.
Periodicity: psi(x + w) = exp(-i g_w(x)) psi(x) with
g_{js+kt}(x) = (b/2)((js + kt) ^ x + (js) ^ (kt)), b = sin nu and
x ^ y = x2 y3 - x3 y2.

The cell is gridded in the lattice coordinates (v1, v2) in [0, 1)^2,
x = (x1, v1 s + v2 t); the phase conditions become fixed complex factors on
the wrap-around links of the finite-difference form, so any nodal vector is
magnetic-periodic by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from ._validation import check_positive_int, check_real
from .exceptions import Violation
from .halfplane import Phi3DFunction
from .linkform import AssembledForm, Axis, GLObjective, StructuredGrid, assemble
from .numcore import projected_gradient_descent

log = logging.getLogger(__name__)

DEFAULT_CELL_H = 0.07


@dataclass(frozen=True)
class LatticeSpec:
    R: float
    Rp: float
    theta: float
    nu: float
    tau: float
    flux_n: int

    @property
    def b_field(self) -> float:
        return float(np.sin(self.nu))

    @property
    def s(self) -> np.ndarray:
        return np.array([0.0, self.R, 0.0])

    @property
    def t(self) -> np.ndarray:
        return np.array([0.0, self.Rp * np.cos(self.theta), self.Rp * np.sin(self.theta)])

    @property
    def flux(self) -> float:
        return self.R * self.Rp * np.sin(self.nu) * np.sin(self.theta) / (2 * np.pi)

    @property
    def quantized(self) -> bool:
        return abs(self.flux - round(self.flux)) <= 1e-12 * max(1.0, abs(self.flux)) \
            and round(self.flux) >= 1


def make_lattice(R: float, Rp_hint: float | None = None, theta: float = np.pi / 2,
                 nu: float = np.pi / 4, tau: float = 0.0, flux_n: int | None = None) -> LatticeSpec:
    """Quantized lattice: R' = 2 pi n / (R sin nu sin theta).

    Without ``flux_n`` the integer nearest to the flux of (R, Rp_hint) is used.
    """
    R = check_real(R, "R", min_val=0, include_boundaries="neither")
    theta = check_real(theta, "theta", min_val=0, max_val=np.pi, include_boundaries="neither")
    nu = check_real(nu, "nu", min_val=0, max_val=np.pi / 2, include_boundaries="neither")
    tau = check_real(tau, "tau")
    area_factor = R * np.sin(nu) * np.sin(theta)
    if flux_n is None:
        if Rp_hint is None:
            raise ValueError("give flux_n or Rp_hint")
        Rp_hint = check_real(Rp_hint, "Rp_hint", min_val=0, include_boundaries="neither")
        flux_n = max(1, int(round(area_factor * Rp_hint / (2 * np.pi))))
    flux_n = check_positive_int(flux_n, "flux_n", min_val=1)
    return LatticeSpec(R=R, Rp=2 * np.pi * flux_n / area_factor, theta=theta, nu=nu,
                       tau=tau, flux_n=flux_n)


def vector_potential(spec: LatticeSpec, x: np.ndarray) -> np.ndarray:
    """A_{nu,tau}(x) = (0, x1 cos nu sin tau - x3 sin nu / 2,
    -x1 cos nu cos tau + x2 sin nu / 2), for points of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    sn, cn = np.sin(spec.nu), np.cos(spec.nu)
    st, ct = np.sin(spec.tau), np.cos(spec.tau)
    return np.stack([
        np.zeros(x.shape[:-1]),
        x[..., 0] * cn * st - 0.5 * x[..., 2] * sn,
        -x[..., 0] * cn * ct + 0.5 * x[..., 1] * sn,
    ], axis=-1)


def magnetic_field(spec: LatticeSpec) -> np.ndarray:
    sn, cn = np.sin(spec.nu), np.cos(spec.nu)
    return np.array([sn, cn * np.cos(spec.tau), cn * np.sin(spec.tau)])


def wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]


@dataclass(frozen=True)
class PhaseCocycle:
    lattice: LatticeSpec

    def vector(self, j, k) -> np.ndarray:
        j = np.asarray(j, dtype=float)[..., None]
        k = np.asarray(k, dtype=float)[..., None]
        return j * self.lattice.s + k * self.lattice.t

    def g(self, j, k, x) -> np.ndarray:
        b = self.lattice.b_field
        w = self.vector(j, k)
        return 0.5 * b * (wedge(w, np.asarray(x)) + wedge(self.vector(j, 0), self.vector(0, k)))

    def phase(self, j, k, x) -> np.ndarray:
        """exp(-i g_{js+kt}(x)): the factor in psi(x + w) = exp(-i g_w(x)) psi(x)."""
        return np.exp(-1j * self.g(j, k, x))


@dataclass(frozen=True)
class CocycleReport:
    max_defect: float
    samples: int
    worst: dict


def cocycle_check(pc: PhaseCocycle, samples: int = 200, rng=None, max_index: int = 4) -> CocycleReport:
    """Consistency of the phases with composition of translations:
    exp(-i g_{w+w0}(x)) = exp(-i g_w(x + w0)) exp(-i g_{w0}(x)) for random
    integer pairs w = (j, k), w0 = (j0, k0) and random points x."""
    rng = np.random.default_rng(0) if rng is None else rng
    j, k, j0, k0 = rng.integers(-max_index, max_index + 1, size=(4, samples))
    # always include the two orderings of s and t
    j[:2], k[:2], j0[:2], k0[:2] = (1, 0), (0, 1), (0, 1), (1, 0)
    x = rng.uniform(-10, 10, size=(samples, 3))
    w0 = pc.vector(j0, k0)
    lhs = pc.phase(j + j0, k + k0, x)
    rhs = pc.phase(j, k, x + w0) * pc.phase(j0, k0, x)
    d = np.abs(lhs - rhs)
    i = int(np.argmax(d))
    return CocycleReport(max_defect=float(d.max()), samples=samples,
                         worst={"j": int(j[i]), "k": int(k[i]), "j0": int(j0[i]),
                                "k0": int(k0[i]), "x": x[i].tolist()})


# --------------------------------------------------------------------------
# cell grid and periodic form


@dataclass(frozen=True)
class CellGrid3D:
    """x1 nodes (Neumann at 0, Dirichlet at the last node) times an n2 x n3
    periodic grid of the fundamental cell in lattice coordinates."""

    x1: np.ndarray
    n2: int
    n3: int
    lattice: LatticeSpec

    @cached_property
    def structured(self) -> StructuredGrid:
        L = self.lattice
        frame = np.zeros((3, 3))
        frame[0, 0] = 1.0
        frame[:, 1] = L.s
        frame[:, 2] = L.t
        return StructuredGrid(
            (Axis(self.x1, "neumann", "dirichlet"),
             Axis(np.arange(self.n2) / self.n2, "periodic", "periodic", period=1.0),
             Axis(np.arange(self.n3) / self.n3, "periodic", "periodic", period=1.0)),
            frame,
        )

    @property
    def shape(self) -> tuple:
        return (self.x1.size, self.n2, self.n3)

    def plane_points(self, v1: np.ndarray | None = None, v2: np.ndarray | None = None) -> np.ndarray:
        """(x2, x3) of cell nodes, shape (n2, n3, 2)."""
        v1 = np.arange(self.n2) / self.n2 if v1 is None else v1
        v2 = np.arange(self.n3) / self.n3 if v2 is None else v2
        V1, V2 = np.meshgrid(v1, v2, indexing="ij")
        L = self.lattice
        return (V1[..., None] * L.s[1:] + V2[..., None] * L.t[1:])

    @classmethod
    def for_lattice(cls, x1: np.ndarray, lattice: LatticeSpec,
                    h: float = DEFAULT_CELL_H) -> "CellGrid3D":
        return cls(x1=np.asarray(x1, dtype=float), n2=max(4, int(np.ceil(lattice.R / h))),
                   n3=max(4, int(np.ceil(lattice.Rp / h))), lattice=lattice)


def periodic_form(cell: CellGrid3D) -> AssembledForm:
    pc = PhaseCocycle(cell.lattice)
    return assemble(
        cell.structured,
        vector_potential=lambda x: vector_potential(cell.lattice, x),
        wrap_phase={1: lambda x: pc.phase(1, 0, x), 2: lambda x: pc.phase(0, 1, x)},
    )


@dataclass
class PeriodicState:
    values: np.ndarray
    cell: CellGrid3D
    lattice: LatticeSpec
    meta: dict = field(default_factory=dict)

    @cached_property
    def form(self) -> AssembledForm:
        return periodic_form(self.cell)

    @property
    def vector(self) -> np.ndarray:
        return self.form.from_full(self.values)

    def with_vector(self, v: np.ndarray) -> "PeriodicState":
        st = PeriodicState(self.form.to_full(v), self.cell, self.lattice, dict(self.meta))
        st.__dict__["form"] = self.form
        return st

    def rayleigh(self) -> float:
        v = self.vector
        return self.form.quadratic(v) / self.form.l2(v)


# --------------------------------------------------------------------------
# the summed state psi(x) = sum_w phi3d_{nu,tau}(x + w) exp(i g_w(x))


def gauge_chi(spec: LatticeSpec, x2, x3):
    """chi with A_{nu,tau} = (rotated A_nu) + grad chi (rotation by tau about x1)."""
    st, ct = np.sin(spec.tau), np.cos(spec.tau)
    return spec.b_field * (0.5 * st * ct * (x2 * x2 - x3 * x3) + (st * st - 0.5) * x2 * x3)


class _SliceSum:
    """Evaluates the truncated lattice sum on one x1 slice at arbitrary (x2, x3)."""

    def __init__(self, phi3d: Phi3DFunction, spec: LatticeSpec, i: int,
                 support_from: "_SliceSum | None" = None):
        self.spec = spec
        self.pc = PhaseCocycle(spec)
        x2, vals = phi3d.slice(i)
        self.sup = phi3d.support(vals) if support_from is None else support_from.sup
        if self.sup is None:
            return
        r0, r1, c0, c1 = self.sup
        self.x2_0, self.h2 = x2[0], x2[1] - x2[0]
        self.x3_0, self.h3 = phi3d.x3[0], phi3d.x3[1] - phi3d.x3[0]
        self.box = (x2[r0], x2[r1], phi3d.x3[c0], phi3d.x3[c1])
        sub = vals[max(r0 - 3, 0): r1 + 4, max(c0 - 3, 0): c1 + 4]
        self.off = (max(r0 - 3, 0), max(c0 - 3, 0))
        self.re = ndimage.spline_filter(sub.real, order=3)
        self.im = ndimage.spline_filter(sub.imag, order=3)
        self.x1 = phi3d.x1[i]

    def translates(self, z: np.ndarray, limit: int) -> tuple[np.ndarray, np.ndarray]:
        """Integer pairs (j, k), |j|, |k| <= limit, for which some point of z + w
        lands in the support box after rotating by -tau."""
        if self.sup is None:
            return np.zeros(0, int), np.zeros(0, int)
        L = self.spec
        j, k = np.meshgrid(np.arange(-limit, limit + 1), np.arange(-limit, limit + 1),
                           indexing="ij")
        j, k = j.ravel(), k.ravel()
        w = j[:, None] * L.s[1:] + k[:, None] * L.t[1:]
        lo, hi = z.reshape(-1, 2).min(axis=0), z.reshape(-1, 2).max(axis=0)
        corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
        c, s_ = np.cos(L.tau), np.sin(L.tau)
        p = corners[None] + w[:, None]
        y2 = p[..., 0] * c + p[..., 1] * s_
        y3 = -p[..., 0] * s_ + p[..., 1] * c
        a2, b2, a3, b3 = self.box
        hit = (y2.max(1) >= a2) & (y2.min(1) <= b2) & (y3.max(1) >= a3) & (y3.min(1) <= b3)
        return j[hit], k[hit]

    def phi_tau(self, z: np.ndarray) -> np.ndarray:
        """phi3d_{nu,tau} at points (x1, z), z of shape (..., 2)."""
        c, s_ = np.cos(self.spec.tau), np.sin(self.spec.tau)
        y2 = z[..., 0] * c + z[..., 1] * s_
        y3 = -z[..., 0] * s_ + z[..., 1] * c
        coords = np.stack([(y2 - self.x2_0) / self.h2 - self.off[0],
                           (y3 - self.x3_0) / self.h3 - self.off[1]])
        kw = dict(order=3, prefilter=False, mode="constant", cval=0.0)
        val = ndimage.map_coordinates(self.re, coords, **kw) + \
            1j * ndimage.map_coordinates(self.im, coords, **kw)
        outside = (y2 < self.box[0]) | (y2 > self.box[1]) | (y3 < self.box[2]) | (y3 > self.box[3])
        val[outside] = 0.0
        return val * np.exp(-1j * gauge_chi(self.spec, z[..., 0], z[..., 1]))

    def __call__(self, z: np.ndarray, j: np.ndarray, k: np.ndarray) -> np.ndarray:
        out = np.zeros(z.shape[:-1], dtype=complex)
        if self.sup is None:
            return out
        x = np.concatenate([np.full(z.shape[:-1] + (1,), self.x1), z], axis=-1)
        for jj, kk in zip(j, k):
            w = jj * self.spec.s[1:] + kk * self.spec.t[1:]
            out += self.phi_tau(z + w) * np.exp(1j * self.pc.g(jj, kk, x))
        return out


class LatticeSum:
    """psi(x) = sum_w phi3d_{nu,tau}(x + w) exp(i g_w(x)), truncated to the
    translates that meet the numerical support of phi3d (|phi3d| above
    ``phi3d.tol`` times its scale)."""

    def __init__(self, phi3d: Phi3DFunction, spec: LatticeSpec, j_range=None, k_range=None,
                 limit: int = 60):
        if not spec.quantized:
            log.warning("lattice flux %.6g is not an integer; phases are inconsistent", spec.flux)
        self.phi3d = phi3d
        self.spec = spec
        self.j_range = j_range
        self.k_range = k_range
        self.limit = limit
        self._slices = {}
        self.used = (0, 0)

    def slice(self, i: int) -> _SliceSum:
        if i not in self._slices:
            self._slices = {i: _SliceSum(self.phi3d, self.spec, i)}
        return self._slices[i]

    def _select(self, sl, z):
        j, k = sl.translates(z, self.limit)
        if j.size and max(np.abs(j).max(), np.abs(k).max()) >= self.limit:
            raise ValueError(f"phi3d support reaches the translate search limit {self.limit}")
        if self.j_range is not None or self.k_range is not None:
            jr = self.j_range or (-self.limit, self.limit)
            kr = self.k_range or (-self.limit, self.limit)
            bad = (j < jr[0]) | (j > jr[1]) | (k < kr[0]) | (k > kr[1])
            if np.any(bad):
                raise ValueError(
                    "translate window too small: need j in "
                    f"[{j.min()}, {j.max()}], k in [{k.min()}, {k.max()}]")
        if j.size:
            self.used = (max(self.used[0], int(np.abs(j).max())),
                         max(self.used[1], int(np.abs(k).max())))
        return j, k

    def evaluate(self, i: int, z: np.ndarray) -> np.ndarray:
        sl = self.slice(i)
        j, k = self._select(sl, z)
        return sl(z, j, k)


def periodic_sum_state(phi3d: Phi3DFunction, spec: LatticeSpec, j_range=None, k_range=None, *,
                       cell_h: float = DEFAULT_CELL_H) -> PeriodicState:
    """Tabulate the lattice sum on the cell grid over the x1 nodes of phi3d.

    ``j_range``/``k_range`` (inclusive pairs) restrict the translates; if a
    translate outside them carries non-negligible weight a ValueError names
    the range that is needed. Default: all translates that matter.
    """
    n1 = phi3d.rows
    x1 = phi3d.x1[:n1]
    cell = CellGrid3D.for_lattice(x1, spec, cell_h)
    total = LatticeSum(phi3d, spec, j_range, k_range)
    z = cell.plane_points()
    values = np.zeros(cell.shape, dtype=complex)
    for i in range(n1 - 1):
        values[i] = total.evaluate(i, z)
    state = PeriodicState(values, cell, spec, meta={
        "translates_used": total.used, "f_weight": phi3d.f.label, "zeta": phi3d.pair.zeta})
    state.meta["summer"] = total
    return state


# --------------------------------------------------------------------------
# checks on the summed state


@dataclass(frozen=True)
class PeriodicityReport:
    periodicity_defect: float
    translation_defect: float
    neumann_residual: float


def _covariant_differences(total: LatticeSum, i: int, z: np.ndarray, delta: float) -> np.ndarray:
    """Link-covariant central differences -i D psi along x2 and x3 at (x1_i, z),
    plus the x1 difference between the neighbouring x1 nodes (A1 = 0)."""
    spec = total.spec
    x1 = total.phi3d.x1
    out = []
    for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        zp, zm = z + delta * e, z - delta * e
        xp = np.concatenate([np.full(z.shape[:-1] + (1,), x1[i]), z + 0.5 * delta * e], -1)
        xm = np.concatenate([np.full(z.shape[:-1] + (1,), x1[i]), z - 0.5 * delta * e], -1)
        e3 = np.concatenate([[0.0], e])
        up = np.exp(1j * delta * vector_potential(spec, xp) @ e3)
        um = np.exp(-1j * delta * vector_potential(spec, xm) @ e3)
        out.append(-1j * (up * total.evaluate(i, zp) - um * total.evaluate(i, zm)) / (2 * delta))
    d1 = (total.evaluate(i + 1, z) - total.evaluate(i - 1, z)) / (x1[i + 1] - x1[i - 1])
    out.append(-1j * d1)
    return np.stack(out)


def periodicity_check(state: PeriodicState, n_samples: int = 24, rng=None,
                      delta: float = 1e-3) -> PeriodicityReport:
    """Relative defects of psi(x + w) = exp(-i g_w(x)) psi(x) and of the same
    law for the covariant gradient, at random points of random x1 slices for
    w in {s, t, s + t, 2s - t}; and the Neumann defect of psi at x1 = 0."""
    rng = np.random.default_rng(1) if rng is None else rng
    total = state.meta["summer"]
    spec = state.lattice
    pc = PhaseCocycle(spec)
    phi = total.phi3d
    n1 = state.cell.x1.size
    amp = np.abs(state.values).max(axis=(1, 2))
    live = np.flatnonzero(amp[1:-2] >= 1e-3 * amp.max()) + 1
    slices = rng.choice(live, size=min(4, live.size), replace=False)
    shifts = [(1, 0), (0, 1), (1, 1), (2, -1)]
    per, trans, scale_p, scale_t = 0.0, 0.0, 0.0, 0.0
    for i in slices:
        v = rng.uniform(0, 1, size=(n_samples, 2))
        z = v[:, :1] * spec.s[1:] + v[:, 1:] * spec.t[1:]
        x = np.concatenate([np.full((n_samples, 1), phi.x1[i]), z], -1)
        base = total.evaluate(i, z)
        dbase = _covariant_differences(total, i, z, delta)
        scale_p = max(scale_p, np.abs(base).max())
        scale_t = max(scale_t, np.abs(dbase).max())
        for j, k in shifts:
            w = j * spec.s[1:] + k * spec.t[1:]
            ph = pc.phase(j, k, x)
            per = max(per, np.abs(total.evaluate(i, z + w) - ph * base).max())
            dw = _covariant_differences(total, i, z + w, delta)
            trans = max(trans, np.abs(dw - ph * dbase).max())
    del n1
    return PeriodicityReport(periodicity_defect=per / scale_p, translation_defect=trans / scale_t,
                             neumann_residual=neumann_defect(state))


def neumann_defect(state: PeriodicState) -> float:
    """Conormal defect of psi at x1 = 0 relative to sup |psi|.

    Every x3-frequency of phi3d is a shifted copy of the 2D ground state, so
    the discrete x1 = 0 row defect of psi is the same lattice sum applied to
    the 2D row-defect field; that sum is evaluated on the cell nodes.
    """
    total = state.meta["summer"]
    phi = total.phi3d
    pair = phi.pair
    form = pair.form
    v = form.from_full(pair.phi)
    r = form.to_full(form.matrix @ v - pair.zeta * form.mass * v)
    mass = form.to_full(form.mass.astype(float))
    h1 = pair.grid.h1
    row = np.zeros_like(pair.phi)
    row[0] = np.where(mass[0] > 0, np.real(r[0]) / np.where(mass[0] > 0, mass[0] / (0.5 * h1), 1), 0)
    defect_fn = Phi3DFunction(pair, phi.f, period=phi.period, h3=phi.x3[1] - phi.x3[0],
                              profile=row)
    defect_fn.scale, defect_fn.tol = phi.scale, phi.tol
    sl = _SliceSum(defect_fn, total.spec, 0, support_from=total.slice(0))
    z = state.cell.plane_points()
    j, k = total._select(total.slice(0), z)
    return float(np.abs(sl(z, j, k)).max() / np.abs(state.values).max())


# --------------------------------------------------------------------------
# periodic GL energy


def periodic_energy(state: PeriodicState, b: float) -> float:
    """int |(-i grad + A) psi|^2 - b |psi|^2 + (b/2) |psi|^4 over the
    truncated half-line times the cell (trapezoid weights)."""
    b = check_real(b, "b")
    form, v = state.form, state.vector
    return float(form.quadratic(v) - b * form.l2(v) + 0.5 * b * form.l4(v))


@dataclass(frozen=True)
class QuarticTrial:
    """Closed-form minimum over eps of E(eps psi) = eps^2 (q - b) |psi|^2 +
    eps^4 (b/2) |psi|_4^4, q the Rayleigh quotient of psi."""

    q: float
    l2: float
    l4: float
    b: float

    @property
    def eps_star(self) -> float:
        return float(np.sqrt((self.b - self.q) * self.l2 / (self.b * self.l4)))

    @property
    def energy(self) -> float:
        return float(-((self.b - self.q) ** 2) * self.l2 ** 2 / (2 * self.b * self.l4))

    def at(self, eps: float) -> float:
        return float(eps ** 2 * (self.q - self.b) * self.l2 + eps ** 4 * 0.5 * self.b * self.l4)


def quartic_trial(state: PeriodicState, b: float) -> QuarticTrial:
    form, v = state.form, state.vector
    l2 = form.l2(v)
    return QuarticTrial(q=form.quadratic(v) / l2, l2=l2, l4=form.l4(v), b=float(b))


def _check_b(b: float, zeta_value: float) -> float:
    b = check_real(b, "b")
    if not zeta_value < b < 1:
        raise ValueError(f"b must lie in (zeta(nu), 1) = ({zeta_value:.12g}, 1), got {b}")
    return b


@dataclass
class PeriodicMinimum:
    state: PeriodicState
    energy: float
    trial: QuarticTrial
    trial_energy: float
    stationarity_defect: float
    iterations: int
    residual: float


def minimize_periodic(init: PeriodicState, b: float, tol: float = 1e-7, *,
                      zeta_value: float | None = None, max_iter: int = 5000) -> PeriodicMinimum:
    """Minimize the periodic energy over nodal states of the cell grid.

    The wrap-around links carry the lattice phases, so every iterate is
    magnetic-periodic; descent is L-BFGS started from eps* psi.
    """
    zeta_value = init.meta.get("zeta") if zeta_value is None else zeta_value
    b = _check_b(b, zeta_value)
    form = init.form
    trial = quartic_trial(init, b)
    if trial.q >= b:
        raise ValueError("Rayleigh quotient of the initial state is not below b")
    x0 = trial.eps_star * init.vector
    obj = GLObjective(form, b)
    scale = float(np.abs(obj.gradient(x0)).max())
    res = projected_gradient_descent(
        obj.energy, obj.gradient, x0, step_policy="lbfgs", tol=tol,
        residual=lambda v, g: float(np.abs(g).max() / scale),
        energy_delta=obj.delta, max_iter=max_iter)
    v = res.x
    e = obj.energy(v)
    quartic = obj.quartic(v)
    stat = abs(e + quartic) / abs(quartic)
    final = init.with_vector(v)
    if not e < 0:
        raise Violation("periodic minimum is not negative", energy=e, b=b)
    if e > trial.energy + 1e-12 * abs(trial.energy):
        raise Violation("descent ended above the trial energy", energy=e, trial=trial.energy)
    return PeriodicMinimum(state=final, energy=e, trial=trial, trial_energy=trial.energy,
                           stationarity_defect=float(stat), iterations=res.iterations,
                           residual=res.residual)
