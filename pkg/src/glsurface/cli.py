"""Command-line front end.

    glsurface <subcommand> [flags] [--config FILE] [--out PATH] [--format csv|json]

Exit codes: 0 success, 1 a checked mathematical statement failed (a
violation record is written), 2 usage error, 3 numerical failure (e.g. an
iteration did not converge).
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from importlib import metadata

import numpy as np

from . import boxmin, costfn, degennes, gl1d, halfplane, lattice
from . import io as gio
from .exceptions import ConvergenceError, GLSurfaceError, Violation
from .numcore import Grid1D

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

_PI_FORM = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def number(text: str) -> float:
    """A float, or a multiple of pi written like ``pi/4``, ``0.5pi``, ``2*pi/3``."""
    s = str(text).strip().replace(" ", "")
    m = _PI_FORM.match(s)
    if m:
        coef = m.group(1)
        c = -1.0 if coef == "-" else 1.0 if coef in ("", "+") else float(coef)
        d = float(m.group(2)) if m.group(2) else 1.0
        return c * np.pi / d
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parameter_grid(text: str) -> np.ndarray:
    """``a:b:n`` -> n equally spaced values from a to b inclusive."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
    try:
        a, b, n = number(parts[0]), number(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    return np.linspace(a, b, n)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# --------------------------------------------------------------------------
# subcommands: each returns (columns, rows) for tables or a dict


def cmd_theta0(a):
    r = degennes.theta0(Grid1D(a.t_max or degennes.DEFAULT_GRID.t_max,
                               a.n or degennes.DEFAULT_GRID.n), xi_tol=a.tol or 1e-6)
    return {"theta0": r.theta0, "xi_lin": r.xi_lin,
            "grid": {"t_max": r.t_max, "n": r.n, "xi_tol": r.xi_tol,
                     "extrapolated": r.extrapolated}}


def cmd_mu1_curve(a):
    grid = Grid1D(a.t_max or degennes.DEFAULT_GRID.t_max, a.n or degennes.DEFAULT_GRID.n)
    xs = a.xi_grid if a.xi_grid is not None else np.linspace(0.0, 2.0, 21)
    rows = []
    for xi in xs:
        p = degennes.mu1(float(xi), grid)
        rows.append((p.xi, p.mu1, p.mu1_grid, p.neumann_residual))
    return [("xi", "1"), ("mu1", "1"), ("mu1_grid", "1"), ("neumann_residual", "1")], rows


def _grid_1d(a):
    return Grid1D(a.t_max or gl1d.DEFAULT_GRID.t_max, a.n or gl1d.DEFAULT_GRID.n)


def cmd_gl1d(a):
    r = gl1d.minimize_1d(_req(a.b, "b"), _req(a.xi, "xi"), _grid_1d(a), a.tol or 1e-10)
    return {"b": r.b, "xi": r.xi, "energy": r.energy, "l4_norm_4": r.l4_norm_4,
            "el_residual": r.el_residual, "identity_defect": r.identity_defect,
            "mu1_grid": r.mu1_grid, "nonzero": r.nonzero, "iterations": r.iterations}


def cmd_e1d0(a):
    r = gl1d.e1d0(_req(a.b, "b"), _grid_1d(a), tol=a.tol or 1e-10)
    return {"b": r.b, "e0": r.e0, "xi0": r.xi0, "dE_dxi": r.dE_dxi,
            "below_threshold": r.below_threshold}


def cmd_costfn(a):
    r = gl1d.e1d0(_req(a.b, "b"), _grid_1d(a))
    cf = costfn.build_cost_functions(r)
    rep = costfn.verify_signs(cf)
    if a.format == "json":
        return {"b": cf.b, "xi0": cf.xi0, "signs": rep}
    rows = list(zip(cf.f0.t, cf.f0.values, cf.F0, cf.K0))
    return [("t", "1"), ("f0", "1"), ("F0", "1"), ("K0", "1")], rows


def cmd_zeta_curve(a):
    nus = a.nu_grid if a.nu_grid is not None else np.linspace(0.1, 1.4, 6)
    rows = []
    for nu in nus:
        grid = None if a.h is None else halfplane.default_grid(float(nu), a.h)
        p = halfplane.zeta(float(nu), grid, tol=a.tol or 1e-12)
        rows.append((float(nu), p.zeta, p.flag, p.edge_decay, p.neumann_residual))
    zs = [r[1] for r in rows]
    order = np.argsort([r[0] for r in rows])
    if np.any(np.diff(np.asarray(zs)[order]) < 0):
        raise Violation("zeta is not non-decreasing in nu", nu=[r[0] for r in rows], zeta=zs)
    return [("nu", "rad"), ("zeta", "1"), ("flag", ""), ("edge_decay", "1"),
            ("neumann_residual", "1")], rows


def cmd_phi3d(a):
    nu = a.nu if a.nu is not None else np.pi / 4
    p = halfplane.zeta(nu)
    f = halfplane.synthesize_phi3d(p)
    r = halfplane.rayleigh_3d(f, p.zeta)
    return {"nu": nu, "zeta": p.zeta, "rayleigh": r.quotient,
            "neumann_residual": r.neumann_residual, "residual": r.residual,
            "decay": r.decay, "f_weight": f.meta.get("f_weight")}


def _lattice_spec(a, nu):
    R = a.R if a.R is not None else float(np.sqrt(2 * np.pi / np.sin(nu)))
    return lattice.make_lattice(R, theta=a.theta if a.theta is not None else np.pi / 2, nu=nu,
                                tau=a.tau or 0.0, flux_n=a.flux_n or 1)


def cmd_lattice_state(a):
    nu = a.nu if a.nu is not None else np.pi / 4
    spec = _lattice_spec(a, nu)
    rng = np.random.default_rng(a.seed)
    co = lattice.cocycle_check(lattice.PhaseCocycle(spec), rng=rng)
    pair = halfplane.zeta(nu)
    st = lattice.periodic_sum_state(halfplane.Phi3DFunction(pair), spec,
                                    cell_h=a.h or lattice.DEFAULT_CELL_H)
    rep = lattice.periodicity_check(st, rng=rng)
    return {"R": spec.R, "Rp": spec.Rp, "theta": spec.theta, "nu": spec.nu, "tau": spec.tau,
            "flux_n": spec.flux_n, "flux": spec.flux, "cocycle_defect": co.max_defect,
            "periodicity_defect": rep.periodicity_defect,
            "translation_defect": rep.translation_defect,
            "neumann_residual": rep.neumann_residual, "rayleigh": st.rayleigh(),
            "zeta": pair.zeta, "cell_shape": list(st.cell.shape),
            "translates_used": list(st.meta["translates_used"])}


def cmd_periodic_energy(a):
    nu = a.nu if a.nu is not None else 0.3
    spec = _lattice_spec(a, nu)
    pair = halfplane.zeta(nu, halfplane.default_grid(nu, 0.1))
    st = lattice.periodic_sum_state(halfplane.Phi3DFunction(pair), spec, cell_h=a.h or 0.2)
    b = _req(a.b, "b")
    tr = lattice.quartic_trial(st, b)
    trial_numeric = lattice.periodic_energy(st.with_vector(tr.eps_star * st.vector), b)
    m = lattice.minimize_periodic(st, b, tol=a.tol or 1e-7, zeta_value=pair.zeta)
    return {"nu": nu, "b": b, "zeta": pair.zeta, "rayleigh": tr.q, "eps_star": tr.eps_star,
            "trial_energy": trial_numeric, "trial_closed_form": tr.energy,
            "minimized_energy": m.energy, "stationarity_defect": m.stationarity_defect,
            "iterations": m.iterations}


def _box_spec(a):
    return boxmin.BoxSpec(b=_req(a.b, "b"), nu=a.nu or 0.0, ell=a.ell or 8.0, ell3=a.ell3,
                          beta=a.beta or 0.0, h=a.h or boxmin.DEFAULT_H)


def cmd_box_min(a):
    spec = _box_spec(a)
    r = boxmin.minimize_box(spec, tol=a.tol or 1e-7)
    return {"b": spec.b, "nu": spec.nu, "ell": spec.ell, "ell3": spec.ell3, "beta": spec.beta,
            "h": spec.h, "energy": r.energy, "per_area": r.per_area,
            "l4_integral": r.l4_integral, "stationarity_defect": r.stationarity_defect,
            "sup": r.state.sup, "el_residual": r.el_residual,
            "outer_mass_fraction": r.outer_mass_fraction, "iterations": r.iterations}


def cmd_shear_check(a):
    b = a.b if a.b is not None else 0.7
    nu = a.nu if a.nu is not None else np.pi / 4
    ell = a.ell or 4.0
    e = gl1d.e1d0(b)

    def fn(x):
        f = np.interp(x[..., 0], e.f0.t, e.f0.values, right=0.0)
        return f * boxmin.smooth_cutoff(x[..., 1], ell) * boxmin.smooth_cutoff(x[..., 2], ell) \
            * np.exp(1j * e.xi0 * x[..., 2])

    return boxmin.shear_transform_check(fn, b, nu, ell, h=a.h or 0.1)


def cmd_verify_all(a):
    from . import verification
    if a.acceptance:
        results = verification.run_criteria()
    else:
        results = verification.invariant_suite(a.seed).results
    rows = [(r.name, r.passed, gio.to_plain(r.measured), gio.to_plain(r.tolerance), r.note)
            for r in results]
    failed = [r.name for r in results if not r.passed]
    table = ([("check", ""), ("passed", ""), ("measured", ""), ("tolerance", ""), ("note", "")],
             rows)
    if failed:
        raise _SuiteFailure(table, failed)
    return table


class _SuiteFailure(Exception):
    def __init__(self, table, failed):
        super().__init__(f"checks failed: {', '.join(failed)}")
        self.table = table
        self.failed = failed


def _req(value, name):
    if value is None:
        raise _Usage(f"--{name.replace('_', '-')} is required for this subcommand")
    return value


class _Usage(Exception):
    pass


COMMANDS = {
    "theta0": cmd_theta0, "mu1-curve": cmd_mu1_curve, "gl1d": cmd_gl1d, "e1d0": cmd_e1d0,
    "costfn": cmd_costfn, "zeta-curve": cmd_zeta_curve, "phi3d": cmd_phi3d,
    "lattice-state": cmd_lattice_state, "periodic-energy": cmd_periodic_energy,
    "box-min": cmd_box_min, "shear-check": cmd_shear_check, "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    for flag, typ in (("--t-max", number), ("--n", int), ("--tol", number), ("--b", number),
                      ("--nu", number), ("--tau", number), ("--theta", number),
                      ("--flux-n", int), ("--ell", number), ("--ell3", number),
                      ("--beta", number), ("--xi", number), ("--h", number), ("--R", number)):
        g.add_argument(flag, type=typ, default=None)
    g.add_argument("--nu-grid", type=parameter_grid, default=None, metavar="A:B:N")
    g.add_argument("--xi-grid", type=parameter_grid, default=None, metavar="A:B:N")
    g.add_argument("--seed", type=int, default=0)
    o = common.add_argument_group("output")
    o.add_argument("--out", default=None, help="output file (default: stdout)")
    o.add_argument("--format", choices=("csv", "json"), default="json")
    o.add_argument("--config", default=None, help="flat key=value file; flags override it")

    parser = _Parser(prog="glsurface", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify-all":
            p.add_argument("--acceptance", action="store_true",
                           help="run the numbered acceptance criteria (slow)")
    return parser


def _resolve(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = gio.read_config_file(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def _config_of(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("config",)}
    try:
        cfg["version"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        cfg["version"] = "unknown"
    return cfg


def _render(args, result) -> str:
    cfg = _config_of(args)
    if isinstance(result, tuple):
        columns, rows = result
        if args.format == "csv":
            return gio.dumps_csv(columns, rows, cfg)
        names = [c for c, _ in columns]
        return gio.dumps_json(cfg, {"columns": [{"name": c, "unit": u} for c, u in columns],
                                    "rows": [dict(zip(names, r)) for r in rows]})
    plain = gio.to_plain(result)
    if args.format == "csv":
        flat = _flatten(plain)
        return gio.dumps_csv([(k, "") for k in flat], [list(flat.values())], cfg)
    return gio.dumps_json(cfg, plain)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[prefix + k] = v
    return out


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _resolve(argv)
    try:
        result = COMMANDS[args.command](args)
    except _Usage as exc:
        sys.stderr.write(f"glsurface {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except _SuiteFailure as exc:
        gio.write_text(_render(args, exc.table), args.out)
        sys.stderr.write(f"{exc}\n")
        return EXIT_VIOLATION
    except Violation as exc:
        text = gio.dumps_json(_config_of(args), {"violation": exc.record})
        gio.write_text(text, args.out)
        sys.stderr.write(f"violation: {exc}\n")
        return EXIT_VIOLATION
    except ConvergenceError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (ValueError, GLSurfaceError) as exc:
        sys.stderr.write(f"glsurface {args.command}: error: {exc}\n")
        return EXIT_USAGE
    gio.write_text(_render(args, result), args.out)
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
