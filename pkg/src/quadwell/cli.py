"""Command-line front end.

    quadwell levels      stationary levels + convergence report
    quadwell dipole      dipole matrix, its eigenbasis and Omega
    quadwell kernel-dump I(xi, xi_start | alpha) along a phase grid
    quadwell evolve      populations along a driven trajectory (+ field snapshots)
    quadwell scan        response against drive frequency
    quadwell oracle      brute-force baselines into a versioned data directory

Every written table starts with the library version and the fully resolved
configuration; nothing time- or host-dependent goes into any file, so the
same configuration reproduces the same bytes.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class Writer:
    """Writes tables and reports under one output directory."""

    def __init__(self, cfg: RunConfig, directory: str | None = None):
        self.cfg = cfg
        self.dir = directory or cfg.output.dir
        self.fmt = cfg.output.format
        self.written: list[str] = []
        os.makedirs(self.dir, exist_ok=True)

    def _path(self, name):
        p = os.path.join(self.dir, name)
        self.written.append(p)
        return p

    def _config(self):
        # where the files go is not part of the computation
        d = self.cfg.to_dict()
        del d["output"]["dir"]
        return d

    def _meta(self, notes):
        meta = {"library": "quadwell", "version": __version__, "config": self._config()}
        if notes:
            meta["notes"] = notes
        return meta

    def table(self, name, columns, rows, notes=None):
        rows = [[_cell(v) for v in r] for r in rows]
        if self.fmt == "json":
            path = self._path(name + ".json")
            doc = {"meta": self._meta(notes), "columns": list(columns), "rows": rows}
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, indent=1)
                fh.write("\n")
            return path
        path = self._path(name + ".csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self._header_lines(notes))
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")
        return path

    def plot_data(self, name, columns, rows):
        """Whitespace-separated columns for gnuplot-style tools."""
        path = self._path(name + ".dat")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self._header_lines(None))
            fh.write("# " + " ".join(columns) + "\n")
            for r in rows:
                fh.write(" ".join(_fmt(_cell(v)) for v in r) + "\n")
        return path

    def report(self, name, data):
        path = self._path(name + ".json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"meta": self._meta(None), "report": _jsonable(data)}, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return path

    def figure(self, name, fn, *args, **kwargs):
        if not self.cfg.output.figures:
            return None
        return fn(self._path(name + ".png"), *args, **kwargs)

    def _header_lines(self, notes):
        cfg = json.dumps(self._config(), sort_keys=True, separators=(",", ":"))
        out = f"# quadwell {__version__}\n# config {cfg}\n"
        for k in sorted(notes or {}):
            out += f"# {k} {json.dumps(_jsonable(notes[k]), sort_keys=True)}\n"
        return out


def _cell(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return _cell(v)


def _matrix_rows(M):
    return [[i] + [float(x) for x in row] for i, row in enumerate(np.asarray(M))]


def _matrix_cols(n, prefix="c"):
    return ["row"] + [f"{prefix}{j}" for j in range(n)]


def _initial(cfg: RunConfig):
    if cfg.drive.initial is None:
        return None
    return np.array([complex(a[0], a[1]) if isinstance(a, tuple) else complex(a) for a in cfg.drive.initial])


def _basis(cfg: RunConfig, n=None):
    from .well import solve_levels

    return solve_levels(cfg.well.params(), n or cfg.n_states)


def cmd_levels(cfg: RunConfig, out: Writer):
    from .dipole import overlap_matrix
    from .oracle import default_grid, grid_levels

    params = cfg.well.params()
    basis = _basis(cfg)
    n = basis.n_states
    rows = [[s.index, s.energy, s.omega, s.nu_right, s.nu_left, s.amp_right, s.amp_left, s.norm, s.match_residual]
            for s in basis.states]
    out.table("levels", ["k", "energy", "omega", "nu_right", "nu_left", "amp_right", "amp_left", "norm",
                         "match_residual"], rows)

    S = overlap_matrix(basis)
    grid = grid_levels(params, default_grid(params, n, cfg.oracle.grid_points), n)
    rel = np.abs(basis.energies - grid.energies) / basis.energies
    jumps = []
    for k in range(n):
        (v1, d1), (v2, d2) = basis.psi_sides(k)
        jumps.append([abs(v1 - v2), abs(d1 - d2)])
    w1, w2 = params.omega1, params.omega2
    lo, hi = min(w1, w2), max(w1, w2)
    k_arr = np.arange(n) + 0.5
    inside = (basis.energies >= params.hbar * lo * k_arr * (1 - 1e-12)) & (
        basis.energies <= params.hbar * hi * k_arr * (1 + 1e-12))
    out.report("levels_report", {
        "normalisation_error": np.abs(np.diag(S) - 1.0),
        "max_overlap_offdiag": float(np.max(np.abs(S - np.diag(np.diag(S))))),
        "continuity_jumps_value_slope_natural_units": jumps,
        "grid_oracle_energy": grid.energies,
        "grid_oracle_relative_difference": rel,
        "grid_oracle_richardson_correction": grid.richardson_correction,
        "grid_points": cfg.oracle.grid_points,
        "interlacing_ok": inside,
    })

    if cfg.output.figures:
        from . import plotting

        ell = params.ell
        a, _ = basis.turning_point(n - 1)
        _, b = basis.turning_point(n - 1)
        x = np.linspace((a - 2.0) * ell, (b + 2.0) * ell, 801)
        psis = [basis.psi(k, x) for k in range(n)]
        spacing = float(np.min(np.diff(basis.energies))) if n > 1 else basis.energies[0]
        scale = 0.4 * spacing / max(float(np.max(np.abs(p))) for p in psis)
        out.figure("levels", plotting.levels_figure, x, params.potential(x), basis.energies, psis, scale)


def cmd_dipole(cfg: RunConfig, out: Writer):
    from .dipole import decompose, truncation_report

    n = cfg.n_states
    basis = _basis(cfg, n + 4)
    dip = decompose(basis, n)
    out.table("dipole_X", _matrix_cols(n), _matrix_rows(dip.X), notes={"units": "ell"})
    rows = [[k, float(dip.lam[k])] + [float(v) for v in dip.V[:, k]] for k in range(n)]
    out.table("dipole_eigen", ["k", "lambda"] + [f"v{j}" for j in range(n)], rows)
    out.table("dipole_Omega", _matrix_cols(n), _matrix_rows(dip.Omega), notes={"units": "angular frequency"})
    out.report("dipole_report", truncation_report(basis, n, 4))
    if cfg.output.figures:
        from . import plotting

        out.figure("dipole_X", plotting.matrix_figure, dip.X, "|x_mk| / ell")


def cmd_kernel_dump(cfg: RunConfig, out: Writer):
    from .kernel import default_k_max, fourier_order_for, i_interval, power_order_for

    k = cfg.kernel
    xi = np.linspace(k.xi_start, k.xi_stop, k.n_points)
    trunc = k.truncation
    if trunc is None:
        trunc = (max(default_k_max(k.alpha), fourier_order_for(k.alpha)) if k.route == "fourier"
                 else power_order_for(k.alpha))
    vals = np.array([i_interval(float(x), k.xi_start, k.alpha, k.route, trunc) for x in xi])
    out.table("kernel", ["xi", "re_I", "im_I"], [[float(x), v.real, v.imag] for x, v in zip(xi, vals)],
              notes={"alpha": k.alpha, "route": k.route, "truncation": trunc, "xi0": k.xi_start})
    if cfg.output.figures:
        from . import plotting

        out.figure("kernel", plotting.kernel_figure, xi, vals, k.alpha)


def _trajectory_setup(cfg: RunConfig, samples, periods):
    from .dipole import decompose
    from .evolution import DriveConfig

    params = cfg.well.params()
    basis = _basis(cfg)
    dip = decompose(basis)
    drive = DriveConfig.for_well(params, cfg.drive.gamma, cfg.drive.omega, cfg.drive.xi0)
    xs = drive.xi0 + np.linspace(0.0, 2 * math.pi * periods, samples)
    return params, basis, dip, drive, xs


def cmd_evolve(cfg: RunConfig, out: Writer):
    from .evolution import UGenerator, reconstruct_phi, trajectory

    e = cfg.evolve
    params, basis, dip, drive, xs = _trajectory_setup(cfg, e.samples, e.periods)
    n = dip.n
    gen = UGenerator(dip, drive, cfg.kernel.route, cfg.kernel.truncation)
    max_step = None
    if e.steps_per_sample is not None:
        max_step = (xs[1] - xs[0]) / e.steps_per_sample * (1 + 1e-9)
    phi0 = _initial(cfg)
    traj = trajectory(dip, drive, xs, phi0, max_step=max_step, gen=gen)
    pops = np.abs(traj["phi_hat"]) ** 2
    rows = []
    for j, x in enumerate(xs):
        U = gen.interval(float(x), drive.xi0)
        rows.append([float(x), float(x) / drive.omega] + list(pops[j])
                    + [float(np.linalg.norm(traj["q"][j])), float(np.linalg.norm(traj["phi_hat"][j]))]
                    + [U[0, 0].real, U[0, 0].imag] + ([U[0, 1].real, U[0, 1].imag] if n > 1 else [0.0, 0.0]))
    cols = (["xi", "t"] + [f"pop_{k}" for k in range(n)] + ["norm_q", "norm_phi_hat"]
            + ["U00_re", "U00_im", "U01_re", "U01_im"])
    mode = "single-shot" if max_step is None else f"product, {e.steps_per_sample} steps per sample"
    out.table("trajectory", cols, rows, notes={"beta": drive.beta, "propagator": mode})

    if e.snapshots:
        ell = params.ell
        lo = min(basis.turning_point(k)[0] for k in range(n)) - 6.0
        hi = max(basis.turning_point(k)[1] for k in range(n)) + 6.0
        x = np.linspace(lo * ell, hi * ell, e.snapshot_points)
        fields, norms = [], []
        for s in e.snapshots:
            phases = np.array([float(s)])
            if max_step is None:
                ph = trajectory(dip, drive, phases, phi0, gen=gen)["phi_hat"][0]
            else:
                ph = trajectory(dip, drive, phases, phi0, max_step=max_step, gen=gen)["phi_hat"][0]
            fields.append(reconstruct_phi(x, ph, basis))
            norms.append(float(np.linalg.norm(ph)))
        cols = ["x"]
        for s in e.snapshots:
            cols += [f"re_xi{s:g}", f"im_xi{s:g}"]
        rows = [[float(xv)] + [v for f in fields for v in (f[i].real, f[i].imag)] for i, xv in enumerate(x)]
        out.table("snapshots", cols, rows, notes={"norm_phi_hat": norms})
        if cfg.output.figures:
            from . import plotting

            out.figure("snapshots", plotting.snapshots_figure, x, fields, list(e.snapshots))
    if cfg.output.figures:
        from . import plotting

        out.figure("populations", plotting.populations_figure, xs, pops)


def cmd_scan(cfg: RunConfig, out: Writer):
    from .evolution import DriveConfig, ScanResult, find_peaks, reference_scan, resonance_scan

    s = cfg.scan
    omegas = np.array(s.omegas(), dtype=float)
    with_ref = s.reference and s.observable == "depletion"
    cols = ["omega", "beta", "value"] + (["value_reference"] if with_ref else [])
    if omegas.size == 0:
        out.table("scan", cols, [], notes={"observable": s.observable})
        out.table("scan_peaks", ["source", "omega"], [])
        out.plot_data("scan_plot", cols, [])
        return
    params = cfg.well.params()
    dip = _decompose_for(cfg)
    template = DriveConfig.for_well(params, cfg.drive.gamma, float(omegas[0]), cfg.drive.xi0)
    res = resonance_scan(dip, params, template, omegas, s.observable, n_periods=s.n_periods,
                         samples_per_period=s.samples_per_period, steps_per_sample=s.steps_per_sample,
                         route=cfg.kernel.route, truncation=cfg.kernel.truncation, pair=tuple(s.pair),
                         harmonic=s.harmonic, workers=s.workers)
    ref = None
    if with_ref:
        ref = reference_scan(dip, params, template, omegas, n_periods=s.n_periods,
                             samples_per_period=s.samples_per_period)
    rows = []
    for i in range(omegas.size):
        r = [float(omegas[i]), float(res.beta[i]), float(res.value[i])]
        if ref is not None:
            r.append(float(ref.value[i]))
        rows.append(r)
    out.table("scan", cols, rows, notes={"observable": s.observable})
    out.plot_data("scan_plot", cols, rows)
    peaks = [["propagator", float(w)] for w in find_peaks(res)]
    if ref is not None:
        peaks += [["reference", float(w)] for w in find_peaks(ref)]
    out.table("scan_peaks", ["source", "omega"], peaks)
    if cfg.output.figures:
        from . import plotting

        out.figure("scan", plotting.scan_figure, omegas, res.value, s.observable,
                   [p[1] for p in peaks if p[0] == "propagator"], None if ref is None else ref.value)


def _decompose_for(cfg):
    from .dipole import decompose

    return decompose(_basis(cfg))


def cmd_oracle(cfg: RunConfig, out: Writer):
    from .kernel import i_quadrature
    from .oracle import default_grid, grid_dipole, grid_levels, reference_evolve_basis

    params = cfg.well.params()
    n = cfg.n_states
    lv = grid_levels(params, default_grid(params, n, cfg.oracle.grid_points), n)
    rows = [[k, float(lv.energies[k]), float(lv.energies_coarse[k]), float(lv.energies_fine[k])] for k in range(n)]
    out.table("grid_levels", ["k", "energy", "energy_coarse", "energy_fine"], rows,
              notes={"grid_points": cfg.oracle.grid_points, "extrapolation": "(4 E(h/2) - E(h)) / 3"})
    out.table("grid_dipole", _matrix_cols(n), _matrix_rows(grid_dipole(lv, n)), notes={"units": "ell"})

    o = cfg.oracle
    params, basis, dip, drive, xs = _trajectory_setup(cfg, o.samples, o.periods)
    phi0 = _initial(cfg)
    if phi0 is None:
        phi0 = np.eye(n)[0]
    states = reference_evolve_basis(dip.omegas / drive.omega, dip.X, drive.beta, phi0, drive.xi0, float(xs[-1]),
                                    samples=xs[1:])
    states = np.concatenate([phi0[None, :].astype(complex), states], axis=0)
    pops = np.abs(states) ** 2
    rows = [[float(x)] + list(pops[j]) + [float(np.linalg.norm(states[j]))] for j, x in enumerate(xs)]
    out.table("reference_trajectory", ["xi"] + [f"pop_{k}" for k in range(n)] + ["norm"], rows,
              notes={"beta": drive.beta, "integrator": "RK4 with step doubling"})

    alpha = cfg.kernel.alpha
    vals = [(math.pi, 0.0, 1.5, i_quadrature(math.pi, 0.0, 1.5, epsabs=1e-14)),
            (math.pi, 0.0, alpha, i_quadrature(math.pi, 0.0, alpha, epsabs=1e-14))]
    out.table("kernel_reference", ["xi", "xi0", "alpha", "re_I", "im_I"],
              [[a, b, c, v.real, v.imag] for a, b, c, v in vals])


COMMANDS = {
    "levels": cmd_levels,
    "dipole": cmd_dipole,
    "kernel-dump": cmd_kernel_dump,
    "evolve": cmd_evolve,
    "scan": cmd_scan,
    "oracle": cmd_oracle,
}


HELP = {
    "levels": "stationary levels and convergence report",
    "dipole": "dipole matrix, eigenbasis and Omega",
    "kernel-dump": "tabulate the oscillatory kernel",
    "evolve": "driven trajectory and field snapshots",
    "scan": "response against drive frequency",
    "oracle": "regenerate brute-force baselines",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults apply to missing fields)")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--format", choices=("csv", "json"), help="table format (overrides output.format)")
    common.add_argument("--n-states", type=int, help="basis truncation (overrides n_states)")
    common.add_argument("--route", choices=("power", "fourier"), help="kernel route (overrides kernel.route)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p = argparse.ArgumentParser(prog="quadwell", description="Driven composite quadratic well toolkit.")
    p.add_argument("--version", action="version", version=f"quadwell {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in HELP.items():
        sub.add_parser(name, parents=[common], help=text)
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["output__dir"] = args.out
    if args.format is not None:
        changes["output__format"] = args.format
    if args.no_figures:
        changes["output__figures"] = False
    if args.n_states is not None:
        changes["n_states"] = args.n_states
    if args.route is not None:
        changes["kernel__route"] = args.route
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            cfg = resolve_config(args)
            out_dir = cfg.output.dir
            if args.command == "oracle":
                out_dir = os.path.join(out_dir, "oracle", f"v{__version__}")
            writer = Writer(cfg, out_dir)
            COMMANDS[args.command](cfg, writer)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except NumericalError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
    for path in writer.written:
        print(path)
    return EXIT_OK


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
