"""Command-line interface: ``colorqubit {design,sweep,gate,dispersion,schmidt}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""
import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunManifest, load_config
from .dispersion import EffectiveIndexModel, import_dispersion_table, write_dispersion_table
from .errors import ColorQubitError, ConfigError, DomainError, PlanError, TableParseError
from .gate import evolve_heralded, evolve_pure
from .io import (objective_surface_rows, read_amplitude, read_jsa, write_coefficients, write_contour, write_intensity,
                 write_jsa, write_modes, write_objective_surface)
from .phasematch import objective_surface, objective_vs_height, phasematch_contour
from .pipeline import base_model, resolve_operating_point, run_design, search_space
from .schmidt import purity, purity_bounds, schmidt_decompose, schmidt_number
from .sweep import load_plan, run_sweep
from .units import wavelength_to_omega

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
USAGE_ERRORS = (ConfigError, PlanError, TableParseError, DomainError)


class StageError(Exception):
    def __init__(self, stage, error):
        super().__init__(f"stage '{stage}' failed: {error}")
        self.stage = stage
        self.error = error


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ColorQubitError as exc:
        raise StageError(name, exc) from exc


def _records(mapping):
    lines = []
    for key, value in mapping.items():
        if isinstance(value, float):
            value = f"{value:.10g}"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _jsonable(mapping):
    return {k: (float(v) if isinstance(v, (np.floating, float)) else int(v) if isinstance(v, np.integer) else v)
            for k, v in mapping.items()}


class Context:
    def __init__(self, args, argv=()):
        self.args = args
        self.config = load_config(args.config)
        self.dispersion = import_dispersion_table(args.dispersion) if args.dispersion else None
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = args.threads
        if self.threads < 0:
            raise ConfigError("--threads must be >= 0")
        self.manifest = RunManifest(command=" ".join(["colorqubit"] + list(argv)),
                                    config_hash=self.config.digest(), version=__version__)

    def path(self, name):
        p = self.out / name
        self.manifest.add(p.name)
        return p

    def write(self, name, text):
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        return p

    def finish(self, stem):
        (self.out / f"{stem}_manifest.json").write_text(self.manifest.to_json() + "\n", encoding="utf-8")

    def design(self):
        threads = self.threads or os.cpu_count() or 1
        try:
            return run_design(self.config, self.dispersion, num_threads=threads)
        except ColorQubitError as exc:
            raise StageError(getattr(exc, "stage", "design"), exc) from exc


# -- design -------------------------------------------------------------------

def _design_report(result):
    ev = result.evaluation
    rep = {"dispersion": result.model.source}
    if result.search is not None:
        rep["fobj_per_um2"] = result.search.fobj
    rep.update(ev.summary())
    rep["purity_upper"] = purity_bounds(ev.jsa_modes)[1]
    rep["jsa_coefficients"] = " ".join(f"{c:.6g}" for c in ev.jsa_modes.coefficients)
    rep["mf_coefficients"] = " ".join(f"{c:.6g}" for c in ev.mf_modes.coefficients)
    return rep


def cmd_design(ctx, args):
    if args.show_config:
        sys.stdout.write(ctx.config.to_ini())
        return EXIT_OK
    result = ctx.design()
    report = _design_report(result)
    ctx.write("design_report.txt", _records(report))
    ctx.write("design_report.json", json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    ctx.write("design.cfg", result.pinned.to_ini())
    if not args.no_figures:
        _stage("figure data", _design_figures, ctx, result)
    sys.stdout.write(_records(report))
    ctx.finish("design")
    return EXIT_OK


def _design_figures(ctx, result):
    ev, p = result.evaluation, result.evaluation.point
    write_jsa(ctx.path("jsa.dat"), ev.jsa, ("omega_s", "omega_i"))
    ctx.manifest.add("jsa.dat.json")
    write_jsa(ctx.path("mf.dat"), ev.mf, ("omega_s", "omega_r"))
    ctx.manifest.add("mf.dat.json")
    write_intensity(ctx.path("jsa_intensity.dat"), ev.jsa)
    write_intensity(ctx.path("mf_intensity.dat"), ev.mf)
    write_coefficients(ctx.path("jsa_coefficients.dat"), ev.jsa_modes.spectrum[:10])
    write_coefficients(ctx.path("mf_coefficients.dat"), ev.mf_modes.spectrum[:10])
    full_jsa = schmidt_decompose(ev.jsa, threshold=1.0)
    full_mf = schmidt_decompose(ev.mf, threshold=1.0)
    for stem, modes, axis, center in (
            ("jsa_signal_mode", full_jsa.modes_a, full_jsa.axis_a, ev.jsa.grid.center_a),
            ("jsa_idler_mode", full_jsa.modes_b, full_jsa.axis_b, ev.jsa.grid.center_b),
            ("mf_signal_mode", full_mf.modes_a, full_mf.axis_a, ev.mf.grid.center_a),
            ("mf_converted_mode", full_mf.modes_b, full_mf.axis_b, ev.mf.grid.center_b)):
        for path in write_modes(ctx.out, stem, modes[:3], axis, center):
            ctx.manifest.add(path.name)
    cfg = result.config
    space = search_space(cfg.with_values({"solver.fix_height": False, "solver.w_step_um": 0.01}))
    rows = objective_vs_height(space, p.processes, result.model, refine=False)
    write_objective_surface(ctx.path("objective_vs_height.dat"), rows)
    w = np.arange(cfg.solver.w_min_um, cfg.solver.w_max_um + 1e-9, 0.01)
    surf = objective_surface(result.model, p.height, w, w, p.processes)
    write_objective_surface(ctx.path("objective_surface.dat"), objective_surface_rows(p.height, w, w, surf))
    n = cfg.grids.contour_points
    lam1 = np.linspace(0.75, 0.90, n)
    lams = np.linspace(1.00, 1.60, n)
    mh = result.model.with_height(p.height)
    contours = phasematch_contour(mh.with_width(p.w_sfwm), mh.with_width(p.w_dfg), lam1, lams, p.lambda2)
    write_contour(ctx.path("contours.dat"), contours)


# -- sweep --------------------------------------------------------------------

def cmd_sweep(ctx, args):
    plan = load_plan(args.plan)
    result = _stage("sweep", run_sweep, plan, ctx.config, ctx.dispersion, threads=ctx.threads)
    name = plan.name
    result.write(ctx.path(f"{name}.tsv"))
    ctx.write(f"{name}_base.txt", _records(result.base))
    if args.heatmap:
        _heatmap(ctx, plan, result, args.heatmap_column or plan.outputs[0], name)
    flags = result.column("flag")
    sys.stdout.write(f"{name}: {len(result.rows)} points, {flags.count('ok')} ok, "
                     f"{flags.count('cutoff')} cutoff, {flags.count('no-root')} no-root\n")
    ctx.manifest.extra["plan"] = str(args.plan)
    ctx.finish(name)
    return EXIT_OK


def _heatmap(ctx, plan, result, column, name):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("--heatmap needs matplotlib (pip install 'artifact[plot]')") from None
    if len(plan.axes) != 2 or plan.outer:
        raise PlanError("--heatmap needs a plan with exactly two axes and no outer axes")
    a, b = plan.axes
    z = result.column(column).reshape(len(a.values), len(b.values))
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(z.T, origin="lower", aspect="auto",
                   extent=(a.values[0], a.values[-1], b.values[0], b.values[-1]))
    ax.set_xlabel(a.path)
    ax.set_ylabel(b.path)
    fig.colorbar(im, ax=ax, label=column)
    fig.tight_layout()
    fig.savefig(ctx.path(f"{name}_{column}.png"), dpi=120)
    plt.close(fig)


# -- gate ---------------------------------------------------------------------

def cmd_gate(ctx, args):
    result = ctx.design()
    ev = result.evaluation
    gate = ev.gate
    if args.nu is not None:
        gate = replace(gate, nu=float(args.nu))
    if args.powers is not None:
        p1, p2 = args.powers
        if p1 < 0 or p2 < 0:
            raise ConfigError("--powers must be non-negative")
        gate = replace(gate, p1_mW=float(p1), p2_mW=float(p2))
    if args.input == "fundamental":
        out = _stage("gate", evolve_heralded, ev.jsa_modes, ev.mf_modes, gate)
        pure = _stage("gate", evolve_pure, ev.jsa_modes.modes_a[0], ev.mf_modes, gate)
        out = replace(out, extra={**out.extra, "fidelity_pure": pure.fidelity})
    else:
        h = read_amplitude(args.input, ev.mf_modes.axis_a)
        out = _stage("gate", evolve_pure, h, ev.mf_modes, gate)
    out = replace(out, extra={**out.extra, "power_product_mW2": gate.p1_mW * gate.p2_mW, "epsilon": gate.epsilon})
    ctx.write("gate_report.txt", out.report())
    ctx.write("gate_report.json", out.to_json() + "\n")
    sys.stdout.write(out.report())
    ctx.finish("gate")
    return EXIT_OK


# -- dispersion ---------------------------------------------------------------

def cmd_dispersion(ctx, args):
    cfg = ctx.config
    model = base_model(cfg, ctx.dispersion)
    point, _ = _stage("geometry", resolve_operating_point, cfg.with_values({"solver.rephasematch": False}), model)
    lam = np.linspace(args.wavelengths[0], args.wavelengths[1], int(args.wavelengths[2]))
    mh = model.with_height(point.height)
    cols = {"wavelength_um": lam}
    for tag, w in (("sfwm", point.w_sfwm), ("dfg", point.w_dfg)):
        m = mh.with_width(w)
        n = m.scan_widths(lam, [w])[0]
        om = wavelength_to_omega(lam)
        ok = np.isfinite(n)
        ng = np.full_like(lam, np.nan)
        if ok.any():
            ng[ok] = m.group_index(om[ok])
        cols[f"neff_{tag}"] = n
        cols[f"ng_{tag}"] = ng
        if ctx.dispersion is not None:
            eim = EffectiveIndexModel(base_model(cfg).geometry).with_height(point.height).with_width(w)
            cols[f"neff_eim_{tag}"] = eim.scan_widths(lam, [w])[0]
            cols[f"dneff_{tag}"] = cols[f"neff_{tag}"] - cols[f"neff_eim_{tag}"]
    header = list(cols)
    np.savetxt(ctx.path("dispersion.dat"), np.column_stack([cols[k] for k in header]), fmt="%.12g",
               header=" ".join(header), comments="# ")
    sys.stdout.write(f"h = {point.height:.6g} um, w_sfwm = {point.w_sfwm:.6g} um, w_dfg = {point.w_dfg:.6g} um\n")
    if ctx.dispersion is not None:
        for tag in ("sfwm", "dfg"):
            d = cols[f"dneff_{tag}"]
            if np.isfinite(d).any():
                sys.stdout.write(f"max |neff(table) - neff(eim)| {tag} = {np.nanmax(np.abs(d)):.6g}\n")
    if args.export_table:
        widths = np.asarray(args.widths or [point.w_sfwm, point.w_dfg], dtype=float)
        heights = np.asarray(args.heights or [point.height], dtype=float)
        write_dispersion_table(args.export_table, model, np.sort(widths), np.sort(heights), lam,
                               comment=f"exported by colorqubit {__version__} ({model.source})")
        ctx.manifest.add(str(args.export_table))
    ctx.finish("dispersion")
    return EXIT_OK


# -- schmidt ------------------------------------------------------------------

def cmd_schmidt(ctx, args):
    if args.source in ("jsa", "mf"):
        ev = ctx.design().evaluation
        joint = ev.jsa if args.source == "jsa" else ev.mf
    else:
        joint = read_jsa(args.source)
    d = _stage("schmidt", schmidt_decompose, joint, args.threshold)
    rep = {"rank": d.rank, "residual": d.residual, "purity": purity(d), "purity_upper": purity_bounds(d)[1],
           "schmidt_number": schmidt_number(d),
           "coefficients": " ".join(f"{c:.8g}" for c in d.coefficients)}
    write_coefficients(ctx.path("schmidt_coefficients.dat"), d.coefficients)
    for stem, modes, axis, center in (("schmidt_mode_a", d.modes_a, d.axis_a, joint.grid.center_a),
                                      ("schmidt_mode_b", d.modes_b, d.axis_b, joint.grid.center_b)):
        for path in write_modes(ctx.out, stem, modes, axis, center, count=args.modes):
            ctx.manifest.add(path.name)
    ctx.write("schmidt_report.txt", _records(rep))
    sys.stdout.write(_records(rep))
    ctx.finish("schmidt")
    return EXIT_OK


# -- entry ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="colorqubit", description=__doc__.splitlines()[0])
    p.add_argument("--config", metavar="PATH", help="device config (INI); defaults to the built-in design")
    p.add_argument("--dispersion", metavar="PATH", help="neff table replacing the effective-index model")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: current)")
    p.add_argument("--threads", metavar="N", type=int, default=1, help="worker count; 0 = all CPUs")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="geometry search, spectra, modes and gate at the design point")
    d.add_argument("--show-config", action="store_true", help="print the effective config and exit")
    d.add_argument("--no-figures", action="store_true", help="skip figure-data files")

    s = sub.add_parser("sweep", help="run a sweep plan")
    s.add_argument("plan", help="plan file (INI)")
    s.add_argument("--heatmap", action="store_true", help="also write a PNG of a two-axis surface")
    s.add_argument("--heatmap-column", help="output column to draw (default: first output)")

    g = sub.add_parser("gate", help="evolve an input photon through the DFG gate")
    g.add_argument("--input", default="fundamental",
                   help="'fundamental' (heralded design photon) or an amplitude file 'omega re im'")
    g.add_argument("--nu", type=float, help="axis phase in rad (default: config)")
    g.add_argument("--powers", type=float, nargs=2, metavar=("P1", "P2"), help="pump powers in mW")

    n = sub.add_parser("dispersion", help="effective and group index of both waveguides")
    n.add_argument("--wavelengths", type=float, nargs=3, default=(0.6, 1.6, 101), metavar=("START", "STOP", "N"))
    n.add_argument("--export-table", metavar="PATH", help="also write an neff table from the active model")
    n.add_argument("--widths", type=float, nargs="+", help="table widths (default: both design widths)")
    n.add_argument("--heights", type=float, nargs="+", help="table heights (default: design height)")

    c = sub.add_parser("schmidt", help="Schmidt decomposition of the design JSA, MF or a JSA file")
    c.add_argument("--source", default="jsa", help="'jsa', 'mf' or a joint-amplitude file with sidecar")
    c.add_argument("--threshold", type=float, default=0.999, help="cumulative weight kept")
    c.add_argument("--modes", type=int, default=3, help="modes exported per side")
    return p


COMMANDS = {"design": cmd_design, "sweep": cmd_sweep, "gate": cmd_gate, "dispersion": cmd_dispersion,
            "schmidt": cmd_schmidt}


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    try:
        ctx = Context(args, argv)
        return COMMANDS[args.command](ctx, args)
    except StageError as exc:
        code = EXIT_USAGE if isinstance(exc.error, USAGE_ERRORS) else EXIT_NUMERIC
        print(f"colorqubit {args.command}: {exc}", file=sys.stderr)
        return code
    except USAGE_ERRORS as exc:
        print(f"colorqubit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ColorQubitError as exc:
        print(f"colorqubit {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
