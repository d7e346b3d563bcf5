"""Parameter sweeps over the device pipeline.

A plan names up to two inner axes (and optionally two outer axes for the
nested fidelity-matrix layout) by config path. Points are evaluated in a
fixed order; with several workers the rows are gathered back in grid order
and BLAS is pinned to one thread, so tables are byte-identical regardless of
the worker count.
"""
import configparser
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
from threadpoolctl import threadpool_limits

from .config import DeviceConfig, _split
from .errors import ConfigError, CutoffError, DomainError, PlanError, RootError
from .phasematch import rephasematch
from .pipeline import (OperatingPoint, base_model, evaluate_point, mapping_function, pin_operating_point,
                       point_from_config, resolve_operating_point, spectral_grids)
from .schmidt import schmidt_decompose
from .spectra import CavitySpec, FilterSpec, PumpSpec, sfwm_jsa
from .units import thz_to_rad_per_ps

DELTA_W = "geometry.delta_w_um"
OUTPUTS = ("fidelity", "fidelity_pure", "fidelity_uncertainty", "purity", "schmidt_number", "overlap1",
           "min_power_product", "relative_pair_rate")
FLAGS = ("ok", "cutoff", "no-root")
REFERENCE_SIGMAF_THZ = 1.0


@dataclass(frozen=True)
class Axis:
    path: str
    values: tuple

    @classmethod
    def linear(cls, path, start, stop, steps):
        steps = int(steps)
        if steps < 1 or (steps == 1 and start != stop):
            raise PlanError(f"axis {path}: needs at least 2 steps (1 only when start == stop)")
        return cls(path, tuple(float(v) for v in np.linspace(start, stop, steps)))

    @property
    def name(self):
        return self.path.split(".", 1)[1]


def _check_path(path):
    if path == DELTA_W:
        return
    try:
        _split(path)
    except ConfigError as exc:
        raise PlanError(f"unresolvable parameter path: {exc}") from None


@dataclass(frozen=True)
class SweepPlan:
    axes: tuple
    overrides: dict = field(default_factory=dict)
    rephasematch: bool = False
    outputs: tuple = ("fidelity", "purity", "schmidt_number", "min_power_product")
    base_geometry: str = "design"
    outer: tuple = ()
    name: str = "sweep"

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise PlanError("a plan needs one or two axes")
        if len(self.outer) > 2:
            raise PlanError("at most two outer axes")
        paths = [a.path for a in self.outer + self.axes]
        if len(set(paths)) != len(paths):
            raise PlanError("axis paths repeat")
        for p in paths:
            _check_path(p)
        for p in self.overrides:
            _check_path(p)
        unknown = [o for o in self.outputs if o not in OUTPUTS]
        if unknown or not self.outputs:
            raise PlanError(f"unknown outputs {unknown}; choose from {', '.join(OUTPUTS)}")
        if self.base_geometry not in ("design", "config"):
            raise PlanError("base_geometry must be 'design' or 'config'")
        if self.rephasematch and {"sfwm.lambda1_um", "sfwm.lambdas_um"} & set(paths):
            raise PlanError("re-phasematching solves lambda1 and lambdas; they cannot also be swept")

    @property
    def all_axes(self):
        return self.outer + self.axes

    def points(self):
        """Override dictionaries in row order (last axis fastest)."""
        axes = self.all_axes
        return [dict(zip([a.path for a in axes], combo)) for combo in itertools.product(*(a.values for a in axes))]


def _parse_axis(text, key):
    parts = text.split()
    if len(parts) < 2:
        raise PlanError(f"{key}: expected 'path start stop steps' or 'path values v1 v2 ...'")
    path = parts[0]
    try:
        if parts[1] == "values":
            if len(parts) < 3:
                raise PlanError(f"{key}: empty value list")
            return Axis(path, tuple(float(v) for v in parts[2:]))
        if len(parts) != 4:
            raise PlanError(f"{key}: expected 'path start stop steps'")
        return Axis.linear(path, float(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError:
        raise PlanError(f"{key}: non-numeric axis specification {text!r}") from None


def parse_plan(text, source="<string>") -> SweepPlan:
    """Read a plan: ``[plan]`` with axis1/axis2 (outer1/outer2), flags and outputs; ``[overrides]``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise PlanError(f"{source}: {exc}") from None
    if not parser.has_section("plan"):
        raise PlanError(f"{source}: missing [plan] section")
    extra = set(parser.sections()) - {"plan", "overrides"}
    if extra:
        raise PlanError(f"{source}: unknown sections {sorted(extra)}")
    p = dict(parser.items("plan"))
    allowed = {"name", "axis1", "axis2", "outer1", "outer2", "rephasematch", "outputs", "base_geometry"}
    unknown = set(p) - allowed
    if unknown:
        raise PlanError(f"{source}: unknown plan keys {sorted(unknown)}")
    axes = tuple(_parse_axis(p[k], k) for k in ("axis1", "axis2") if k in p)
    outer = tuple(_parse_axis(p[k], k) for k in ("outer1", "outer2") if k in p)
    overrides = {}
    if parser.has_section("overrides"):
        for key, raw in parser.items("overrides"):
            _check_path(key)
            overrides[key] = raw
    try:
        reph = parser.getboolean("plan", "rephasematch", fallback=False)
    except ValueError:
        raise PlanError(f"{source}: rephasematch must be true or false") from None
    outputs = tuple(p.get("outputs", "fidelity purity schmidt_number min_power_product").split())
    return SweepPlan(axes=axes, overrides=overrides, rephasematch=reph, outputs=outputs,
                     base_geometry=p.get("base_geometry", "design"), outer=outer, name=p.get("name", "sweep"))


def load_plan(path) -> SweepPlan:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise PlanError(f"cannot read plan {path}: {exc.strerror}") from None
    if not text.strip():
        raise PlanError(f"plan {path} is empty")
    return parse_plan(text, source=str(path))


@dataclass
class SweepResult:
    columns: tuple
    rows: list
    plan: SweepPlan = None
    base: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        if name == "flag":
            return [r[i] for r in self.rows]
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_text(self):
        lines = ["\t".join(self.columns)]
        for row in self.rows:
            lines.append("\t".join(v if isinstance(v, str) else "%.12g" % v for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())
        return path

    def select(self, **equal):
        """Rows whose named columns equal the given values, as a new result."""
        idx = {k: self.columns.index(k) for k in equal}
        rows = [r for r in self.rows if all(r[i] == equal[k] for k, i in idx.items())]
        return SweepResult(self.columns, rows, self.plan, self.base)


# -- pair rate -------------------------------------------------------------------

def pair_rate(config: DeviceConfig, point: OperatingPoint, ring, sigmaf_THz=None):
    """Weight of the filtered, unnormalized JSA; proportional to pairs per squared pump power.

    The grid is the heralding grid for the given filter width, so the idler
    axis always resolves both the filter and the ring lines.
    """
    if sigmaf_THz is not None:
        config = config.with_values({"sfwm.sigmaf_THz": sigmaf_THz})
    s = config.sfwm
    o1, _, _, oi, _ = point.omegas()
    grid = spectral_grids(config, point, ring).jsa
    pump = PumpSpec(o1, float(thz_to_rad_per_ps(s.sigma1_THz)))
    filt = FilterSpec(oi, float(thz_to_rad_per_ps(s.sigmaf_THz)))
    return sfwm_jsa(grid, pump, CavitySpec(s.lc_um, s.Ri, resonance=oi), filt, ring, normalize=False).raw_norm


# -- point evaluation ------------------------------------------------------------

_MF_CACHE = {}
_CONTEXT = {}


def _mf_key(config, point):
    s, d, g = config.sfwm, config.dfg, config.grids
    return (point.lambda1, point.lambdas, point.lambda2, point.height, point.w_dfg, s.sigma1_THz, d.sigma2_THz,
            d.L_um, g.points, g.mf_nodes, g.span_sigmas, g.truncation)


def _mf_modes(config, point, model):
    key = _mf_key(config, point)
    if key not in _MF_CACHE:
        if len(_MF_CACHE) > 32:
            _MF_CACHE.clear()
        mh = model.with_height(point.height)
        grids = spectral_grids(config, point, mh.with_width(point.w_sfwm))
        mf = mapping_function(config, point, grids.mf, mh.with_width(point.w_dfg))
        _MF_CACHE[key] = schmidt_decompose(mf, config.grids.truncation)
    return _MF_CACHE[key]


def _point_config(pinned, base_point, overrides):
    plain = {k: v for k, v in overrides.items() if k != DELTA_W}
    cfg = pinned.with_values(plain) if plain else pinned
    dw = overrides.get(DELTA_W, 0.0)
    p = point_from_config(cfg)
    if dw:
        p = OperatingPoint(p.height, base_point.w_sfwm + dw, base_point.w_dfg + dw, p.lambda1, p.lambdas, p.lambda2)
    return cfg, p


def _evaluate(task):
    cfg, point, flag = task
    ctx = _CONTEXT
    outputs = ctx["outputs"]
    if flag != "ok":
        return [float("nan")] * len(outputs), flag
    try:
        with threadpool_limits(limits=1):
            ev = evaluate_point(cfg, point, ctx["model"], mf_modes=_mf_modes(cfg, point, ctx["model"]))
            values = {
                "fidelity": ev.heralded.fidelity, "fidelity_pure": ev.pure.fidelity,
                "fidelity_uncertainty": ev.heralded.fidelity_uncertainty, "purity": ev.purity,
                "schmidt_number": ev.schmidt_number, "overlap1": float(abs(ev.pure.overlaps[0]) ** 2),
                "min_power_product": ev.min_power_product,
            }
            if "relative_pair_rate" in outputs:
                ring = ctx["model"].with_height(point.height).with_width(point.w_sfwm)
                values["relative_pair_rate"] = pair_rate(cfg, point, ring) / ctx["reference_rate"]
    except (CutoffError, DomainError):
        return [float("nan")] * len(outputs), "cutoff"
    except RootError:
        return [float("nan")] * len(outputs), "no-root"
    return [float(values[o]) for o in outputs], "ok"


def _init_worker(context):
    _CONTEXT.clear()
    _CONTEXT.update(context)
    _MF_CACHE.clear()


def _resolve_threads(threads):
    if threads is None or threads == 1:
        return 1
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ConfigError("--threads must be >= 0")
    return int(threads)


def prepare_base(plan: SweepPlan, config: DeviceConfig, dispersion=None):
    """Resolve the plan's base operating point, epsilon and pair-rate reference."""
    cfg = config.with_values(plan.overrides) if plan.overrides else config
    model = base_model(cfg, dispersion)
    if plan.base_geometry == "config":
        cfg_geo = cfg.with_values({"solver.geometry": "config"})
    else:
        cfg_geo = cfg
    with threadpool_limits(limits=1):
        point, _ = resolve_operating_point(cfg_geo, model)
        pinned = pin_operating_point(cfg, point)
        base_eval = evaluate_point(pinned, point, model)
    if cfg.dfg.epsilon is None:
        pinned = pinned.with_values({"dfg.epsilon": base_eval.gate.epsilon})
    reference = None
    if "relative_pair_rate" in plan.outputs:
        ring = model.with_height(point.height).with_width(point.w_sfwm)
        with threadpool_limits(limits=1):
            reference = pair_rate(pinned, point, ring, REFERENCE_SIGMAF_THZ)
    return model, point, pinned, base_eval, reference


def run_sweep(plan: SweepPlan, config: DeviceConfig, dispersion=None, threads=1) -> SweepResult:
    """Evaluate the pipeline at every plan point; failed points are flagged rows."""
    model, base_point, pinned, base_eval, reference = prepare_base(plan, config, dispersion)
    tasks = []
    seed = (base_point.lambda1, base_point.lambdas)
    solved = []
    for overrides in plan.points():
        cfg, point = _point_config(pinned, base_point, overrides)
        flag = "ok"
        if plan.rephasematch:
            mh = model.with_height(point.height)
            try:
                with threadpool_limits(limits=1):
                    lam1, lams = rephasematch(mh.with_width(point.w_sfwm), mh.with_width(point.w_dfg),
                                              point.lambda2, seed, tol=cfg.solver.rephasematch_tol)
                seed = (lam1, lams)
                point = OperatingPoint(point.height, point.w_sfwm, point.w_dfg, lam1, lams, point.lambda2)
            except RootError:
                flag = "no-root"
            except (CutoffError, DomainError):
                flag = "cutoff"
            solved.append((point.lambda1, point.lambdas) if flag == "ok" else (float("nan"),) * 2)
        tasks.append((cfg, point, flag))
    context = {"model": model, "outputs": plan.outputs, "reference_rate": reference}
    workers = _resolve_threads(threads)
    if workers == 1:
        _init_worker(context)
        results = [_evaluate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn"),
                                 initializer=_init_worker, initargs=(context,)) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=1))
    columns = [a.name if a.path != DELTA_W else "delta_w_um" for a in plan.all_axes]
    if plan.rephasematch:
        columns += ["lambda1_um", "lambdas_um"]
    columns += list(plan.outputs) + ["flag"]
    rows = []
    for i, (overrides, (values, flag)) in enumerate(zip(plan.points(), results)):
        row = [float(overrides[a.path]) for a in plan.all_axes]
        if plan.rephasematch:
            row += [float(x) for x in solved[i]]
        rows.append(tuple(row + values + [flag]))
    base = base_eval.summary()
    base["epsilon"] = pinned.dfg.epsilon
    return SweepResult(tuple(columns), rows, plan, base)


def fidelity_matrix(config: DeviceConfig, L_values=(1.0e4, 1.5e4, 2.0e4), sigma1_values=(5.0, 6.0, 7.0),
                    lc_values=None, Ri_values=None, sigma2_THz=0.5, sigmaf_THz=4.0, dispersion=None, threads=1,
                    outputs=("fidelity",)):
    """Outer (L, sigma1) grid of inner (l_c, R_i) fidelity maps.

    Returns the flat result and a dict ``{(L, sigma1): SweepResult}``.
    """
    if lc_values is None:
        lc_values = tuple(np.linspace(20.0, 80.0, 7))
    if Ri_values is None:
        Ri_values = tuple(np.linspace(0.70, 0.95, 6))
    for name, vals in (("L", L_values), ("sigma1", sigma1_values), ("lc", lc_values), ("Ri", Ri_values)):
        if not all(v > 0 for v in vals):
            raise PlanError(f"{name} values must be positive")
    plan = SweepPlan(
        axes=(Axis("sfwm.lc_um", tuple(float(v) for v in lc_values)), Axis("sfwm.Ri", tuple(float(v) for v in Ri_values))),
        outer=(Axis("dfg.L_um", tuple(float(v) for v in L_values)),
               Axis("sfwm.sigma1_THz", tuple(float(v) for v in sigma1_values))),
        overrides={"dfg.sigma2_THz": sigma2_THz, "sfwm.sigmaf_THz": sigmaf_THz},
        outputs=tuple(outputs), name="fidelity-matrix")
    flat = run_sweep(plan, config, dispersion, threads)
    cells = {(L, s1): flat.select(L_um=L, sigma1_THz=s1) for L in plan.outer[0].values for s1 in plan.outer[1].values}
    return flat, cells


def threshold_interval(x, y, level):
    """Width and bounds of the longest contiguous run with ``y > level``.

    Bounds are located by linear interpolation between the last point inside
    and the first point outside the run; a run reaching the grid edge stops
    at the edge.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    above = np.isfinite(y) & (y > level)
    best = None
    i = 0
    while i < x.size:
        if above[i]:
            j = i
            while j + 1 < x.size and above[j + 1]:
                j += 1
            lo = x[i] if i == 0 or not np.isfinite(y[i - 1]) else \
                x[i - 1] + (level - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
            hi = x[j] if j == x.size - 1 or not np.isfinite(y[j + 1]) else \
                x[j] + (level - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
            if best is None or hi - lo > best[0]:
                best = (hi - lo, lo, hi)
            i = j + 1
        else:
            i += 1
    return best if best is not None else (0.0, float("nan"), float("nan"))
