"""Phase mismatch of SFWM and DFG, the geometry objective and its minimizer."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from skimage.measure import find_contours

from .dispersion import DispersionModel
from .errors import CutoffError, DomainError, RootError, SearchError
from .units import C_UM_PER_PS, omega_to_wavelength, wavelength_to_omega


@dataclass(frozen=True)
class ProcessSpec:
    """Central wavelengths (um) of one process; derived fields follow energy conservation.

    SFWM: omega_i = 2 omega_1 - omega_s.  DFG: omega_r = omega_1 - omega_2 + omega_s.
    """

    kind: str
    lambda1: float
    lambdas: float
    lambda2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("SFWM", "DFG"):
            raise DomainError(f"unknown process kind {self.kind!r}")
        if self.kind == "DFG" and self.lambda2 is None:
            raise DomainError("DFG process needs lambda2")
        if self.derived_omega <= 0:
            raise DomainError(f"{self.kind}: derived frequency is not positive")

    @property
    def omega1(self):
        return float(wavelength_to_omega(self.lambda1))

    @property
    def omegas(self):
        return float(wavelength_to_omega(self.lambdas))

    @property
    def omega2(self):
        return float(wavelength_to_omega(self.lambda2))

    @property
    def derived_omega(self):
        if self.kind == "SFWM":
            return 2 * self.omega1 - self.omegas
        return self.omega1 - self.omega2 + self.omegas

    @property
    def derived_wavelength(self):
        return float(omega_to_wavelength(self.derived_omega))


def process_pair(lambda1, lambdas, lambda2):
    return ProcessSpec("SFWM", lambda1, lambdas), ProcessSpec("DFG", lambda1, lambdas, lambda2)


@dataclass(frozen=True)
class PhasematchResult:
    delta_k: float
    contributions: dict = field(default_factory=dict)


def _k(model, omega, name):
    try:
        return model.propagation_constant(omega)
    except CutoffError as exc:
        raise CutoffError(f"field {name}: {exc}", geometry=exc.geometry,
                          wavelength=exc.wavelength, field=name) from None


def delta_k_sfwm(model: DispersionModel, omega1, omegas) -> PhasematchResult:
    """Linear SFWM mismatch ``2 k(w1) - k(ws) - k(wi)`` with ``wi = 2 w1 - ws``."""
    omegai = 2 * omega1 - omegas
    if omegai <= 0:
        raise DomainError("idler frequency 2*omega1 - omegas must be positive")
    contrib = {
        "pump": 2 * _k(model, omega1, "pump"),
        "signal": -_k(model, omegas, "signal"),
        "idler": -_k(model, omegai, "idler"),
    }
    return PhasematchResult(sum(contrib.values()), contrib)


def delta_k_dfg(model: DispersionModel, omega1, omega2, omegas) -> PhasematchResult:
    """DFG mismatch ``k(w1) - k(w2) + k(ws) - k(wr)`` with ``wr = w1 - w2 + ws``."""
    omegar = omega1 - omega2 + omegas
    if omegar <= 0:
        raise DomainError("converted frequency omega1 - omega2 + omegas must be positive")
    contrib = {
        "pump1": _k(model, omega1, "pump1"),
        "pump2": -_k(model, omega2, "pump2"),
        "signal": _k(model, omegas, "signal"),
        "converted": -_k(model, omegar, "converted"),
    }
    return PhasematchResult(sum(contrib.values()), contrib)


def _mismatch_scan(base: DispersionModel, height, widths, omegas_signed):
    """Mismatch for every width; ``omegas_signed`` is a list of (omega, sign)."""
    model = base.with_height(height)
    om = np.array([o for o, _ in omegas_signed])
    sign = np.array([s for _, s in omegas_signed], dtype=float)
    neff = model.scan_widths(omega_to_wavelength(om), widths)
    k = neff * om[None, :] / C_UM_PER_PS
    return k @ sign


def _sfwm_terms(spec: ProcessSpec):
    return [(spec.omega1, 2.0), (spec.omegas, -1.0), (spec.derived_omega, -1.0)]


def _dfg_terms(spec: ProcessSpec):
    return [(spec.omega1, 1.0), (spec.omega2, -1.0), (spec.omegas, 1.0), (spec.derived_omega, -1.0)]


def objective(base: DispersionModel, height, w_sfwm, w_dfg, processes):
    """Sum of squared mismatches; ``inf`` when any field is cut off."""
    sfwm, dfg = processes
    dks = _mismatch_scan(base, height, [w_sfwm], _sfwm_terms(sfwm))[0]
    dkd = _mismatch_scan(base, height, [w_dfg], _dfg_terms(dfg))[0]
    f = dks * dks + dkd * dkd
    return float(f) if np.isfinite(f) else float("inf")


def objective_surface(base: DispersionModel, height, w_sfwm_grid, w_dfg_grid, processes):
    """F_obj on the (w_sfwm, w_dfg) grid at fixed height; non-finite at cutoff."""
    sfwm, dfg = processes
    dks = _mismatch_scan(base, height, w_sfwm_grid, _sfwm_terms(sfwm))
    dkd = _mismatch_scan(base, height, w_dfg_grid, _dfg_terms(dfg))
    return dks[:, None] ** 2 + dkd[None, :] ** 2


@dataclass(frozen=True)
class GeometrySearchSpace:
    h_range: tuple = (0.3, 0.9)
    h_step: float = 0.025
    w_sfwm_range: tuple = (0.6, 2.2)
    w_sfwm_step: float = 0.002
    w_dfg_range: tuple = (0.6, 2.2)
    w_dfg_step: float = 0.002
    tolerance: float = 1e-5

    def __post_init__(self):
        for name in ("h", "w_sfwm", "w_dfg"):
            lo, hi = getattr(self, f"{name}_range")
            if not (0 < lo <= hi):
                raise DomainError(f"search range for {name} is empty or non-positive")
            if not getattr(self, f"{name}_step") > 0:
                raise DomainError(f"search step for {name} must be positive")

    @staticmethod
    def _axis(lo, hi, step):
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)

    @property
    def heights(self):
        return self._axis(*self.h_range, self.h_step)

    @property
    def w_sfwm(self):
        return self._axis(*self.w_sfwm_range, self.w_sfwm_step)

    @property
    def w_dfg(self):
        return self._axis(*self.w_dfg_range, self.w_dfg_step)


@dataclass(frozen=True)
class GeometryResult:
    height: float
    w_sfwm: float
    w_dfg: float
    fobj: float
    grid_fobj: float


def _grid_best(base, space, processes, heights):
    sfwm, dfg = processes
    best = None
    per_height = []
    for h in heights:
        dks2 = _mismatch_scan(base, h, space.w_sfwm, _sfwm_terms(sfwm)) ** 2
        dkd2 = _mismatch_scan(base, h, space.w_dfg, _dfg_terms(dfg)) ** 2
        if not (np.isfinite(dks2).any() and np.isfinite(dkd2).any()):
            per_height.append((h, np.inf, np.nan, np.nan))
            continue
        i = int(np.nanargmin(np.where(np.isfinite(dks2), dks2, np.nan)))
        j = int(np.nanargmin(np.where(np.isfinite(dkd2), dkd2, np.nan)))
        f = float(dks2[i] + dkd2[j])
        per_height.append((h, f, space.w_sfwm[i], space.w_dfg[j]))
        if best is None or f < best[0]:
            best = (f, h, space.w_sfwm[i], space.w_dfg[j])
    return best, per_height


def _refine(base, space, processes, start, fix_height):
    def fun(x):
        h, ws, wd = (start[0], *x) if fix_height else x
        return objective(base, h, ws, wd, processes)

    x0 = np.array(start[1:] if fix_height else start, dtype=float)
    bounds = [space.w_sfwm_range, space.w_dfg_range]
    if not fix_height:
        bounds = [space.h_range] + bounds
    steps = [space.w_sfwm_step, space.w_dfg_step] if fix_height else [space.h_step, space.w_sfwm_step, space.w_dfg_step]
    simplex = np.vstack([x0] + [x0 + np.eye(x0.size)[k] * steps[k] for k in range(x0.size)])
    res = minimize(fun, x0, method="Nelder-Mead", bounds=bounds,
                   options={"xatol": space.tolerance, "fatol": 1e-30, "initial_simplex": simplex,
                            "maxiter": 4000, "maxfev": 8000})
    x = res.x if res.fun <= fun(x0) else x0
    if fix_height:
        return (start[0], float(x[0]), float(x[1])), float(min(res.fun, fun(x0)))
    return (float(x[0]), float(x[1]), float(x[2])), float(min(res.fun, fun(x0)))


def minimize_geometry(space: GeometrySearchSpace, processes, base: DispersionModel, refine=True):
    """Coarse grid scan then simplex refinement from the best grid cell."""
    heights = space.heights
    best, _ = _grid_best(base, space, processes, heights)
    if best is None or not np.isfinite(best[0]):
        raise SearchError("no guided point anywhere in the geometry search space")
    grid_f, h, ws, wd = best
    if not refine:
        return GeometryResult(float(h), float(ws), float(wd), grid_f, grid_f)
    fix_height = heights.size == 1
    (h, ws, wd), f = _refine(base, space, processes, (h, ws, wd), fix_height)
    return GeometryResult(h, ws, wd, f, grid_f)


def objective_vs_height(space: GeometrySearchSpace, processes, base: DispersionModel, refine=True):
    """Minimum of the objective over both widths at every height of the space."""
    _, per_height = _grid_best(base, space, processes, space.heights)
    rows = []
    for h, f, ws, wd in per_height:
        if refine and np.isfinite(f):
            (h, ws, wd), f = _refine(base, space, processes, (h, ws, wd), True)
        rows.append((float(h), float(ws), float(wd), float(f)))
    return rows


def _k_masked(model: DispersionModel, omega):
    om = np.asarray(omega, dtype=float)
    lo, hi = model.omega_band
    ok = (om > lo) & (om < hi) & np.isfinite(om)
    out = np.full(om.shape, np.nan)
    if ok.any():
        lam = omega_to_wavelength(om[ok])
        out[ok] = model._neff(lam) * om[ok] / C_UM_PER_PS
    return out


def mismatch_maps(sfwm_model, dfg_model, lambda1_axis, lambdas_axis, lambda2):
    """Delta-k maps of both processes on the (lambda1, lambdas) plane; shape (n1, ns)."""
    o1 = wavelength_to_omega(np.asarray(lambda1_axis, dtype=float))[:, None]
    os_ = wavelength_to_omega(np.asarray(lambdas_axis, dtype=float))[None, :]
    o2 = float(wavelength_to_omega(lambda2))
    O1, OS = np.broadcast_arrays(o1, os_)
    dks = 2 * _k_masked(sfwm_model, O1) - _k_masked(sfwm_model, OS) - _k_masked(sfwm_model, 2 * O1 - OS)
    dkd = (_k_masked(dfg_model, O1) - _k_masked(dfg_model, np.full(O1.shape, o2))
           + _k_masked(dfg_model, OS) - _k_masked(dfg_model, O1 - o2 + OS))
    return dks, dkd, O1, OS


def _polylines(field_, x_axis, y_axis):
    mask = np.isfinite(field_)
    if mask.sum() < 4:
        return []
    filled = np.where(mask, field_, 0.0)
    lines = []
    for c in find_contours(filled, 0.0, mask=mask):
        x = np.interp(c[:, 0], np.arange(x_axis.size), x_axis)
        y = np.interp(c[:, 1], np.arange(y_axis.size), y_axis)
        lines.append(np.column_stack([x, y]))
    return lines


def phasematch_contour(sfwm_model, dfg_model, lambda1_axis, lambdas_axis, lambda2):
    """Zero contours of both mismatches as polylines of (lambda1, lambdas) in um.

    The SFWM mismatch has a double zero on the degenerate line; contours are
    traced on ``dk / (ws - w1)`` which keeps that line as a simple zero.
    """
    x = np.asarray(lambda1_axis, dtype=float)
    y = np.asarray(lambdas_axis, dtype=float)
    dks, dkd, O1, OS = mismatch_maps(sfwm_model, dfg_model, x, y, lambda2)
    detune = OS - O1
    with np.errstate(invalid="ignore", divide="ignore"):
        reduced = np.where(detune == 0.0, 0.0, dks / np.where(detune == 0.0, 1.0, detune))
    reduced = np.where(np.isfinite(dks), reduced, np.nan)
    return {"sfwm": _polylines(reduced, x, y), "dfg": _polylines(dkd, x, y)}


def rephasematch(sfwm_model, dfg_model, lambda2, seed, tol=1e-9, max_iter=60, step=1e-3):
    """Solve both mismatches to zero for (lambda1, lambdas) at fixed lambda2.

    Damped Newton on the two-dimensional system in angular frequency,
    finite-difference Jacobian, started from ``seed`` = (lambda1, lambdas).
    """
    o2 = float(wavelength_to_omega(lambda2))

    def resid(x):
        o1, os_ = x
        return np.array([delta_k_sfwm(sfwm_model, o1, os_).delta_k,
                         delta_k_dfg(dfg_model, o1, o2, os_).delta_k])

    x = wavelength_to_omega(np.asarray(seed, dtype=float)).astype(float)
    try:
        r = resid(x)
        for _ in range(max_iter):
            if np.max(np.abs(r)) < tol:
                lam = omega_to_wavelength(x)
                return float(lam[0]), float(lam[1])
            jac = np.empty((2, 2))
            for j in range(2):
                e = np.zeros(2)
                e[j] = step
                jac[:, j] = (resid(x + e) - resid(x - e)) / (2 * step)
            dx = np.linalg.solve(jac, -r)
            lam_ = 1.0
            norm0 = np.linalg.norm(r)
            while lam_ > 1e-4:
                trial = x + lam_ * dx
                try:
                    rt = resid(trial)
                except (CutoffError, DomainError):
                    rt = None
                if rt is not None and np.linalg.norm(rt) < norm0:
                    x, r = trial, rt
                    break
                lam_ *= 0.5
            else:
                break
    except (CutoffError, DomainError, np.linalg.LinAlgError) as exc:
        raise RootError(f"re-phasematching failed: {exc}") from None
    raise RootError(f"re-phasematching did not converge (|dk| = {np.max(np.abs(r)):.3g} rad/um)")
