"""Single-point device evaluation: geometry, wavelengths, spectra, modes and gate."""
from dataclasses import dataclass, field, replace

import numpy as np

from .config import DeviceConfig
from .dispersion import DispersionModel, EffectiveIndexModel, WaveguideGeometry
from .errors import ColorQubitError
from .gate import GateParameters, calibrate_epsilon, evolve_heralded, evolve_pure, min_power_product
from .materials import get_material
from .phasematch import (GeometryResult, GeometrySearchSpace, delta_k_dfg, delta_k_sfwm,
                         minimize_geometry, process_pair, rephasematch)
from .schmidt import SchmidtDecomposition, purity, schmidt_decompose, schmidt_number
from .spectra import (CavitySpec, FilterSpec, JointAmplitude, PumpSpec, SpectralGrid,
                      dfg_mapping_function, sfwm_jsa)
from .units import thz_to_rad_per_ps, wavelength_to_omega


@dataclass(frozen=True)
class OperatingPoint:
    """Geometry (um) and central wavelengths (um) of both waveguides."""

    height: float
    w_sfwm: float
    w_dfg: float
    lambda1: float
    lambdas: float
    lambda2: float

    @property
    def processes(self):
        return process_pair(self.lambda1, self.lambdas, self.lambda2)

    def omegas(self):
        """(omega1, omegas, omega2, omegai, omegar) in rad/ps."""
        o1, os_, o2 = (float(x) for x in wavelength_to_omega([self.lambda1, self.lambdas, self.lambda2]))
        return o1, os_, o2, 2 * o1 - os_, o1 - o2 + os_


def base_model(config: DeviceConfig, dispersion: DispersionModel = None) -> DispersionModel:
    """Dispersion model at the configured SFWM geometry (imported table if given)."""
    s, m = config.sfwm, config.materials
    if dispersion is not None:
        return dispersion.with_height(s.height_um).with_width(s.width_um)
    geometry = WaveguideGeometry(s.width_um, s.height_um, s.oxide_height_um, get_material(m.core),
                                 get_material(m.substrate), m.top_cladding_index)
    return EffectiveIndexModel(geometry)


def search_space(config: DeviceConfig) -> GeometrySearchSpace:
    v = config.solver
    h_range = (config.sfwm.height_um,) * 2 if v.fix_height else (v.h_min_um, v.h_max_um)
    return GeometrySearchSpace(h_range=h_range, h_step=v.h_step_um, w_sfwm_range=(v.w_min_um, v.w_max_um),
                               w_sfwm_step=v.w_step_um, w_dfg_range=(v.w_min_um, v.w_max_um),
                               w_dfg_step=v.w_step_um, tolerance=v.geometry_tolerance_um)


def resolve_operating_point(config: DeviceConfig, model: DispersionModel):
    """Geometry per ``solver.geometry`` then, if enabled, wavelengths re-solved at fixed lambda2.

    Returns the operating point and the geometry search result (``None`` when
    the configured widths are used as given).
    """
    s, d, v = config.sfwm, config.dfg, config.solver
    search = None
    if v.geometry == "design":
        search = minimize_geometry(search_space(config), process_pair(s.lambda1_um, s.lambdas_um, d.lambda2_um),
                                   model)
        h, ws, wd = float(search.height), float(search.w_sfwm), float(search.w_dfg)
    else:
        h, ws, wd = s.height_um, s.width_um, d.width_um
    lam1, lams = s.lambda1_um, s.lambdas_um
    if v.rephasematch:
        mh = model.with_height(h)
        lam1, lams = rephasematch(mh.with_width(ws), mh.with_width(wd), d.lambda2_um, (lam1, lams),
                                  tol=v.rephasematch_tol)
    return OperatingPoint(h, ws, wd, lam1, lams, d.lambda2_um), search


def pin_operating_point(config: DeviceConfig, point: OperatingPoint) -> DeviceConfig:
    """Config whose geometry and wavelengths are ``point`` and which skips both solvers."""
    return config.with_values({
        "sfwm.height_um": point.height, "sfwm.width_um": point.w_sfwm, "dfg.width_um": point.w_dfg,
        "sfwm.lambda1_um": point.lambda1, "sfwm.lambdas_um": point.lambdas, "dfg.lambda2_um": point.lambda2,
        "solver.geometry": "config", "solver.rephasematch": False,
    })


def point_from_config(config: DeviceConfig) -> OperatingPoint:
    s, d = config.sfwm, config.dfg
    return OperatingPoint(s.height_um, s.width_um, d.width_um, s.lambda1_um, s.lambdas_um, d.lambda2_um)


@dataclass(frozen=True)
class Grids:
    jsa: SpectralGrid
    mf: SpectralGrid


def spectral_grids(config: DeviceConfig, point: OperatingPoint, ring: DispersionModel) -> Grids:
    """Shared signal axis for both joint functions, idler axis resolving the ring lines.

    The idler axis spans ``span_sigmas * min(sigma1, sigmaf)`` and is refined
    until its spacing is at most 1/``idler_points_per_linewidth`` of the
    resonance FWHM, up to ``max_idler_points``.
    """
    g, s, d = config.grids, config.sfwm, config.dfg
    o1, os_, o2, oi, orr = point.omegas()
    s1, s2, sf = (float(thz_to_rad_per_ps(x)) for x in (s.sigma1_THz, d.sigma2_THz, s.sigmaf_THz))
    half_s = g.span_sigmas * max(s1, s2)
    half_i = g.span_sigmas * min(s1, sf)
    fwhm = CavitySpec(s.lc_um, s.Ri).linewidth(float(ring.group_index(oi)))
    n_i = int(np.ceil(2 * half_i * g.idler_points_per_linewidth / fwhm)) + 1
    n_i = int(min(max(n_i, g.points), g.max_idler_points))
    return Grids(jsa=SpectralGrid(os_, oi, half_s, half_i, g.points, n_i),
                 mf=SpectralGrid(os_, orr, half_s, half_s, g.points, g.points))


@dataclass
class PointEvaluation:
    point: OperatingPoint
    jsa: JointAmplitude
    mf: JointAmplitude
    jsa_modes: SchmidtDecomposition
    mf_modes: SchmidtDecomposition
    gate: GateParameters
    pure: object
    heralded: object
    mismatch: tuple
    extra: dict = field(default_factory=dict)

    @property
    def purity(self):
        return purity(self.jsa_modes)

    @property
    def schmidt_number(self):
        return schmidt_number(self.mf_modes)

    @property
    def fidelity(self):
        return self.heralded.fidelity

    @property
    def min_power_product(self):
        return float(min_power_product(self.mf_modes, self.gate))

    def summary(self):
        p = self.point
        out = {
            "height_um": p.height, "w_sfwm_um": p.w_sfwm, "w_dfg_um": p.w_dfg,
            "lambda1_um": p.lambda1, "lambdas_um": p.lambdas, "lambda2_um": p.lambda2,
            "lambdai_um": p.processes[0].derived_wavelength, "lambdar_um": p.processes[1].derived_wavelength,
            "dk_sfwm_per_um": self.mismatch[0], "dk_dfg_per_um": self.mismatch[1],
            "purity": self.purity, "jsa_rank": self.jsa_modes.rank, "jsa_residual": self.jsa_modes.residual,
            "schmidt_number": self.schmidt_number, "mf_rank": self.mf_modes.rank,
            "mf_residual": self.mf_modes.residual,
            "overlap1": float(abs(self.pure.overlaps[0]) ** 2),
            "fidelity": self.heralded.fidelity, "fidelity_uncertainty": self.heralded.fidelity_uncertainty,
            "fidelity_pure": self.pure.fidelity, "epsilon": self.gate.epsilon,
            "theta1": float(abs(self.heralded.theta[0])), "min_power_product_mW2": self.min_power_product,
            "pair_norm": self.jsa.raw_norm,
        }
        out.update(self.extra)
        return out


def mapping_function(config: DeviceConfig, point: OperatingPoint, grid: SpectralGrid, dfg: DispersionModel,
                     num_threads=1):
    s, d = config.sfwm, config.dfg
    o1, _, o2, _, _ = point.omegas()
    pump1 = PumpSpec(o1, float(thz_to_rad_per_ps(s.sigma1_THz)), d.P1_mW)
    pump2 = PumpSpec(o2, float(thz_to_rad_per_ps(d.sigma2_THz)), d.P2_mW)
    return dfg_mapping_function(grid, pump1, pump2, d.L_um, dfg, nodes=config.grids.mf_nodes,
                                num_threads=num_threads)


def heralding_jsa(config: DeviceConfig, point: OperatingPoint, grid: SpectralGrid, ring: DispersionModel,
                  sigmaf_THz=None):
    s = config.sfwm
    o1, _, _, oi, _ = point.omegas()
    sf = s.sigmaf_THz if sigmaf_THz is None else sigmaf_THz
    pump = PumpSpec(o1, float(thz_to_rad_per_ps(s.sigma1_THz)))
    return sfwm_jsa(grid, pump, CavitySpec(s.lc_um, s.Ri, resonance=oi),
                    FilterSpec(oi, float(thz_to_rad_per_ps(sf))), ring)


def gate_parameters(config: DeviceConfig, epsilon=None) -> GateParameters:
    s, d = config.sfwm, config.dfg
    return GateParameters(length=d.L_um, gamma_dfg=d.gamma_dfg_per_mW,
                          sigma1=float(thz_to_rad_per_ps(s.sigma1_THz)),
                          sigma2=float(thz_to_rad_per_ps(d.sigma2_THz)),
                          p1_mW=d.P1_mW, p2_mW=d.P2_mW, nu=d.nu_rad,
                          epsilon=d.epsilon if epsilon is None else epsilon)


def evaluate_point(config: DeviceConfig, point: OperatingPoint, model: DispersionModel, mf_modes=None,
                   num_threads=1) -> PointEvaluation:
    """Spectra, decompositions and gate output at a fixed operating point.

    ``mf_modes`` reuses a mapping-function decomposition computed for the
    same DFG settings. When ``dfg.epsilon`` is ``auto`` it is calibrated here.
    """
    mh = model.with_height(point.height)
    ring, dfg = mh.with_width(point.w_sfwm), mh.with_width(point.w_dfg)
    grids = spectral_grids(config, point, ring)
    o1, os_, o2, _, _ = point.omegas()
    mismatch = (delta_k_sfwm(ring, o1, os_).delta_k, delta_k_dfg(dfg, o1, o2, os_).delta_k)
    mf = None
    if mf_modes is None:
        mf = mapping_function(config, point, grids.mf, dfg, num_threads)
        mf_modes = schmidt_decompose(mf, config.grids.truncation)
    jsa = heralding_jsa(config, point, grids.jsa, ring)
    jsa_modes = schmidt_decompose(jsa, config.grids.truncation)
    gate = gate_parameters(config)
    if gate.epsilon is None:
        d = config.dfg
        gate = replace(gate, epsilon=float(calibrate_epsilon(mf_modes, gate, d.calibration_power_product_mW2,
                                                             d.calibration_angle_rad)))
    pure = evolve_pure(jsa_modes.modes_a[0], mf_modes, gate)
    heralded = evolve_heralded(jsa_modes, mf_modes, gate)
    return PointEvaluation(point, jsa, mf, jsa_modes, mf_modes, gate, pure, heralded, mismatch)


@dataclass
class DesignResult:
    config: DeviceConfig
    pinned: DeviceConfig
    model: DispersionModel
    search: GeometryResult
    evaluation: PointEvaluation


def run_design(config: DeviceConfig, dispersion: DispersionModel = None, num_threads=1) -> DesignResult:
    """Geometry search, re-phasematching, spectra, decompositions and gate at the design point.

    ``pinned`` is the input config with the resolved geometry, wavelengths and
    epsilon written in; evaluating it reproduces this result without solvers.
    A failure carries the name of the failing stage in its ``stage`` attribute.
    """
    stage = "dispersion"
    try:
        model = base_model(config, dispersion)
        stage = "geometry"
        point, search = resolve_operating_point(config, model)
        pinned = pin_operating_point(config, point)
        stage = "spectra"
        evaluation = evaluate_point(pinned, point, model, num_threads=num_threads)
    except ColorQubitError as exc:
        exc.stage = stage
        raise
    if config.dfg.epsilon is None:
        pinned = pinned.with_values({"dfg.epsilon": evaluation.gate.epsilon})
    return DesignResult(config, pinned, model, search, evaluation)

