"""Joint spectral amplitude of the ring SFWM source and the DFG mapping function.

Modeled forms (Gaussian pumps, transform limited):

* JSA  F(ws, wi) = alpha_2p(ws + wi) * sinc(dk l_c / 2) exp(i dk l_c / 2) * A(wi) * f(wi)
* MF   G(ws, wr) = int dw' alpha_1(w') alpha_2(w' + ws - wr) sinc(dk L / 2) exp(i dk L / 2)

with alpha(w) = exp(-(w - w0)^2 / (2 sigma^2)), the Airy idler response A and
the Gaussian heralding filter f. Bandwidths are angular (rad/ps); use
:func:`colorqubit.units.thz_to_rad_per_ps` for the THz values of a device table.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .dispersion import DispersionModel, KTable
from .errors import ContractError, DomainError

KTABLE_STEP = 0.25  # rad/ps
MF_NODES = 129
MF_NODE_SPAN = 4.0  # pump-1 bandwidths either side


@dataclass(frozen=True)
class SpectralGrid:
    center_a: float
    center_b: float
    half_span_a: float
    half_span_b: float
    points_a: int = 256
    points_b: int = 256

    def __post_init__(self):
        if self.points_a < 64 or self.points_b < 64:
            raise DomainError("spectral grids need at least 64 points per axis")
        if not (self.half_span_a > 0 and self.half_span_b > 0):
            raise DomainError("grid half-spans must be positive")

    @property
    def axis_a(self):
        return self.center_a + np.linspace(-self.half_span_a, self.half_span_a, self.points_a)

    @property
    def axis_b(self):
        return self.center_b + np.linspace(-self.half_span_b, self.half_span_b, self.points_b)

    @property
    def step_a(self):
        return 2 * self.half_span_a / (self.points_a - 1)

    @property
    def step_b(self):
        return 2 * self.half_span_b / (self.points_b - 1)

    def refined(self, factor=2):
        """Same spans, ``factor`` times the points (minus one) per axis."""
        return SpectralGrid(self.center_a, self.center_b, self.half_span_a, self.half_span_b,
                            (self.points_a - 1) * factor + 1, (self.points_b - 1) * factor + 1)


@dataclass(frozen=True)
class PumpSpec:
    center: float
    bandwidth: float
    power_mW: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError("pump bandwidth must be positive")
        if self.power_mW < 0:
            raise DomainError("pump power must be non-negative")


@dataclass(frozen=True)
class CavitySpec:
    """Ring of round-trip length ``length`` (um) and idler reflectivity.

    ``resonance`` (rad/ps) pins one round-trip resonance at that frequency,
    standing in for thermal/length tuning of the ring; ``None`` leaves the
    bare ``k * l_c`` phase.
    """

    length: float
    reflectivity: float
    resonance: Optional[float] = None

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("cavity length must be positive")
        if not 0 < self.reflectivity < 1:
            raise DomainError("cavity reflectivity must lie in (0, 1)")

    def linewidth(self, group_index):
        """Approximate resonance FWHM (rad/ps) for the given group index."""
        from .units import C_UM_PER_PS
        fsr = 2 * np.pi * C_UM_PER_PS / (group_index * self.length)
        r = self.reflectivity
        return fsr * (1 - r) / (np.pi * np.sqrt(r))


@dataclass(frozen=True)
class FilterSpec:
    center: float
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError("filter bandwidth must be positive")


@dataclass(frozen=True)
class JointAmplitude:
    """Complex joint spectrum on ``grid``; ``raw_norm`` is the pre-normalization weight."""

    grid: SpectralGrid
    values: np.ndarray = field(repr=False)
    normalized: bool = True
    raw_norm: float = 1.0

    def __post_init__(self):
        if self.values.shape != (self.grid.points_a, self.grid.points_b):
            raise ContractError("joint amplitude shape does not match its grid")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("joint amplitude contains NaN or Inf")

    @property
    def weight(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.step_a * self.grid.step_b)

    def intensity(self):
        """|values|^2 scaled to unit maximum (plotting convention)."""
        i = np.abs(self.values) ** 2
        return i / i.max()


def _normalize(grid, values, normalize):
    raw = float(np.sum(np.abs(values) ** 2) * grid.step_a * grid.step_b)
    if normalize:
        if raw == 0:
            raise ContractError("joint amplitude vanishes on the grid")
        values = values / np.sqrt(raw)
    return JointAmplitude(grid, values, normalize, raw)


def pump_envelope(omega, spec: PumpSpec):
    return np.exp(-((np.asarray(omega) - spec.center) ** 2) / (2 * spec.bandwidth**2))


def gaussian_filter(omega, spec: FilterSpec):
    return np.exp(-((np.asarray(omega) - spec.center) ** 2) / (2 * spec.bandwidth**2))


def _as_table(model, lo, hi):
    if isinstance(model, KTable):
        if lo < model.origin or hi > model.stop:
            raise DomainError("requested frequencies fall outside the k table")
        return model
    return model.k_table(lo, hi, KTABLE_STEP)


def airy_cavity(omega, cavity: CavitySpec, model):
    """Unit-peak Airy transfer ``(1 - R) / (1 - R exp(i phi))`` of the ring."""
    om = np.asarray(omega, dtype=float)
    k_of = model.propagation_constant if isinstance(model, DispersionModel) else model
    k = k_of(om)
    k_res = k_of(cavity.resonance) if cavity.resonance is not None else 0.0
    phase = (k - k_res) * cavity.length
    r = cavity.reflectivity
    return (1 - r) / (1 - r * np.exp(1j * phase))


def sfwm_jsa(grid: SpectralGrid, pump: PumpSpec, cavity: CavitySpec, filt: Optional[FilterSpec],
             model, normalize=True) -> JointAmplitude:
    """Cavity-modified SFWM joint amplitude; axis a = signal, axis b = idler.

    ``filt=None`` removes the heralding filter.
    """
    ws = grid.axis_a
    wi = grid.axis_b
    lo = min(ws[0], wi[0], 0.5 * (ws[0] + wi[0]))
    hi = max(ws[-1], wi[-1], 0.5 * (ws[-1] + wi[-1]))
    table = _as_table(model, lo, hi)
    S, I = np.meshgrid(ws, wi, indexing="ij")
    dk = 2 * table(0.5 * (S + I)) - table(ws)[:, None] - table(wi)[None, :]
    x = 0.5 * dk * cavity.length
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(np.abs(x) < 1e-8, 1.0 - x * x / 6.0, np.sin(x) / np.where(x == 0, 1.0, x))
    pair = np.exp(-((S + I - 2 * pump.center) ** 2) / (4 * pump.bandwidth**2))
    idler = airy_cavity(wi, cavity, table)
    if filt is not None:
        idler = idler * gaussian_filter(wi, filt)
    values = pair * sinc * np.exp(1j * x) * idler[None, :]
    return _normalize(grid, values, normalize)


def mf_node_set(pump1: PumpSpec, nodes=MF_NODES, span=MF_NODE_SPAN):
    """Gauss-Legendre nodes over +-span*sigma_1 and weights folded with alpha_1."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = span * pump1.bandwidth
    omega = pump1.center + half * x
    return omega, half * w * pump_envelope(omega, pump1)


def dfg_mapping_function(grid: SpectralGrid, pump1: PumpSpec, pump2: PumpSpec, length, model,
                         nodes=MF_NODES, normalize=True, num_threads=1) -> JointAmplitude:
    """DFG mapping function; axis a = signal (ws), axis b = converted (wr)."""
    if not length > 0:
        raise DomainError("DFG waveguide length must be positive")
    ws = grid.axis_a
    wr = grid.axis_b
    o1, wts = mf_node_set(pump1, nodes)
    o2_lo = o1[0] + ws[0] - wr[-1]
    o2_hi = o1[-1] + ws[-1] - wr[0]
    # pump-2 frequencies beyond 40 bandwidths carry exactly zero weight
    o2_lo = max(o2_lo, pump2.center - 40 * pump2.bandwidth)
    o2_hi = min(o2_hi, pump2.center + 40 * pump2.bandwidth)
    lo = min(ws[0], wr[0], o1[0], o2_lo)
    hi = max(ws[-1], wr[-1], o1[-1], o2_hi)
    table = _as_table(model, lo, hi)
    values = kernels.mf_accumulate(
        np.ascontiguousarray(o1), np.ascontiguousarray(wts), np.ascontiguousarray(table(o1)),
        np.ascontiguousarray(ws), np.ascontiguousarray(table(ws)),
        np.ascontiguousarray(wr), np.ascontiguousarray(table(wr)),
        float(pump2.center), float(pump2.bandwidth), float(length),
        table.origin, table.step, table.k, table.dk, int(num_threads),
    )
    return _normalize(grid, values, normalize)


def mf_direct(omega_s, omega_r, pump1: PumpSpec, pump2: PumpSpec, length, table, nodes=2049):
    """Brute-force MF integrand sum at one point (trapezoid, fine nodes); unnormalized.

    Independent of the kernel path; used to cross-check it.
    """
    half = MF_NODE_SPAN * pump1.bandwidth
    w1 = np.linspace(pump1.center - half, pump1.center + half, nodes)
    w2 = w1 + omega_s - omega_r
    dk = table(w1) - table(w2) + table(omega_s) - table(omega_r)
    x = 0.5 * dk * length
    integrand = pump_envelope(w1, pump1) * pump_envelope(w2, pump2) * np.sinc(x / np.pi) * np.exp(1j * x)
    return np.trapezoid(integrand, w1)
