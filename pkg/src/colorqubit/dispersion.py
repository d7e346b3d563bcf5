"""Waveguide dispersion: effective-index method and tabulated mode-solver data.

Every model maps a wavelength (um) to the effective index of the fundamental
quasi-TE mode and, through ``k = n_eff * omega / c``, an angular frequency
(rad/ps) to a propagation constant (rad/um).
"""
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import CutoffError, DomainError, TableParseError
from .materials import SI3N4, SIO2, MaterialModel
from .units import C_UM_PER_PS, TWO_PI, omega_to_wavelength

TABLE_HEADER = "# neff-table v1"
DERIVATIVE_STEP = 1e-3  # rad/ps


@dataclass(frozen=True)
class WaveguideGeometry:
    width: float
    height: float
    oxide_height: float = 1.0
    core: MaterialModel = SI3N4
    substrate: MaterialModel = SIO2
    top_cladding_index: float = 1.0

    def __post_init__(self):
        for name in ("width", "height", "oxide_height"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"waveguide {name} must be positive, got {value!r}")

    def with_width(self, width):
        return replace(self, width=float(width))


def eim_effective_index(wavelength, width, height, core=SI3N4, substrate=SIO2, top_index=1.0):
    """Effective index by two sequential slab solves; NaN where not guided.

    Step one solves the vertical film (substrate / core / top cladding, TE);
    step two solves the lateral slab of that index surrounded by the top
    cladding (TM, since the dominant field is normal to the side walls).
    Arguments broadcast against each other.
    """
    lam, w, h = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (wavelength, width, height)))
    shape = lam.shape
    lam, w, h = lam.ravel(), w.ravel(), h.ravel()
    n_core = np.atleast_1d(core.index(lam))
    n_sub = np.atleast_1d(substrate.index(lam))
    n_top = np.full_like(lam, float(top_index))
    k0 = TWO_PI / lam
    n_film = kernels.slab_fundamental_index(k0, n_core, n_sub, n_top, h, False)
    guided = np.isfinite(n_film)
    n_eff = np.full_like(lam, np.nan)
    if guided.any():
        n_eff[guided] = kernels.slab_fundamental_index(
            k0[guided], n_film[guided], n_top[guided], n_top[guided], w[guided], True
        )
    # leaky into the substrate is not a guided solution
    n_eff[~(n_eff > n_sub)] = np.nan
    return n_eff.reshape(shape)


@dataclass(frozen=True)
class KTable:
    """Propagation constant sampled on a uniform frequency grid.

    Node derivatives come from a cubic spline so that Hermite evaluation
    between nodes reproduces that spline.
    """

    origin: float
    step: float
    k: np.ndarray
    dk: np.ndarray

    def __call__(self, omega):
        return kernels.hermite(np.asarray(omega, dtype=float), self.origin, self.step, self.k, self.dk)

    @property
    def stop(self):
        return self.origin + self.step * (self.k.size - 1)


class DispersionModel:
    """Common interface; subclasses implement ``_neff`` and ``with_width``."""

    source = "abstract"
    geometry: WaveguideGeometry

    def _neff(self, wavelength, widths=None):
        raise NotImplementedError

    def with_width(self, width):
        raise NotImplementedError

    def with_height(self, height):
        raise NotImplementedError

    @property
    def wavelength_band(self):
        raise NotImplementedError

    @property
    def omega_band(self):
        lo, hi = self.wavelength_band
        return float(omega_to_wavelength(hi)), float(omega_to_wavelength(lo))

    def effective_index(self, wavelength):
        lam = np.asarray(wavelength, dtype=float)
        lo, hi = self.wavelength_band
        if np.any(lam < lo) or np.any(lam > hi):
            raise DomainError(f"wavelength outside modeled band [{lo}, {hi}] um")
        n = self._neff(lam)
        if np.any(~np.isfinite(n)):
            bad = float(np.ravel(lam)[np.argmax(~np.isfinite(np.ravel(n)))])
            raise CutoffError(
                f"no guided fundamental mode at {bad:.6g} um for {self.describe()}",
                geometry=self.geometry, wavelength=bad,
            )
        return float(n) if np.ndim(n) == 0 else n

    def scan_widths(self, wavelength, widths):
        """n_eff for every (width, wavelength) pair; NaN marks cutoff. Shape (W, L)."""
        return self._neff(np.atleast_1d(np.asarray(wavelength, dtype=float)),
                          widths=np.atleast_1d(np.asarray(widths, dtype=float)))

    def propagation_constant(self, omega):
        om = np.asarray(omega, dtype=float)
        if np.any(om <= 0):
            raise DomainError("angular frequency must be positive")
        n = self.effective_index(omega_to_wavelength(om))
        k = n * om / C_UM_PER_PS
        return float(k) if np.ndim(k) == 0 else k

    def group_index(self, omega, step=DERIVATIVE_STEP):
        """c * dk/domega by central differences with one Richardson step."""
        om = np.asarray(omega, dtype=float)
        k = self.propagation_constant
        d1 = (k(om + step) - k(om - step)) / (2 * step)
        d2 = (k(om + step / 2) - k(om - step / 2)) / step
        return C_UM_PER_PS * (4 * d2 - d1) / 3

    def k_table(self, omega_lo, omega_hi, step=0.25):
        """Uniform-grid table of k over ``[omega_lo, omega_hi]`` (padded by two steps)."""
        n = int(np.ceil((omega_hi - omega_lo) / step)) + 5
        origin = omega_lo - 2 * step
        grid = origin + step * np.arange(n)
        k = self.propagation_constant(grid)
        dk = CubicSpline(grid, k)(grid, 1)
        return KTable(origin=float(origin), step=float(step), k=k, dk=np.asarray(dk))

    def describe(self):
        g = self.geometry
        return f"{self.source} model (w={g.width:.4f} um, h={g.height:.4f} um)"


class EffectiveIndexModel(DispersionModel):
    """Scalar effective-index method over built-in Sellmeier materials."""

    source = "analytic-effective-index"

    def __init__(self, geometry: WaveguideGeometry):
        self.geometry = geometry

    def __repr__(self):
        return f"EffectiveIndexModel({self.geometry!r})"

    @property
    def wavelength_band(self):
        g = self.geometry
        return (max(g.core.valid_range[0], g.substrate.valid_range[0]),
                min(g.core.valid_range[1], g.substrate.valid_range[1]))

    def _neff(self, wavelength, widths=None):
        g = self.geometry
        if widths is None:
            return eim_effective_index(wavelength, g.width, g.height, g.core, g.substrate,
                                       g.top_cladding_index)
        return eim_effective_index(wavelength[None, :], widths[:, None], g.height, g.core,
                                   g.substrate, g.top_cladding_index)

    def with_width(self, width):
        return EffectiveIndexModel(self.geometry.with_width(width))

    def with_height(self, height):
        return EffectiveIndexModel(replace(self.geometry, height=float(height)))

    def core_index(self, wavelength):
        return self.geometry.core.index(wavelength)

    def substrate_index(self, wavelength):
        return self.geometry.substrate.index(wavelength)


@dataclass(frozen=True)
class _Node:
    wavelengths: np.ndarray
    neff: np.ndarray
    spline: CubicSpline = field(repr=False)


class TabulatedModel(DispersionModel):
    """n_eff interpolated from a mode-solver table.

    Cubic spline along wavelength at every tabulated (width, height) node,
    bilinear between nodes.
    """

    source = "tabulated"

    def __init__(self, widths, heights, nodes, geometry=None, path=None):
        self.widths = np.asarray(widths, dtype=float)
        self.heights = np.asarray(heights, dtype=float)
        self._nodes = nodes
        self.path = path
        if geometry is None:
            geometry = WaveguideGeometry(width=float(self.widths[0]), height=float(self.heights[0]))
        self.geometry = geometry
        lo = max(n.wavelengths[0] for n in nodes.values())
        hi = min(n.wavelengths[-1] for n in nodes.values())
        self._band = (float(lo), float(hi))

    def __repr__(self):
        return f"TabulatedModel(path={self.path!r}, geometry={self.geometry!r})"

    @property
    def wavelength_band(self):
        return self._band

    def with_width(self, width):
        return TabulatedModel(self.widths, self.heights, self._nodes,
                              self.geometry.with_width(width), self.path)

    def with_height(self, height):
        return TabulatedModel(self.widths, self.heights, self._nodes,
                              replace(self.geometry, height=float(height)), self.path)

    @staticmethod
    def _bracket(axis, value):
        if axis.size == 1:
            if value != axis[0]:
                return None
            return [(0, 1.0)]
        if value < axis[0] or value > axis[-1]:
            return None
        i = int(np.searchsorted(axis, value, side="right") - 1)
        i = min(i, axis.size - 2)
        t = (value - axis[i]) / (axis[i + 1] - axis[i])
        if t == 0.0:
            return [(i, 1.0)]
        if t == 1.0:
            return [(i + 1, 1.0)]
        return [(i, 1.0 - t), (i + 1, t)]

    def _neff_at(self, wavelength, width, height):
        bw = self._bracket(self.widths, width)
        bh = self._bracket(self.heights, height)
        if bw is None or bh is None:
            return np.full(np.shape(wavelength), np.nan)
        lam = np.asarray(wavelength, dtype=float)
        out = np.zeros(lam.shape)
        for i, tw in bw:
            for j, th in bh:
                node = self._nodes[(i, j)]
                val = node.spline(lam)
                outside = (lam < node.wavelengths[0]) | (lam > node.wavelengths[-1])
                val = np.where(outside, np.nan, val)
                out = out + tw * th * val
        return out

    def _neff(self, wavelength, widths=None):
        g = self.geometry
        if widths is None:
            return self._neff_at(wavelength, g.width, g.height)
        return np.stack([self._neff_at(wavelength, w, g.height) for w in widths])


def import_dispersion_table(path, geometry=None):
    """Read a ``neff-table v1`` file into a :class:`TabulatedModel`."""
    path = Path(path)
    rows = []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if not header_seen:
                if line != TABLE_HEADER:
                    raise TableParseError(f"expected header {TABLE_HEADER!r}, got {line!r}", lineno)
                header_seen = True
                continue
            if line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise TableParseError(f"expected 4 columns, got {len(parts)}", lineno)
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise TableParseError(f"non-numeric entry in {line!r}", lineno) from None
            if not all(np.isfinite(vals)):
                raise TableParseError("NaN or infinite entry", lineno)
            if vals[0] <= 0 or vals[1] <= 0 or vals[2] <= 0 or vals[3] <= 1.0:
                raise TableParseError("non-physical entry (sizes must be > 0, neff > 1)", lineno)
            if rows and tuple(vals[:3]) <= tuple(rows[-1][1][:3]):
                raise TableParseError("rows not strictly sorted by (width, height, wavelength)", lineno)
            rows.append((lineno, vals))
    if not header_seen:
        raise TableParseError(f"empty table, expected header {TABLE_HEADER!r}", 1)
    if not rows:
        raise TableParseError("table contains no data rows", None)

    widths = np.unique([r[1][0] for r in rows])
    heights = np.unique([r[1][1] for r in rows])
    groups = {}
    for lineno, (w, h, lam, n) in rows:
        groups.setdefault((w, h), []).append((lam, n, lineno))
    nodes = {}
    for i, w in enumerate(widths):
        for j, h in enumerate(heights):
            if (w, h) not in groups:
                raise TableParseError(f"missing samples for width {w} height {h}; grid must be rectangular")
            samples = groups[(w, h)]
            if len(samples) < 4:
                raise TableParseError(f"need >= 4 wavelengths at width {w} height {h}", samples[-1][2])
            lam = np.array([s[0] for s in samples])
            n = np.array([s[1] for s in samples])
            nodes[(i, j)] = _Node(lam, n, CubicSpline(lam, n))
    return TabulatedModel(widths, heights, nodes, geometry=geometry, path=str(path))


def write_dispersion_table(path, model: DispersionModel, widths, heights, wavelengths, comment=None):
    """Sample ``model`` on a grid and write a ``neff-table v1`` file."""
    lines = [TABLE_HEADER]
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append("# width_um height_um wavelength_um neff")
    lam = np.sort(np.asarray(wavelengths, dtype=float))
    for w in sorted(widths):
        for h in sorted(heights):
            n = model.with_height(h).with_width(w).effective_index(lam)
            lines.extend(f"{w:.6f} {h:.6f} {l:.9f} {v:.15f}" for l, v in zip(lam, np.atleast_1d(n)))
    Path(path).write_text("\n".join(lines) + "\n")
