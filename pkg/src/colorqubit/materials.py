"""Sellmeier material models.

Only the two materials of the device stack ship built in: stoichiometric
silicon nitride (Luke et al., Opt. Lett. 40, 4823 (2015)) and fused silica
(Malitson, JOSA 55, 1205 (1965)).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class MaterialModel:
    """Three-term Sellmeier model ``n^2 = 1 + sum B_i l^2 / (l^2 - C_i)``.

    ``sellmeier_c`` holds resonance wavelengths *squared* (um^2) and
    ``valid_range`` the closed wavelength interval (um) where the fit holds.
    """

    name: str
    sellmeier_b: tuple
    sellmeier_c: tuple
    valid_range: tuple

    def __post_init__(self):
        if len(self.sellmeier_b) != 3 or len(self.sellmeier_c) != 3:
            raise ValueError(f"{self.name}: Sellmeier model needs exactly three terms")
        lo, hi = self.valid_range
        if not 0 < lo < hi:
            raise ValueError(f"{self.name}: invalid range {self.valid_range}")

    def index(self, wavelength):
        return sellmeier_index(self, wavelength)


def sellmeier_index(material: MaterialModel, wavelength):
    """Refractive index of ``material`` at ``wavelength`` (um); array-aware."""
    lam = np.asarray(wavelength, dtype=float)
    lo, hi = material.valid_range
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        bad = lam[(lam < lo) | (lam > hi) | ~np.isfinite(lam)] if lam.ndim else lam
        raise DomainError(
            f"wavelength {np.ravel(bad)[0]!r} um outside the valid range "
            f"[{lo}, {hi}] um of material {material.name!r}"
        )
    l2 = lam * lam
    n2 = 1.0
    for b, c in zip(material.sellmeier_b, material.sellmeier_c):
        if b != 0.0:
            n2 = n2 + b * l2 / (l2 - c)
    n = np.sqrt(n2)
    return float(n) if n.ndim == 0 else n


SI3N4 = MaterialModel(
    name="Si3N4",
    sellmeier_b=(3.0249, 40314.0, 0.0),
    sellmeier_c=(0.1353406**2, 1239.842**2, 0.0),
    valid_range=(0.31, 5.504),
)

SIO2 = MaterialModel(
    name="SiO2",
    sellmeier_b=(0.6961663, 0.4079426, 0.8974794),
    sellmeier_c=(0.0684043**2, 0.1162414**2, 9.896161**2),
    valid_range=(0.21, 3.71),
)

BUILTIN = {m.name: m for m in (SI3N4, SIO2)}


def get_material(name: str) -> MaterialModel:
    try:
        return BUILTIN[name]
    except KeyError:
        raise DomainError(f"unknown material {name!r}; known: {sorted(BUILTIN)}") from None
