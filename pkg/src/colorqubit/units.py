"""Global unit system: lengths in um, time in ps, angular frequency in rad/ps."""
import numpy as np

C_UM_PER_PS = 299.792458
TWO_PI = 2.0 * np.pi


def wavelength_to_omega(wavelength_um):
    return TWO_PI * C_UM_PER_PS / np.asarray(wavelength_um, dtype=float)


def omega_to_wavelength(omega):
    return TWO_PI * C_UM_PER_PS / np.asarray(omega, dtype=float)


def thz_to_rad_per_ps(f_thz):
    """Ordinary frequency (THz) to angular frequency (rad/ps)."""
    return TWO_PI * np.asarray(f_thz, dtype=float)


def rad_per_ps_to_thz(omega):
    return np.asarray(omega, dtype=float) / TWO_PI
