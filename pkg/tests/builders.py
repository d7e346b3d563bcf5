"""Small constructors shared by the test modules."""
import numpy as np

from colorqubit.spectra import JointAmplitude, SpectralGrid


def grid(points_a=128, points_b=128, half_a=10.0, half_b=10.0):
    return SpectralGrid(0.0, 0.0, half_a, half_b, points_a, points_b)


def joint(func, g):
    """Normalized joint amplitude of ``func(x[:, None], y[None, :])`` on ``g``."""
    x, y = g.axis_a, g.axis_b
    v = np.asarray(func(x[:, None], y[None, :]), dtype=complex) * np.ones((x.size, y.size))
    v = v / np.sqrt(np.sum(np.abs(v) ** 2) * g.step_a * g.step_b)
    return JointAmplitude(g, v)


def correlated_gaussian(rho):
    return lambda x, y: np.exp(-(x * x + y * y) / 2 - rho * x * y)


def mehler_mu(rho):
    """Ratio mu of consecutive Schmidt amplitudes of exp(-(x^2+y^2)/2 - rho x y)."""
    rho = abs(rho)
    return (1 - np.sqrt(1 - rho * rho)) / rho
