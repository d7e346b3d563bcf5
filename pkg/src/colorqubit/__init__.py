"""Design and simulation of a temporal-mode color-qubit gate.

A heralded single photon from a ring-cavity SFWM source is rotated between
two colors by DFG in a second waveguide. The package covers waveguide
dispersion, simultaneous phasematching, joint spectra, Schmidt modes and the
gate algebra, plus sweeps and a command-line front end.
"""
__version__ = "0.1.0"

from .kernels import IMPLEMENTATION

__all__ = ["IMPLEMENTATION", "__version__"]
