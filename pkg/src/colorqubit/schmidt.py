"""Schmidt decomposition of discretized joint amplitudes."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .spectra import JointAmplitude

DEFAULT_THRESHOLD = 0.999


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Retained Schmidt pairs of a joint amplitude.

    ``modes_a[m]`` and ``modes_b[m]`` are sampled on ``axis_a``/``axis_b`` and
    orthonormal under the continuous measure (sum |f|^2 d omega = 1).
    ``coefficients`` are descending weights; ``residual`` is the discarded
    weight, so ``coefficients.sum() + residual == 1``.
    """

    coefficients: np.ndarray
    modes_a: np.ndarray = field(repr=False)
    modes_b: np.ndarray = field(repr=False)
    axis_a: np.ndarray = field(repr=False)
    axis_b: np.ndarray = field(repr=False)
    residual: float = 0.0
    singular_values: np.ndarray = field(default=None, repr=False)
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def rank(self):
        return int(self.coefficients.size)

    @property
    def step_a(self):
        return float(self.axis_a[1] - self.axis_a[0])

    @property
    def step_b(self):
        return float(self.axis_b[1] - self.axis_b[0])

    def reconstruct(self):
        return np.einsum("m,mi,mj->ij", self.singular_values[: self.rank], self.modes_a, self.modes_b)

    def transposed(self):
        return SchmidtDecomposition(self.coefficients, self.modes_b, self.modes_a, self.axis_b,
                                    self.axis_a, self.residual, self.singular_values, self.spectrum)


def _fix_phase(u, v):
    """Make the largest-magnitude sample of every row of ``u`` real positive."""
    idx = np.argmax(np.abs(u), axis=1)
    p = u[np.arange(u.shape[0]), idx]
    phase = p / np.abs(p)
    return u / phase[:, None], v * phase[:, None]


def schmidt_decompose(joint: JointAmplitude, threshold=DEFAULT_THRESHOLD) -> SchmidtDecomposition:
    """SVD of the measure-weighted joint amplitude, truncated at cumulative ``threshold``.

    ``threshold >= 1`` keeps every mode.
    """
    weight = joint.weight
    if not joint.normalized or abs(weight - 1.0) > 1e-8:
        raise ContractError(f"joint amplitude must be normalized (weight = {weight:.12g})")
    da, db = joint.grid.step_a, joint.grid.step_b
    u, s, vh = np.linalg.svd(joint.values * np.sqrt(da * db), full_matrices=False)
    spectrum = s**2 / np.sum(s**2)
    if threshold >= 1.0:
        rank = spectrum.size
    else:
        rank = min(int(np.searchsorted(np.cumsum(spectrum), threshold)) + 1, spectrum.size)
    modes_a, modes_b = _fix_phase(u[:, :rank].T / np.sqrt(da), vh[:rank] / np.sqrt(db))
    return SchmidtDecomposition(
        coefficients=spectrum[:rank],
        modes_a=modes_a,
        modes_b=modes_b,
        axis_a=joint.grid.axis_a,
        axis_b=joint.grid.axis_b,
        residual=float(np.sum(spectrum[rank:])),
        singular_values=s,
        spectrum=spectrum,
    )


def purity(decomp: SchmidtDecomposition) -> float:
    """Heralded-state purity, sum of squared retained coefficients."""
    return float(np.sum(decomp.coefficients**2))


def purity_bounds(decomp: SchmidtDecomposition):
    """(lower, upper) purity: discarded weight spread thin vs. lumped in one mode."""
    p = purity(decomp)
    return p, p + decomp.residual**2


def schmidt_number(decomp: SchmidtDecomposition) -> float:
    return 1.0 / float(np.sum(decomp.coefficients**2))


def orthonormality_error(modes, step):
    """Max deviation of the mode Gram matrix from identity."""
    gram = modes.conj() @ modes.T * step
    return float(np.max(np.abs(gram - np.eye(modes.shape[0]))))
