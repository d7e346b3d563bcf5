"""DFG gate algebra in the temporal-mode basis of the mapping function.

States live in the span of the MF Schmidt pairs: index ``j`` of a length-2r
vector is the signal mode phi_j, index ``r + j`` the converted mode psi_j.
Weight outside that span passes through the gate untouched and is tracked
as a scalar remainder.
"""
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError
from .schmidt import SchmidtDecomposition


@dataclass(frozen=True)
class GateParameters:
    """DFG gate settings.

    ``gamma_dfg`` keeps the device-table value in 1/mW; the calibration
    constant ``epsilon`` absorbs every remaining unit and prefactor, so
    ``theta = epsilon sqrt(C) L gamma sqrt(P1 P2 / (sigma1 sigma2))`` is
    dimensionless with L in um and sigma in rad/ps.
    """

    length: float
    gamma_dfg: float
    sigma1: float
    sigma2: float
    p1_mW: float = 0.0
    p2_mW: float = 0.0
    nu: float = 0.0
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError("DFG length must be positive")
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ConfigError("pump bandwidths must be positive")
        if self.p1_mW < 0 or self.p2_mW < 0:
            raise ConfigError("pump powers must be non-negative")

    def with_(self, **changes):
        d = asdict(self)
        d.update(changes)
        return GateParameters(**d)


def _require_epsilon(gate):
    if gate.epsilon is None:
        raise ConfigError("epsilon is not set; run calibrate_epsilon (or set dfg.epsilon in the config)")
    return gate.epsilon


def coupling_angles(decomp: SchmidtDecomposition, gate: GateParameters):
    """Complex coupling constants theta_j; |theta_j| is the half-angle, arg the axis."""
    eps = _require_epsilon(gate)
    scale = eps * gate.length * gate.gamma_dfg * np.sqrt(gate.p1_mW * gate.p2_mW / (gate.sigma1 * gate.sigma2))
    return scale * np.sqrt(decomp.coefficients) * np.exp(1j * gate.nu)


def min_power_product(decomp: SchmidtDecomposition, gate: GateParameters):
    """Pump power product (mW^2) giving |theta_1| = pi/2, i.e. full conversion."""
    eps = _require_epsilon(gate)
    c1 = float(decomp.coefficients[0])
    return (np.pi / (2 * eps * np.sqrt(c1) * gate.length * gate.gamma_dfg)) ** 2 * gate.sigma1 * gate.sigma2


def calibrate_epsilon(decomp: SchmidtDecomposition, gate: GateParameters, power_product=8.3,
                      angle=np.pi / 2):
    """epsilon such that |theta_1| equals ``angle`` at the pump power product ``power_product``."""
    if not power_product > 0:
        raise ConfigError("calibration power product must be positive")
    c1 = float(decomp.coefficients[0])
    if c1 <= 0:
        raise ContractError("leading Schmidt coefficient is zero; cannot calibrate")
    return angle / (np.sqrt(c1) * gate.length * gate.gamma_dfg * np.sqrt(power_product / (gate.sigma1 * gate.sigma2)))


@dataclass(frozen=True)
class BlockRotation:
    """Block-diagonal rotation about the xy-plane axis at angle ``nu``."""

    nu: float
    angles: np.ndarray  # the 2*theta_j

    @property
    def blocks(self):
        half = 0.5 * np.asarray(self.angles, dtype=float)
        c, s = np.cos(half), np.sin(half)
        out = np.empty((half.size, 2, 2), dtype=complex)
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -1j * s * np.exp(-1j * self.nu)
        out[:, 1, 0] = -1j * s * np.exp(1j * self.nu)
        return out

    def matrix(self):
        """Dense operator on the (phi_1..phi_r, psi_1..psi_r) basis."""
        b = self.blocks
        r = b.shape[0]
        m = np.zeros((2 * r, 2 * r), dtype=complex)
        idx = np.arange(r)
        m[idx, idx] = b[:, 0, 0]
        m[idx, r + idx] = b[:, 0, 1]
        m[r + idx, idx] = b[:, 1, 0]
        m[r + idx, r + idx] = b[:, 1, 1]
        return m

    def apply(self, state):
        r = self.blocks.shape[0]
        state = np.asarray(state, dtype=complex)
        b = self.blocks
        a, c = state[:r], state[r:]
        return np.concatenate([b[:, 0, 0] * a + b[:, 0, 1] * c, b[:, 1, 0] * a + b[:, 1, 1] * c])


def rotation_operator(nu, angles) -> BlockRotation:
    return BlockRotation(float(nu), np.atleast_1d(np.asarray(angles, dtype=float)))


def input_overlaps(h, decomp: SchmidtDecomposition, axis=None):
    """O_j = int phi_j*(w) h(w) dw for an amplitude sampled on the MF signal axis."""
    h = np.asarray(h, dtype=complex)
    if h.shape != decomp.axis_a.shape or (axis is not None and not np.allclose(axis, decomp.axis_a, rtol=0, atol=1e-9)):
        raise ContractError("input amplitude and MF decomposition use different signal grids")
    return decomp.modes_a.conj() @ h * decomp.step_a


@dataclass(frozen=True)
class QubitOutput:
    theta: np.ndarray
    overlaps: np.ndarray
    alpha: complex
    beta: complex
    x: np.ndarray
    y: np.ndarray
    norm: float
    fidelity: float
    out_of_span: float
    fidelity_uncertainty: float
    nu: float
    kind: str = "pure"
    extra: dict = field(default_factory=dict)

    @property
    def spurious_weight(self):
        return float(np.sum(np.abs(self.x) ** 2) + np.sum(np.abs(self.y) ** 2))

    def record(self):
        """Flat ``key -> value`` mapping with JSON-compatible values."""
        rec = {
            "kind": self.kind,
            "nu_rad": float(self.nu),
            "fidelity": float(self.fidelity),
            "fidelity_uncertainty": float(self.fidelity_uncertainty),
            "theta1_abs": float(abs(self.theta[0])),
            "theta_abs": [float(abs(t)) for t in self.theta],
            "alpha_re": float(np.real(self.alpha)),
            "alpha_im": float(np.imag(self.alpha)),
            "beta_re": float(np.real(self.beta)),
            "beta_im": float(np.imag(self.beta)),
            "alpha_abs2": float(abs(self.alpha) ** 2),
            "beta_abs2": float(abs(self.beta) ** 2),
            "overlap1_abs2": float(abs(self.overlaps[0]) ** 2),
            "overlaps_abs": [float(abs(o)) for o in self.overlaps],
            "spurious_weight": self.spurious_weight,
            "out_of_span": float(self.out_of_span),
            "norm": float(self.norm),
        }
        rec.update(self.extra)
        return rec

    def report(self):
        lines = []
        for key, value in self.record().items():
            if isinstance(value, list):
                value = " ".join(f"{v:.10g}" for v in value)
            elif isinstance(value, float):
                value = f"{value:.10g}"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(self.record(), indent=2, sort_keys=True)


def _ideal_state(r, theta1, nu):
    ideal = np.zeros(2 * r, dtype=complex)
    ideal[0] = np.cos(theta1)
    ideal[r] = -1j * np.exp(1j * nu) * np.sin(theta1)
    return ideal


def evolve_pure(h, decomp: SchmidtDecomposition, gate: GateParameters) -> QubitOutput:
    """Evolve a pure single-photon amplitude ``h`` (on the MF signal axis)."""
    h = np.asarray(h, dtype=complex)
    h_norm = float(np.sum(np.abs(h) ** 2) * decomp.step_a)
    if abs(h_norm - 1.0) > 1e-10:
        raise ContractError(f"input amplitude must be unit-norm (got {h_norm:.12g})")
    overlaps = input_overlaps(h, decomp)
    theta = coupling_angles(decomp, gate)
    r = decomp.rank
    out_of_span = max(0.0, 1.0 - float(np.sum(np.abs(overlaps) ** 2)))
    state = np.concatenate([overlaps, np.zeros(r, dtype=complex)])
    out = rotation_operator(gate.nu, 2 * np.abs(theta)).apply(state)
    norm = 1.0 / np.sqrt(float(np.sum(np.abs(out) ** 2)) + out_of_span)
    ideal = _ideal_state(r, abs(theta[0]), gate.nu)
    fidelity = float(abs(np.vdot(ideal, out) * norm) ** 2)
    return QubitOutput(
        theta=theta, overlaps=overlaps, alpha=complex(out[0]), beta=complex(out[r]),
        x=out[1:r].copy(), y=out[r + 1:].copy(), norm=float(norm),
        fidelity=min(max(fidelity, 0.0), 1.0), out_of_span=out_of_span,
        fidelity_uncertainty=decomp.residual + out_of_span, nu=float(gate.nu),
    )


def heralded_density(jsa_decomp: SchmidtDecomposition, mf_decomp: SchmidtDecomposition):
    """Heralded signal density in the MF signal-mode basis and the out-of-span remainder."""
    if jsa_decomp.axis_a.shape != mf_decomp.axis_a.shape or not np.allclose(
            jsa_decomp.axis_a, mf_decomp.axis_a, rtol=0, atol=1e-9):
        raise ContractError("JSA and MF signal axes differ")
    # O[m, j] = <phi_j^MF | phi_m^JSA>
    o = jsa_decomp.modes_a @ mf_decomp.modes_a.conj().T * mf_decomp.step_a
    d = jsa_decomp.coefficients
    rho = np.einsum("m,mj,mk->jk", d, o, o.conj())
    remainder = max(0.0, 1.0 - float(np.real(np.trace(rho))))
    return rho, o, remainder


def evolve_heralded(jsa_decomp: SchmidtDecomposition, mf_decomp: SchmidtDecomposition,
                    gate: GateParameters) -> QubitOutput:
    """Evolve the mixed heralded signal state; fidelity is <ideal|rho_out|ideal>."""
    rho_s, o, remainder = heralded_density(jsa_decomp, mf_decomp)
    r = mf_decomp.rank
    theta = coupling_angles(mf_decomp, gate)
    rho = np.zeros((2 * r, 2 * r), dtype=complex)
    rho[:r, :r] = rho_s
    u = rotation_operator(gate.nu, 2 * np.abs(theta)).matrix()
    rho_out = u @ rho @ u.conj().T
    ideal = _ideal_state(r, abs(theta[0]), gate.nu)
    fidelity = float(np.real(np.vdot(ideal, rho_out @ ideal)))
    pops = np.real(np.diag(rho_out))
    # amplitudes of the dominant heralded mode, for reporting
    lead = np.concatenate([o[0], np.zeros(r, dtype=complex)])
    lead_out = u @ lead
    return QubitOutput(
        theta=theta, overlaps=o[0].copy(), alpha=complex(lead_out[0]), beta=complex(lead_out[r]),
        x=lead_out[1:r].copy(), y=lead_out[r + 1:].copy(), norm=1.0,
        fidelity=min(max(fidelity, 0.0), 1.0), out_of_span=remainder,
        fidelity_uncertainty=mf_decomp.residual + remainder, nu=float(gate.nu), kind="heralded",
        extra={"population_signal": float(np.sum(pops[:r])), "population_converted": float(np.sum(pops[r:])),
               "jsa_residual": float(jsa_decomp.residual)},
    )
