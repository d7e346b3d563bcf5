"""Acceptance criteria, one test per criterion, each recording a PASS/FAIL line.

Tolerances and runtime budgets are fixed constants below; a failing
criterion fails its test.
"""
import time
from importlib import resources

import numpy as np
import pytest

from builders import correlated_gaussian, grid, joint, mehler_mu
from colorqubit.config import DeviceConfig
from colorqubit.dispersion import DispersionModel, EffectiveIndexModel, WaveguideGeometry
from colorqubit.gate import (GateParameters, calibrate_epsilon, coupling_angles, evolve_pure, min_power_product,
                             rotation_operator)
from colorqubit.phasematch import delta_k_dfg, delta_k_sfwm
from colorqubit.pipeline import run_design
from colorqubit.schmidt import orthonormality_error, schmidt_decompose
from colorqubit.sweep import Axis, SweepPlan, parse_plan, run_sweep, threshold_interval
from colorqubit.units import wavelength_to_omega


# -- criterion 1 -------------------------------------------------------------------

def test_criterion_1_schmidt_properties(acceptance_log):
    start = time.perf_counter()
    corr = joint(correlated_gaussian(0.6), grid(201, 201))
    full = schmidt_decompose(corr, threshold=1.0)
    rms = float(np.sqrt(np.mean(np.abs(full.reconstruct() - corr.values) ** 2)))
    kept = schmidt_decompose(corr, threshold=0.999999)
    ortho = max(orthonormality_error(kept.modes_a, kept.step_a), orthonormality_error(kept.modes_b, kept.step_b))
    sep = schmidt_decompose(joint(lambda x, y: np.exp(-x * x / 2 - (y - 1) ** 2 / 3 + 0.4j * y), grid(96, 128)))
    mu = mehler_mu(0.6)
    law = (1 - mu**2) * mu ** (2 * np.arange(5))
    coef_err = float(np.max(np.abs(full.coefficients[:5] - law)))
    runtime = time.perf_counter() - start
    checks = [rms < 1e-10, ortho < 1e-8, sep.rank == 1, coef_err < 1e-4, runtime < 10.0]
    ok = acceptance_log(1, all(checks), f"reconstruction rms {rms:.2e} (<1e-10), orthonormality {ortho:.2e} "
                        f"(<1e-8), separable rank {sep.rank} (=1), geometric-law error {coef_err:.2e} (<1e-4), "
                        f"{runtime:.2f} s (<10 s)")
    assert ok


# -- criterion 2 -------------------------------------------------------------------

class PolynomialModel(DispersionModel):
    """n_eff as a random polynomial in wavelength; an arbitrary smooth dispersion law."""

    source = "random-polynomial"

    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.geometry = WaveguideGeometry(1.0, 0.7)

    @property
    def wavelength_band(self):
        return 0.3, 3.0

    def _neff(self, wavelength, widths=None):
        n = np.polynomial.polynomial.polyval(np.asarray(wavelength) - 1.0, self.coefficients)
        return n if widths is None else np.broadcast_to(n, (len(widths),) + np.shape(n))


def test_criterion_2_analytic_zeros(acceptance_log):
    rng = np.random.default_rng(7)
    lo, hi = (float(x) for x in wavelength_to_omega([1.6, 0.7]))
    start = time.perf_counter()
    worst = 0.0
    for case in range(100):
        if case % 2:
            model = EffectiveIndexModel(WaveguideGeometry(rng.uniform(0.7, 2.2), rng.uniform(0.5, 0.9)))
        else:
            model = PolynomialModel([rng.uniform(1.5, 2.5), rng.uniform(-0.3, 0.0), rng.uniform(-0.1, 0.1),
                                     rng.uniform(-0.05, 0.05)])
        o1, os_ = rng.uniform(lo, hi, 2)
        worst = max(worst,
                    abs(delta_k_dfg(model, o1, o1, os_).delta_k),
                    abs(delta_k_dfg(model, o1, os_, os_).delta_k),
                    abs(delta_k_sfwm(model, o1, o1).delta_k))
    runtime = time.perf_counter() - start
    ok = acceptance_log(2, worst < 1e-12 and runtime < 5.0,
                        f"max |dk| {worst:.1e} rad/um over 100 random models (<1e-12), {runtime:.2f} s (<5 s)")
    assert ok


# -- criterion 3 -------------------------------------------------------------------

def test_criterion_3_gate_algebra(acceptance_log):
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    errs = {}
    nu = rng.uniform(-np.pi, np.pi)
    a, b = rng.uniform(0, 3, 6), rng.uniform(0, 3, 6)
    m = rotation_operator(nu, a).matrix()
    errs["unitarity"] = float(np.max(np.abs(m.conj().T @ m - np.eye(12))))
    prod = m @ rotation_operator(nu, b).matrix()
    errs["composition"] = float(np.max(np.abs(prod - rotation_operator(nu, a + b).matrix())))

    mf = schmidt_decompose(joint(correlated_gaussian(0.7), grid(128, 128)), threshold=0.9999)
    base = GateParameters(length=1e4, gamma_dfg=2.5, sigma1=37.7, sigma2=4.4, p1_mW=1.3, p2_mW=2.1)
    gate = base.with_(epsilon=calibrate_epsilon(mf, base))
    h = 0.8 * mf.modes_a[0] + 0.6 * mf.modes_a[1]
    ref = evolve_pure(h, mf, gate.with_(nu=0.0))
    errs["nu-independence"] = max(
        max(abs(abs(o.alpha) - abs(ref.alpha)), abs(abs(o.beta) - abs(ref.beta)))
        for o in (evolve_pure(h, mf, gate.with_(nu=v)) for v in np.linspace(-np.pi, np.pi, 13)))
    t = np.abs(coupling_angles(mf, gate))
    errs["sqrt(C) ratios"] = float(np.max(np.abs(t / t[0] - np.sqrt(mf.coefficients / mf.coefficients[0]))))
    t4 = np.abs(coupling_angles(mf, gate.with_(p1_mW=4 * gate.p1_mW)))
    errs["power law"] = float(np.max(np.abs(t4 / t - 2.0)))
    p0 = min_power_product(mf, gate)
    errs["1/L^2"] = abs(min_power_product(mf, gate.with_(length=2 * gate.length)) / p0 - 0.25)
    errs["sigma1 sigma2"] = abs(min_power_product(mf, gate.with_(sigma1=3 * gate.sigma1, sigma2=0.5 * gate.sigma2))
                                / p0 - 1.5)
    runtime = time.perf_counter() - start
    worst = max(errs.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    ok = acceptance_log(3, worst < 1e-12 and runtime < 5.0, f"{detail} (all <1e-12), {runtime:.2f} s (<5 s)")
    assert ok


# -- criterion 4 -------------------------------------------------------------------

def test_criterion_4_design_point(acceptance_log):
    start = time.perf_counter()
    ev = run_design(DeviceConfig()).evaluation
    runtime = time.perf_counter() - start
    p, k, f = ev.purity, ev.schmidt_number, ev.heralded.fidelity
    checks = {"purity": p >= 0.99, "schmidt": abs(k - 2.33) <= 0.3, "fidelity": f >= 0.98, "runtime": runtime < 60}
    ok = acceptance_log(4, all(checks.values()),
                        f"purity {p:.5f} (>=0.99), MF Schmidt number {k:.4f} (2.33 +- 0.3), fidelity {f:.4f} "
                        f"(>=0.98), {runtime:.1f} s at 256 points (<60 s); built-in effective-index dispersion")
    assert ok


# -- criterion 5 -------------------------------------------------------------------

def test_criterion_5_calibration_round_trip(acceptance_log, small_design):
    mf = small_design.evaluation.mf_modes
    start = time.perf_counter()
    base = small_design.evaluation.gate.with_(epsilon=None)
    gate = base.with_(epsilon=calibrate_epsilon(mf, base, power_product=8.3, angle=np.pi / 2))
    product = min_power_product(mf, gate)
    ratio = min_power_product(mf, gate.with_(length=gate.length / 2)) / product
    runtime = time.perf_counter() - start
    ok = acceptance_log(5, f"{product:.3g}" == "8.3" and abs(ratio - 4.0) < 1e-12 and runtime < 1.0,
                        f"min_power_product {product:.6f} mW^2 (8.30 to 3 s.f.), halved-L ratio {ratio:.15f} "
                        f"(=4), {runtime * 1e3:.1f} ms (<1 s)")
    assert ok


# -- criterion 6 -------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_width_robustness(acceptance_log):
    plan = parse_plan(resources.files("colorqubit").joinpath("data/fig3c.plan").read_text())
    assert len(plan.axes[0].values) == 33 and plan.rephasematch
    start = time.perf_counter()
    res = run_sweep(plan, DeviceConfig())
    runtime = time.perf_counter() - start
    dw, fid = res.column("delta_w_um"), res.column("fidelity")
    width, lo, hi = threshold_interval(dw, fid, 0.99)
    ok = acceptance_log(6, abs(width - 0.07) <= 0.03 and runtime < 600,
                        f"F > 0.99 interval width {width:.4f} um (0.07 +- 0.03); F range "
                        f"[{np.nanmin(fid):.4f}, {np.nanmax(fid):.4f}] over 33 points, {runtime:.1f} s (<600 s)")
    assert ok


# -- criterion 7 -------------------------------------------------------------------

FIG5 = {"dfg.sigma2_THz": 0.5, "sfwm.sigmaf_THz": 4.0, "grids.points": 128}
SLICES = (
    ("dfg.L_um", (1.0e4, 1.5e4, 2.0e4, 2.5e4), -1),
    ("sfwm.sigma1_THz", (5.5, 6.0, 6.5, 7.0, 7.5), +1),
    ("sfwm.lc_um", tuple(np.linspace(20.0, 80.0, 7)), +1),
    ("sfwm.Ri", tuple(np.linspace(0.70, 0.95, 6)), +1),
)


@pytest.mark.slow
def test_criterion_7_fidelity_trends(acceptance_log):
    start = time.perf_counter()
    verdicts, parts = [], []
    for path, values, sign in SLICES:
        plan = SweepPlan(axes=(Axis(path, values),), overrides=FIG5, outputs=("fidelity",), name=path)
        fid = run_sweep(plan, DeviceConfig()).column("fidelity")
        steps = sign * np.diff(fid)
        good = bool(np.all(np.isfinite(fid)) and np.all(steps >= 0))
        verdicts.append(good)
        word = "non-increasing" if sign < 0 else "non-decreasing"
        parts.append(f"{path.split('.')[1]} {word} {'yes' if good else 'no'} "
                     f"(F {fid[0]:.4f}..{fid[-1]:.4f}, worst step {steps.min():+.1e})")
    runtime = time.perf_counter() - start
    ok = acceptance_log(7, all(verdicts) and runtime < 600, "; ".join(parts) + f"; {runtime:.1f} s (<600 s)")
    assert ok


# -- criterion 8 -------------------------------------------------------------------

def test_criterion_8_parallel_equivalence(acceptance_log):
    plan = parse_plan("[plan]\nname = determinism\naxis1 = geometry.delta_w_um -0.03 0.03 4\n"
                      "axis2 = sfwm.Ri values 0.8 0.9\nrephasematch = true\n"
                      "outputs = fidelity fidelity_pure purity schmidt_number min_power_product\n"
                      "[overrides]\ngrids.points = 64\n")
    serial = run_sweep(plan, DeviceConfig(), threads=1).to_text().encode()
    parallel = run_sweep(plan, DeviceConfig(), threads=3).to_text().encode()
    same = serial == parallel
    points = len(serial.splitlines()) - 1
    ok = acceptance_log(8, same, f"1 vs 3 workers over {points} points: "
                        f"{'byte-identical' if same else 'tables differ'} ({len(serial)} bytes)")
    assert ok
