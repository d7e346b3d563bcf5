import numpy as np
import pytest

from colorqubit.config import DeviceConfig
from colorqubit.errors import PlanError
from colorqubit.pipeline import run_design
from colorqubit.sweep import Axis, SweepPlan, load_plan, parse_plan, run_sweep, threshold_interval

TINY = DeviceConfig().with_values({"grids.points": 64})


def test_degenerate_plan_equals_direct_design():
    plan = parse_plan("[plan]\naxis1 = sfwm.Ri 0.86 0.86 1\n"
                      "outputs = fidelity purity schmidt_number min_power_product\n")
    res = run_sweep(plan, TINY)
    ev = run_design(TINY).evaluation
    assert len(res.rows) == 1 and res.rows[0][-1] == "ok"
    assert res.column("fidelity")[0] == pytest.approx(ev.heralded.fidelity, rel=1e-12)
    assert res.column("purity")[0] == pytest.approx(ev.purity, rel=1e-12)
    assert res.column("schmidt_number")[0] == pytest.approx(ev.schmidt_number, rel=1e-12)
    assert res.column("min_power_product")[0] == pytest.approx(ev.min_power_product, rel=1e-12)


def test_row_order_last_axis_fastest():
    plan = SweepPlan(axes=(Axis.linear("sfwm.lc_um", 30, 40, 2), Axis.linear("sfwm.Ri", 0.8, 0.9, 3)))
    pts = plan.points()
    assert [p["sfwm.Ri"] for p in pts[:3]] == pytest.approx([0.8, 0.85, 0.9], abs=1e-15)
    assert [p["sfwm.lc_um"] for p in pts] == [30.0] * 3 + [40.0] * 3


def test_serial_and_parallel_tables_are_byte_identical():
    plan = parse_plan("[plan]\naxis1 = geometry.delta_w_um -0.02 0.02 3\naxis2 = dfg.sigma2_THz values 0.5 0.9\n"
                      "rephasematch = true\noutputs = fidelity purity schmidt_number overlap1\n")
    serial = run_sweep(plan, TINY, threads=1).to_text()
    parallel = run_sweep(plan, TINY, threads=2).to_text()
    assert serial == parallel
    assert serial.count("\tok\n") == 6


def test_failed_points_are_flagged_rows():
    plan = parse_plan("[plan]\naxis1 = geometry.delta_w_um values -0.9 0\nrephasematch = true\n")
    res = run_sweep(plan, TINY)
    flags = res.column("flag")
    assert flags[0] in ("no-root", "cutoff") and flags[1] == "ok"
    assert np.isnan(res.column("fidelity")[0])


def test_relative_pair_rate_with_filter_width():
    plan = parse_plan("[plan]\naxis1 = sfwm.sigmaf_THz values 0.0001 0.001 0.1 0.5 1 2 4 8\n"
                      "outputs = relative_pair_rate\n")
    rate = run_sweep(plan, TINY).column("relative_pair_rate")
    assert rate[0] < 1e-3
    assert rate[1] / rate[0] == pytest.approx(10.0, rel=1e-2)
    assert np.all(np.diff(rate) >= 0)
    assert rate[4] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("text", [
    "",
    "[plan]\naxis1 = sfwm.Ri 0.7 0.9 1\n",
    "[plan]\naxis1 = sfwm.nothing 0 1 3\n",
    "[plan]\naxis1 = sfwm.Ri 0.7 0.9 3\noutputs = everything\n",
    "[plan]\naxis1 = sfwm.lambda1_um 0.80 0.84 3\nrephasematch = true\n",
    "[plan]\naxis1 = sfwm.Ri 0.7 0.9 3\naxis2 = sfwm.Ri 0.7 0.9 3\n",
    "[plan]\nname = empty\n",
    "[plan]\naxis1 = sfwm.Ri 0.7 0.9 3\ncolour = blue\n",
    "[plan]\naxis1 = sfwm.Ri 0.7 zero 3\n",
    "[plan]\naxis1 = sfwm.Ri 0.7 0.9 3\n[overrides]\ndfg.nothing = 1\n",
])
def test_invalid_plans_rejected(text):
    with pytest.raises(PlanError):
        parse_plan(text)


def test_empty_plan_file(tmp_path):
    p = tmp_path / "empty.plan"
    p.write_text("")
    with pytest.raises(PlanError):
        load_plan(p)


@pytest.mark.parametrize("name", ["fig3a", "fig3b", "fig3c", "fig5", "fig6"])
def test_shipped_plans_parse(name):
    from importlib import resources
    plan = parse_plan(resources.files("colorqubit").joinpath(f"data/{name}.plan").read_text())
    assert plan.points()


def test_threshold_interval():
    x = np.linspace(-1, 1, 21)
    y = 1 - x**2
    width, lo, hi = threshold_interval(x, y, 0.75)
    assert (lo, hi) == pytest.approx((-0.5, 0.5), abs=0.02)
    assert width == pytest.approx(1.0, abs=0.04)
    y2 = np.where(np.abs(x) < 0.55, 1.0, 0.0)
    y2[10] = np.nan
    # the run stops at the NaN sample and interpolates its outer crossing
    w2, lo2, hi2 = threshold_interval(x, y2, 0.5)
    assert (w2, lo2, hi2) == pytest.approx((0.45, -0.55, -0.1), abs=1e-12)
    assert threshold_interval(x, y, 2.0)[0] == 0.0
