import json
import math
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import canonflow as cf

SCENARIOS = Path(os.environ.get("CANONFLOW_SCENARIOS", Path(__file__).resolve().parents[2] / "scenarios"))


def test_version():
    assert cf.__version__ == "0.1.0"


def test_flow_closed_forms():
    q = cf.Generator.quadratic()
    assert cf.flow_map(q, 0.25, 2.0) == pytest.approx(4.0, abs=1e-14)
    xs = np.linspace(-1.0, 1.0, 5)
    out = cf.flow_map(cf.Generator.linear(), 0.3, xs)
    np.testing.assert_allclose(out, xs * math.exp(0.3), rtol=1e-14)
    e = cf.Generator.exp_decay(1.0)
    assert cf.flow_map(e, 0.5, 0.0) == pytest.approx(math.log(1.5), rel=1e-14)
    for x in (-0.5, 0.3, 1.2):
        assert cf.conjugation_factor(e, 0.5, x) * cf.flow_jacobian(e, 0.5, x) == pytest.approx(1.0, rel=1e-12)


def test_custom_generator_matches_closed_form():
    custom = cf.Generator.custom(lambda x: x * x, lambda x: 2 * x)
    assert cf.flow_map(custom, 0.2, 1.5) == pytest.approx(cf.flow_map(cf.Generator.quadratic(), 0.2, 1.5), rel=1e-9)


def test_errors_carry_kind_and_module():
    with pytest.raises(cf.Error) as info:
        cf.flow_map(cf.Generator.quadratic(), 0.5, 2.0)
    assert info.value.kind == "DomainBlowup"
    assert info.value.module == "flowcore"
    assert isinstance(info.value, RuntimeError)


def test_gaussian_and_point_unitary():
    grid = cf.Grid.over(-10.0, 10.0, 512)
    psi = cf.GaussianState(1.0, 0.5, -0.3).rasterize(grid)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    x, _ = cf.expectation("x", psi)
    assert x == pytest.approx(0.5, abs=1e-10)
    f = cf.Generator.linear()
    back = cf.apply_point_unitary_adjoint(f, 0.2, cf.apply_point_unitary(f, 0.2, psi))
    assert 1.0 - cf.fidelity(back, psi) < 1e-10
    values = psi.values
    assert values.dtype == np.complex128 and values.shape == (512,)
    again = cf.WaveFunction(grid, values)
    assert cf.phase_aligned_distance(again, psi) == 0.0


def test_hamiltonian_transforms():
    h = cf.QuadraticHamiltonian.standard_oscillator(1.0, 1.0)
    d = cf.dilation_transform(h, 0.1, 0.2)
    assert tuple(d) == pytest.approx((0.5 * math.exp(-0.2), 0.5 * math.exp(0.2), -0.2), rel=1e-14)
    q = cf.quadratic_phase_transform(cf.QuadraticHamiltonian(0.5, 0.5, 0.0), 1.0, 0.0)
    assert tuple(q) == pytest.approx((0.5, 1.0, 1.0))
    fam = cf.SolvableFamily(m0=1.0, mu=1.0, nu=0.0, alpha=0.1, Omega0=1.0)
    assert fam.omega == pytest.approx(math.sqrt(1.01), rel=1e-14)
    m, dm, _ = cf.solvable_mass(fam, 0.5)
    assert m == pytest.approx(math.exp(0.1), rel=1e-14) and dm == pytest.approx(0.2 * m, rel=1e-12)
    assert abs(cf.solvability_residual(fam, 0.7)) < 1e-10


def test_exact_vs_split_step():
    fam = cf.SolvableFamily.caldirola_kanai(1.0, 0.2, 1.0)
    grid = cf.Grid.over(-12.0, 12.0, 512)
    psi0 = cf.GaussianState(1.0, 1.0).rasterize(grid)
    traj = cf.split_step_propagate(fam.mass_profile(), fam.frequency_profile(), psi0,
                                   cf.TimeGrid.span(0.0, 1.0, 1e-3, 100))
    exact = cf.exact_solvable_propagate(fam, psi0, 1.0)
    assert 1.0 - cf.fidelity(traj.final_state, exact) < 1e-6
    arrays = traj.arrays()
    assert arrays["t"][-1] == pytest.approx(1.0)
    assert np.all(np.abs(arrays["norm"] - 1.0) < 1e-10)
    g = cf.gaussian_exact_propagate(fam, cf.GaussianState(1.0, 1.0), 1.0)
    assert 1.0 - cf.fidelity(g.rasterize(grid), exact) < 1e-8


def test_metric_round_trip():
    e = cf.Generator.exp_decay(1.0)
    g = cf.metric_from_generator(e, 0.4)
    assert g(0.0) == pytest.approx(1.0 / 1.4 ** 2, rel=1e-12)
    inv = cf.generator_from_metric(g, 0.4, 0.0, -4.5, 5.0, anchor_image=math.log(1.4))
    for x in (-3.0, 0.0, 2.5):
        assert inv.flow(x) == pytest.approx(cf.flow_map(e, 0.4, x), abs=1e-7)
    flat = cf.MetricProfile.constant(1.0)
    grid = cf.Grid.over(-10.0, 10.0, 256)
    psi = cf.GaussianState(1.0).rasterize(grid)
    traj = cf.crank_nicolson_curved(flat, 1.0, psi, cf.TimeGrid.span(0.0, 0.1, 1e-3, 10))
    assert traj.report.max_norm_drift < 1e-10


def test_verify_suite():
    results = cf.verify("flowcore", threads=2)
    assert results and all(r["passed"] for r in results)
    with pytest.raises(cf.Error):
        cf.verify("no-such-suite")


def test_run_scenario(tmp_path):
    result = cf.run_scenario(str(SCENARIOS / "caldirola_kanai.json"), str(tmp_path))
    assert result["method"] == "split-step"
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,norm,fidelity_vs_exact,x_mean,p_mean,energy"
    fid = result["trajectory"].arrays()["fidelity_vs_exact"]
    assert 1.0 - fid[-1] < 1e-6
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["library"]["version"] == "0.1.0"


@pytest.mark.skipif("CANONFLOW_TOOL" not in os.environ, reason="command-line tool not built")
def test_cli_exit_codes(tmp_path):
    tool = os.environ["CANONFLOW_TOOL"]
    r = subprocess.run([tool, "flow", "--f", "quadratic", "--eps", "0.25", "--x", "2.0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "4.0\n"
    r = subprocess.run([tool, "run", str(SCENARIOS / "domain_blowup.json"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert json.loads(r.stderr)["error"]["kind"] == "DomainBlowup"
    r = subprocess.run([tool, "flow", "--eps", "1"], capture_output=True, text=True)
    assert r.returncode == 64
