import json
import math

import numpy as np
import pytest

from perclab import experiments as ex
from perclab.cluster import label_clusters
from perclab.corrector import drift_field, solve_dirichlet, solve_periodic
from perclab.lattice import BondConfig, BoxGeometry, sample_config


@pytest.fixture(scope="module")
def full_torus():
    cfg = sample_config(BoxGeometry(2, 16, "periodic"), 1.0, 0)
    cl = label_clusters(cfg)
    return cfg, cl, solve_periodic(cfg, cluster=cl)


def test_report_round_trip():
    rep = ex.ExperimentReport("demo", {"d": 2, "p": 0.75})
    rep.add("x", 0.1 + 0.2, 1e-17, 10)
    rep.check("x small", True, 0.30000000000000004, 1.0)
    data = json.loads(rep.to_json())
    back = ex.ExperimentReport.from_dict(data)
    assert back.to_json() == rep.to_json()
    assert back.stat("x").estimate == 0.1 + 0.2
    assert "PASS" in rep.to_text() and "demo" in rep.to_text()
    assert rep.passed


def test_linear_fit_and_survival():
    x = np.arange(10.0)
    fit = ex.linear_fit(x, 3 - 0.5 * x)
    assert fit["slope"] == pytest.approx(-0.5) and fit["r2"] == pytest.approx(1.0)
    ns, ps = ex.survival_curve(np.array([1] * 50 + [2] * 30 + [3] * 20), min_count=10)
    assert ns.tolist() == [1, 2] and ps.tolist() == [0.5, 0.2]


def test_martingale_full_lattice(full_torus):
    _, cl, f = full_torus
    rep = ex.martingale_check(cl, f)
    assert rep.stat("max_martingale_defect").estimate == 0.0
    assert rep.passed


def test_martingale_converged_dirichlet():
    cl = label_clusters(sample_config(BoxGeometry(2, 40), 0.7, 3))
    f = solve_dirichlet(cl, tol=1e-10)
    rep = ex.martingale_check(cl, f, tol=1e-10)
    assert rep.passed


def test_uncorrected_defect_is_local_drift():
    g = BoxGeometry(2, 11)
    bonds = [((x, 0), 0) for x in range(4)] + [((2, 0), 1)]
    cl = label_clusters(BondConfig.from_bonds(g, bonds))
    f = solve_dirichlet(cl, boundary=[g.index((0, 0)), g.index((4, 0))]).with_chi(np.zeros((cl.size, 2)))
    defects = ex.martingale_defects(f)
    a = cl.index_of[g.index((2, 0))]
    assert defects[a] == np.abs(drift_field(cl)[a]).max() == 0.25


def test_diffusion_full_lattice(full_torus):
    _, cl, f = full_torus
    rep = ex.estimate_diffusion(cl, f, 400, 300, seed=1)
    assert rep.stat("D_one_step").estimate == 1.0
    assert rep.stat("lindeberg_V_nn(eps=0.5)").estimate == 0.0
    assert rep.verdict("lindeberg sum vanishes (eps=0.5)").passed


def test_diffusion_reanchoring_invariance(torus16):
    cfg, cl = torus16
    f = solve_periodic(cfg, cluster=cl)
    base = ex.one_step_variance(f).mean()
    moved = f.with_chi(f.chi + np.array([3.5, -1.25]))
    assert ex.one_step_variance(moved).mean() == pytest.approx(base, rel=1e-14)


def test_diffusion_estimators_agree(torus16):
    cfg, cl = torus16
    f = solve_periodic(cfg, cluster=cl)
    rep = ex.estimate_diffusion(cl, f, 500, 2000, seed=2)
    assert rep.verdict("one-step D agrees with Monte Carlo").passed
    for s in rep.stats:
        if s.n_samples > 1 and not s.label.startswith("lindeberg"):
            assert s.std_error > 0


def test_time_change_full_lattice(full_torus):
    _, cl, f = full_torus
    rep = ex.time_change_check(cl, f, 200, 100, seed=3)
    assert rep.stat("T_n_over_n").estimate == 1.0
    assert rep.stat("theta").estimate == 1.0
    assert rep.stat("D_theta_squared").estimate == rep.stat("D_one_step").estimate == 1.0


def test_slab_exit_full_lattice():
    cfg = sample_config(BoxGeometry.slab(2, 4), 1.0, 0)
    rep = ex.slab_exit(cfg, 4000, seed=4)
    assert abs(rep.stat("P_top_exact").estimate - 0.5) <= 1e-12
    assert rep.passed


def test_heat_kernel_one_dimensional_slope():
    cl = label_clusters(sample_config(BoxGeometry(1, 4001, "periodic"), 1.0, 0))
    rep = ex.heat_kernel(cl, [64, 128, 256, 512, 1024], slope_tol=0.02)
    assert rep.stat("log_log_slope").estimate == pytest.approx(-0.5, abs=0.02)
    assert rep.verdict("probability conserved").passed


def test_heat_kernel_mass_conserved(torus16):
    _, cl = torus16
    rep = ex.heat_kernel(cl, [4, 8, 16])
    assert max(abs(m - 1) for m in rep.series["mass"]) <= 1e-10


def test_axis_full_lattice():
    rep = ex.axis_statistics(BoxGeometry(2, 24), 1.0, 3, seed=5, sample_size=4)
    assert rep.stat("mean_v_e").estimate == 1.0 and rep.stat("mean_v_e").std_error == 0.0
    assert rep.stat("mean_L").estimate == 1.0
    assert rep.stat("mean_chi_v_e[0]").estimate == 0.0


def test_environment_conditioning():
    g = BoxGeometry(2, 20)
    cfg, cl, tries = ex.sample_environment(g, 0.6, 6, index=2)
    assert cl.origin_in_giant and tries >= 1
    again = ex.sample_environment(g, 0.6, 6, index=2)[0]
    assert again == cfg


def test_mean_se():
    m, s = ex.mean_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and s == pytest.approx(math.sqrt(5 / 3) / 2)
