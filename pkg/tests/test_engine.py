from dataclasses import replace

import numpy as np
import pytest

from coexsim.bsm import TruncationError
from coexsim.engine import (
    ScenarioError,
    SweepSpec,
    band_comparison,
    calibrate,
    hom_dip_scan,
    ideal_scenario,
    paper_scenario,
    run_analytic,
    run_monte_carlo,
    sweep,
    target_loss_tolerance,
    teleportation_experiment,
    with_parameter,
)
from coexsim.engine.calibration import PAPER_TARGETS, CalibrationError, Target, evaluate
from coexsim.qstate import PureState, analyzer, average_fidelity, TOMOGRAPHY_LABELS


def fast(s, resamples=20):
    return replace(s, run=replace(s.run, bootstrap_resamples=resamples))


@pytest.fixture(scope="module")
def cal():
    return fast(paper_scenario())


def test_ideal_scenario_teleports_perfectly():
    rec = run_analytic(ideal_scenario(), fringes=False)
    for k in ("H", "V", "D", "A", "avg"):
        assert rec.fidelities[k][0] == pytest.approx(1.0, abs=1e-10)


def test_calibrated_fidelity_in_published_band(calibrated_record):
    assert 0.868 <= calibrated_record.f_avg <= 0.930


def test_calibrated_fourfold_rate_band(calibrated_record):
    assert 0.045 <= calibrated_record.max_fourfold <= 0.18


def test_record_rates_and_uncertainties_nonnegative(calibrated_record):
    rec = calibrated_record
    assert all(v >= 0 for v in rec.rates.values())
    assert all(v >= 0 for v in rec.singles.values())
    assert all(s >= 0 for _, s in rec.visibilities.values())
    assert all(s >= 0 for _, s in rec.fidelities.values())
    assert rec.conditional_state.shape == (2, 2)
    assert set(rec.fringes) >= {"teleport_D", "teleport_A", "ent_V", "ent_A"}


def test_avg_fidelity_consistency(calibrated_record):
    f = {k: v[0] for k, v in calibrated_record.fidelities.items()}
    expected = average_fidelity((f["H"] + f["V"]) / 2, (f["D"] + f["A"]) / 2)
    assert abs(calibrated_record.f_avg - expected) < 1e-12


def test_truncation_error_suggests_n_max(cal):
    with pytest.raises(TruncationError, match="n_max"):
        run_analytic(with_parameter(cal, "mu", 0.3), fringes=False)


def test_power_sweep_noise_slope(cal):
    recs = sweep(cal, SweepSpec("launch_power", (0.0, 74.0)), fringes=False)
    slope = {d: (recs[1].noise_rates[d] - recs[0].noise_rates[d]) / 74.0 for d in ("d1", "d2")}
    assert slope["d1"] == pytest.approx(79.0, rel=1e-12)
    assert slope["d2"] == pytest.approx(97.9, rel=1e-12)
    assert recs[1].visibilities["ent_V"][0] >= 0.95


def test_sweep_errors(cal):
    with pytest.raises(ScenarioError):
        sweep(cal, SweepSpec("nonsense", (1.0,)))
    with pytest.raises(ScenarioError):
        sweep(cal, SweepSpec("launch_power", (1.0,)), backend="quantum")


def test_teleportation_fringes(cal):
    settings = [analyzer(t) for t in TOMOGRAPHY_LABELS]
    data = teleportation_experiment(cal, [PureState.from_label(x) for x in "HDA"], settings)
    h = {a: data.counts[("H", a)] for a in settings}
    assert max(h, key=h.get) == analyzer("H")
    assert min(h, key=h.get) == analyzer("V")
    assert 0.759 <= data.visibilities["D"] <= 0.867
    assert 0.700 <= data.visibilities["A"] <= 0.794
    assert set(data.tomography) == {"H", "D", "A"}


def test_teleportation_experiment_needs_inputs(cal):
    with pytest.raises(ScenarioError):
        teleportation_experiment(cal, [], [analyzer("H")])


def test_hom_dip_visibility_at_zero_power(cal):
    rates = hom_dip_scan(with_parameter(cal, "launch_power", 0.0), [-1e-9, 0.0, 1e-9])
    assert rates[0] == pytest.approx(rates[2])
    assert 1 - rates[1] / rates[0] == pytest.approx(0.829, abs=0.045)


def _f(s):
    return run_analytic(s, fringes=False).f_avg


@pytest.mark.parametrize(
    "path,values",
    [
        ("launch_power", (0.0, 20.0, 74.0, 200.0)),
        ("noise_coefficient", (0.0, 79.0, 500.0)),
        ("detectors.d1.dark_rate", (0.0, 100.0, 1e4)),
        ("detectors.d3.dark_rate", (0.0, 100.0, 1e4)),
    ],
)
def test_fidelity_monotone_in_noise(cal, path, values):
    f = [_f(with_parameter(cal, path, v)) for v in values]
    assert all(b <= a + 1e-12 for a, b in zip(f, f[1:]))
    assert f[-1] < f[0]


def test_zeta_dependence_on_ideal_scenario():
    recs = [run_analytic(ideal_scenario(zeta=z), fringes=False) for z in (0.2, 0.5, 0.9, 1.0)]
    for k in ("H", "V"):
        assert np.ptp([r.fidelities[k][0] for r in recs]) < 1e-10
    for k in ("D", "A"):
        f = [r.fidelities[k][0] for r in recs]
        assert all(b > a for a, b in zip(f, f[1:]))


def test_common_efficiency_scaling():
    # single-pair, noiseless regime where threshold detection is linear
    base = ideal_scenario(mu=1e-9, zeta=0.8)
    base = with_parameter(base, "links.alice.polarization_error", 0.05)
    base = with_parameter(base, "bob_source.intrinsic_visibility", 0.95)

    def with_eff(e):
        return replace(base, detectors={d: replace(m, efficiency=e) for d, m in base.detectors.items()})

    a, b = run_analytic(with_eff(0.8), fringes=False), run_analytic(with_eff(0.4), fringes=False)
    for k in a.fidelities:
        assert b.fidelities[k][0] == pytest.approx(a.fidelities[k][0], abs=1e-8)
    for k in a.visibilities:
        assert b.visibilities[k][0] == pytest.approx(a.visibilities[k][0], abs=1e-8)
    for k in a.singles:
        assert b.singles[k] / a.singles[k] == pytest.approx(0.5, rel=1e-6)
    for k, v in a.rates.items():
        order = 4 if k.startswith(("fourfold", "hom")) else 2
        assert b.rates[k] == pytest.approx(v * 0.5**order, rel=1e-6, abs=1e-6 * max(a.rates.values()))


def test_target_loss_without_target_darks_saturates_at_ceiling(cal):
    s = with_parameter(cal, "dark_rate_d3", 0.0)
    assert target_loss_tolerance(s, 0.05, ceiling_db=80.0) == 80.0


def test_target_loss_tolerance_order_of_magnitude(cal):
    tol = target_loss_tolerance(cal, 0.05)
    assert 50.0 <= tol <= 70.0
    noisy = target_loss_tolerance(with_parameter(cal, "dark_rate_d3", 1e4), 0.05)
    assert noisy < tol


def test_target_loss_tolerance_needs_positive_drop(cal):
    with pytest.raises(ScenarioError):
        target_loss_tolerance(cal, 0.0)


def test_single_pair_target_loss_invariance():
    # no multi-pair terms and no target darks: loss only rescales four-folds
    s = with_parameter(ideal_scenario(mu=1e-9, zeta=0.8), "detectors.d1.dark_rate", 1e5)
    f = [_f(with_parameter(s, "target_loss_db", x)) for x in (0.0, 40.0, 80.0)]
    assert np.ptp(f) < 1e-9


def test_band_comparison_identity(cal):
    o, c = band_comparison(cal, 1.0, 0.0)
    assert o.rates == c.rates and o.fidelities == c.fidelities


def test_band_comparison_noise_penalty(cal):
    o, c = band_comparison(with_parameter(cal, "launch_power", 1.0), 100.0, 0.15)
    assert c.f_avg < o.f_avg


def test_band_comparison_without_traffic(cal):
    o, c = band_comparison(with_parameter(cal, "launch_power", 0.0), 100.0, 0.15)
    assert c.max_fourfold > o.max_fourfold
    # only residual dark-count and multi-pair terms see the loss change
    assert c.f_avg == pytest.approx(o.f_avg, abs=1e-3)


def test_band_comparison_rejects_ratio_below_one(cal):
    with pytest.raises(ScenarioError):
        band_comparison(cal, 0.5)


def test_monte_carlo_deterministic(cal):
    a, b = run_monte_carlo(cal, 10**5, 3), run_monte_carlo(cal, 10**5, 3)
    assert a.rates == b.rates and a.fidelities == b.fidelities and a.singles == b.singles
    assert run_monte_carlo(cal, 10**5, 4).rates != a.rates


def test_monte_carlo_vacuum_gives_zero_rates():
    s = with_parameter(ideal_scenario(), "mu", 0.0)
    rec = run_monte_carlo(s, 10**4, 0)
    assert all(v == 0 for v in rec.rates.values())
    assert all(v == 0 for v in rec.singles.values())


def test_monte_carlo_matches_analytic(cal):
    a = run_analytic(cal, fringes=False)
    m = run_monte_carlo(cal, 10**7, cal.run.seed)
    z = np.array([(m.rates[k] - v) / m.rates_sigma[k] for k, v in a.rates.items()])
    assert np.all(np.abs(z) <= 3.0)
    # standardized residuals look like unit normals
    assert abs(z.mean()) < 3.0 / np.sqrt(len(z))
    assert 0.5 < z.std() < 1.5
    for k, (v, _) in a.fidelities.items():
        assert abs(m.fidelities[k][0] - v) <= 3 * m.fidelities[k][1], k


@pytest.mark.slow
def test_calibrate_recovers_synthetic_parameters(cal):
    truth = {
        "zeta": 0.8,
        "bob_source.intrinsic_visibility": 0.97,
        "links.herald.collection_efficiency": 0.025,
        "links.alice.polarization_error": 0.04,
    }
    true_s = cal
    for k, v in truth.items():
        true_s = with_parameter(true_s, k, v)
    targets = [Target(t.observable, v, t.sigma) for t, v in evaluate(true_s, PAPER_TARGETS).items()]
    res = calibrate(cal, targets)
    assert res.success
    for k, v in truth.items():
        assert res.parameters[k] == pytest.approx(v, rel=0.01)


def test_calibrated_zeta_is_interior(cal):
    assert 0.0 < cal.zeta < 1.0


def test_calibrate_flags_infeasible_hom_target(cal):
    with pytest.raises(CalibrationError, match="multi-pair"):
        calibrate(cal, [Target("V_HOM", 1.0, 0.01)])


def test_calibrate_needs_targets(cal):
    with pytest.raises(CalibrationError):
        calibrate(cal, [])
