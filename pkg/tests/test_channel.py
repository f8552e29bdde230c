import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coexsim.channel import (
    ClassicalChannelPlan,
    DetectorModel,
    FiberSpan,
    RamanNoiseModel,
    dbm_to_mw,
    headroom_ratio,
    mw_to_dbm,
    noise_click_probability,
    sprs_rate,
    thin,
    thin_distribution,
    threshold_click,
    transmittance,
)
from coexsim.sources import rng_stream

pmfs = st.lists(st.floats(0, 1), min_size=1, max_size=8).filter(lambda p: sum(p) > 0).map(
    lambda p: np.array(p) / sum(p)
)


def test_transmittance_examples():
    alice = FiberSpan(15.2, {"1290": 0.33}, (0.084,))
    assert alice.loss_db("1290") == pytest.approx(5.1)
    assert round(transmittance(alice, "1290"), 3) == 0.309
    assert transmittance(FiberSpan(0.0, {"1290": 0.33}), "1290") == 1.0
    classical = FiberSpan(30.2, {"1547.32": 4.9 / 30.2})
    assert round(transmittance(classical, "1547.32"), 4) == 0.3236
    with pytest.raises(KeyError):
        transmittance(alice, "1550")
    with pytest.raises(ValueError):
        FiberSpan(-1.0)
    with pytest.raises(ValueError):
        FiberSpan(1.0, {"1290": -0.1})


def test_sprs_rate_examples():
    assert sprs_rate(RamanNoiseModel(79.0), ClassicalChannelPlan(74.0)) == pytest.approx(5846.0)
    assert sprs_rate(RamanNoiseModel(79.0), ClassicalChannelPlan(0.0)) == 0.0
    assert sprs_rate(RamanNoiseModel(97.9), ClassicalChannelPlan(10.0)) == pytest.approx(979.0)
    with pytest.raises(ValueError):
        ClassicalChannelPlan(-1.0)
    with pytest.raises(ValueError):
        RamanNoiseModel(-1.0)


def test_raman_from_spectral_density():
    m = RamanNoiseModel.from_spectral_density(1000.0, 0.06, 0.5)
    assert m.coefficient == pytest.approx(30.0)
    assert m.scaled(100).coefficient == pytest.approx(3000.0)


def test_noise_click_probability_examples():
    assert noise_click_probability(0.0, DetectorModel(1.0, 0.0)) == 0.0
    p = noise_click_probability(5846.0, DetectorModel(1.0, 0.0, 500e-12))
    assert p == pytest.approx(-math.expm1(-5846.0 * 500e-12), rel=1e-15)
    assert p == pytest.approx(2.923e-6, rel=1e-5)
    det = DetectorModel(0.9, 0.0, 500e-12)
    full = -math.log1p(-noise_click_probability(1e5, det))
    half = -math.log1p(-noise_click_probability(1e5, det, after_polarizer=True))
    assert half == pytest.approx(full / 2, rel=1e-12)
    with pytest.raises(ValueError):
        noise_click_probability(-1.0, det)


def test_dark_counts_not_scaled_by_efficiency():
    a = noise_click_probability(0.0, DetectorModel(0.5, 100.0))
    b = noise_click_probability(0.0, DetectorModel(1.0, 100.0))
    assert a == b


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorModel(0.0)
    with pytest.raises(ValueError):
        DetectorModel(0.9, -1.0)
    with pytest.raises(ValueError):
        DetectorModel(0.9, 1.0, 0.0)


def test_thin_examples():
    rng = rng_stream(0)
    assert thin(7, 1.0, rng) == 7
    assert thin(7, 0.0, rng) == 0
    assert np.allclose(thin_distribution([0, 1, 0], 0.5), [0.5, 0.5, 0])
    with pytest.raises(ValueError):
        thin_distribution([1.0], 1.5)


def test_thin_sampling_matches_distribution():
    rng = rng_stream(1)
    n = thin(np.full(200_000, 3), 0.4, rng)
    emp = np.bincount(n, minlength=4) / len(n)
    exact = thin_distribution([0, 0, 0, 1], 0.4)
    assert np.allclose(emp, exact, atol=5 * math.sqrt(0.25 / len(n)))


def test_headroom_examples():
    assert headroom_ratio(ClassicalChannelPlan(74.0, 0.5)) == pytest.approx(148.0)
    assert round(headroom_ratio(ClassicalChannelPlan(74.0, 0.085)), 1) == 870.6
    assert headroom_ratio(ClassicalChannelPlan(0.5, 0.5)) == 1.0
    assert dbm_to_mw(-3.0) == pytest.approx(0.5, rel=3e-3)
    assert mw_to_dbm(74.0) == pytest.approx(18.69, abs=0.01)


def test_threshold_click():
    assert threshold_click(0, 0.9) == 0.0
    assert threshold_click(2, 0.5) == pytest.approx(0.75)
    assert threshold_click(0, 0.5, 0.1) == pytest.approx(0.1)
    assert np.allclose(threshold_click(np.array([0, 1, 3]), 1.0), [0, 1, 1])
    assert threshold_click(5, 0.5, 1.0) == 1.0


@given(st.floats(0, 1e3), st.floats(0, 200))
def test_sprs_linear(p, c):
    m = RamanNoiseModel(c)
    assert sprs_rate(m, ClassicalChannelPlan(2 * p)) == pytest.approx(2 * sprs_rate(m, ClassicalChannelPlan(p)), abs=1e-9)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 1))
def test_transmittance_multiplicative_and_monotone(l1, l2, a):
    s1, s2 = FiberSpan(l1, {"w": a}), FiberSpan(l2, {"w": a})
    both = FiberSpan(l1 + l2, {"w": a})
    assert transmittance(both, "w") == pytest.approx(transmittance(s1, "w") * transmittance(s2, "w"), rel=1e-12)
    assert transmittance(both, "w") <= transmittance(s1, "w")
    if a * l2 > 1e-9:
        assert transmittance(both, "w") < transmittance(s1, "w")


@given(st.floats(0, 1e7), st.floats(0, 1e7), st.floats(0, 1e4), st.floats(1e-12, 1e-8), st.floats(0.01, 1))
def test_noise_click_bounds_and_monotone(r1, r2, dark, window, eta):
    lo, hi = sorted((r1, r2))
    det = DetectorModel(eta, dark, window)
    p_lo, p_hi = noise_click_probability(lo, det), noise_click_probability(hi, det)
    assert 0.0 <= p_lo <= p_hi <= 1.0
    assert noise_click_probability(lo, DetectorModel(eta, dark + 10, window)) >= p_lo
    assert noise_click_probability(lo, DetectorModel(eta, dark, 2 * window)) >= p_lo


@given(pmfs, st.floats(0, 1), st.floats(0, 1))
def test_thin_distribution_composes(pmf, e1, e2):
    once = thin_distribution(pmf, e1)
    assert once.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(thin_distribution(once, e2), thin_distribution(pmf, e1 * e2), atol=1e-12)
