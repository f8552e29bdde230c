import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from coexsim.qstate import BellState, DensityMatrix, partial_trace, visibility_twofold
from coexsim.sources import (
    PairSourceParams,
    PulseTrain,
    emission_distribution,
    entangled_pair_distribution,
    entangled_state,
    heralded_state,
    rng_stream,
    sample_emission,
)

N = 1_000_000


def test_params_validation():
    with pytest.raises(ValueError):
        PairSourceParams(-0.1)
    with pytest.raises(ValueError):
        PairSourceParams(0.1, herald_efficiency=0.0)
    with pytest.raises(ValueError):
        PairSourceParams(0.1, spectral_purity=1.5)
    with pytest.raises(ValueError):
        PairSourceParams(0.1, statistics="laser")


def test_pulse_train():
    pt = PulseTrain()
    assert pt.rep_rate == 500e6 and pt.pulse_fwhm == 65e-12
    assert pt.period == pytest.approx(2e-9)
    assert 0.999 < pt.gate_acceptance(500e-12) <= 1.0
    assert pt.gate_acceptance(1e-15) < 1e-3
    with pytest.raises(ValueError):
        PulseTrain(500e6, 3e-9)
    with pytest.raises(ValueError):
        PulseTrain(0.0)


@pytest.mark.parametrize("statistics", ["poisson", "thermal"])
def test_zero_mu_never_emits(statistics):
    s = sample_emission(PairSourceParams(0.0, statistics=statistics), rng_stream(1), 10_000)
    assert s.n_slots == 10_000
    assert all((v == 0).all() for v in s.pairs_per_mode.values())


def test_poisson_mean():
    n = sample_emission(PairSourceParams(0.018), rng_stream(2), N).pairs_per_mode["signal"]
    assert abs(n.mean() - 0.018) < 3 * math.sqrt(0.018 / N)


def test_thermal_fano_factor():
    mu = 0.013
    n = sample_emission(PairSourceParams(mu, statistics="thermal"), rng_stream(3), N).pairs_per_mode["signal"]
    batches = n.reshape(100, -1)
    fano = batches.var(axis=1, ddof=1) / batches.mean(axis=1)
    se = fano.std(ddof=1) / math.sqrt(len(fano))
    assert abs(n.var(ddof=1) / n.mean() - (1 + mu)) < 3 * se


def test_entangled_arms_share_mu():
    mu = 0.013
    s = sample_emission(PairSourceParams(mu), rng_stream(4), N, entangled=True)
    hv, vh = s.pairs_per_mode["HV"], s.pairs_per_mode["VH"]
    assert abs((hv + vh).mean() - mu) < 3 * math.sqrt(mu / N)
    assert abs(hv.mean() - mu / 2) < 3 * math.sqrt(mu / 2 / N)


def test_emission_distribution_examples():
    pmf, tail = emission_distribution(PairSourceParams(0.018), 3)
    mu = 0.018
    expected = [math.exp(-mu) * mu**k / math.factorial(k) for k in range(4)]
    assert np.allclose(pmf, expected, rtol=1e-14)
    assert tail == pytest.approx(1 - sum(expected), rel=1e-9)
    pmf, tail = emission_distribution(PairSourceParams(0.0, statistics="thermal"), 3)
    assert list(pmf) == [1, 0, 0, 0] and tail == 0
    mu = 0.013
    pmf, _ = emission_distribution(PairSourceParams(mu, statistics="thermal"), 3)
    assert np.allclose(pmf, [mu**k / (1 + mu) ** (k + 1) for k in range(4)], rtol=1e-12)
    with pytest.raises(ValueError):
        emission_distribution(PairSourceParams(mu), 0)


@pytest.mark.parametrize("mu", [0.005, 0.013, 0.018, 0.05])
@pytest.mark.parametrize("statistics", ["poisson", "thermal"])
def test_sampled_moments_match_distribution(mu, statistics):
    params = PairSourceParams(mu, statistics=statistics)
    pmf, tail = emission_distribution(params, 12)
    assert tail < 1e-12
    k = np.arange(13)
    mean, second = pmf @ k, pmf @ k**2
    n = sample_pairs = sample_emission(params, rng_stream(5, int(mu * 1e3)), N).pairs_per_mode["signal"]
    assert abs(n.mean() - mean) < 3 * math.sqrt((second - mean**2) / N)
    m2 = (sample_pairs**2).mean()
    fourth = pmf @ k**4
    assert abs(m2 - second) < 3 * math.sqrt((fourth - second**2) / N)


def test_entangled_pair_distribution():
    joint, tail = entangled_pair_distribution(PairSourceParams(0.013), 3)
    assert all(k + l <= 3 for k, l in joint)
    p = stats.poisson(0.0065).pmf
    assert joint[(1, 0)] == pytest.approx(p(1) * p(0))
    assert tail == pytest.approx(1 - sum(joint.values()))
    assert 0 < tail < 1e-7


def _herald_oracle(mu: float, eta_h: float, eta_s: float, n_max: int):
    """Enumerate every photon's fate (detected or lost) for each pair number."""
    w = np.zeros(3)
    for n in range(n_max + 1):
        pn = math.exp(-mu) * mu**n / math.factorial(n)
        for herald in itertools.product((0, 1), repeat=n):
            ph = math.prod(eta_h if h else 1 - eta_h for h in herald)
            if not any(herald):
                continue
            for sig in itertools.product((0, 1), repeat=n):
                ps = math.prod(eta_s if x else 1 - eta_s for x in sig)
                w[min(sum(sig), 2)] += pn * ph * ps
    return w.sum(), w / w.sum()


def test_heralded_state_examples():
    assert heralded_state(PairSourceParams(1e-9)).single_photon_weight == pytest.approx(1.0, abs=1e-8)
    st_ = heralded_state(PairSourceParams(0.018), n_max=3)
    p, w = _herald_oracle(0.018, 1.0, 1.0, 3)
    assert st_.herald_probability == pytest.approx(p, rel=1e-12)
    assert np.allclose(st_.weights, w, rtol=1e-12)
    assert st_.multi_photon_weight == pytest.approx(0.00897, abs=1e-5)
    st_ = heralded_state(PairSourceParams(0.05, herald_efficiency=0.3, signal_efficiency=0.6), n_max=5)
    p, w = _herald_oracle(0.05, 0.3, 0.6, 5)
    assert st_.herald_probability == pytest.approx(p, rel=1e-12)
    assert np.allclose(st_.weights, w, rtol=1e-12)


@given(st.floats(1e-4, 0.2), st.floats(1e-4, 0.2), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_heralded_single_weight_decreases_with_mu(mu1, mu2, eta_h, eta_s):
    lo, hi = sorted((mu1, mu2))
    if hi - lo < 1e-6:
        return
    a = heralded_state(PairSourceParams(lo, herald_efficiency=eta_h, signal_efficiency=eta_s), n_max=8)
    b = heralded_state(PairSourceParams(hi, herald_efficiency=eta_h, signal_efficiency=eta_s), n_max=8)
    # with signal loss the vacuum share also moves, so compare the multi-photon share
    assert b.multi_photon_weight > a.multi_photon_weight
    a = heralded_state(PairSourceParams(lo, herald_efficiency=eta_h), n_max=8)
    b = heralded_state(PairSourceParams(hi, herald_efficiency=eta_h), n_max=8)
    assert b.single_photon_weight < a.single_photon_weight


def test_entangled_state_examples():
    assert np.allclose(entangled_state(PairSourceParams(0.01)).entries, BellState.PSI_MINUS.density().entries)
    assert np.allclose(entangled_state(PairSourceParams(0.01, intrinsic_visibility=0.0)).entries, np.eye(4) / 4)


def _fringe_visibility(rho: np.ndarray, basis_vec: np.ndarray) -> float:
    """Two-photon fringe: qubit 1 projected on ``basis_vec``, qubit 2 scanned over a great circle."""
    p1 = np.outer(basis_vec, basis_vec.conj())
    rates = []
    for theta in np.linspace(0, 2 * math.pi, 721):
        # scan circle containing basis_vec
        a = np.array([math.cos(theta / 2), math.sin(theta / 2)])
        if abs(basis_vec[1]) > 0 and abs(basis_vec[0]) > 0:
            a = np.array([math.cos(theta / 2), math.sin(theta / 2)]) @ np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        rates.append(np.trace(rho @ np.kron(p1, np.outer(a, a.conj()))).real)
    return visibility_twofold(max(rates), max(min(rates), 0.0))


@given(st.floats(0, 1))
def test_entangled_state_fringe_visibility(v):
    rho = entangled_state(PairSourceParams(0.01, intrinsic_visibility=v))
    assert np.allclose(partial_trace(rho, 0).entries, np.eye(2) / 2)
    for vec in (np.array([1.0, 0.0]), np.array([1.0, -1.0]) / math.sqrt(2)):
        assert _fringe_visibility(rho.entries, vec) == pytest.approx(v, abs=1e-9)
    DensityMatrix(rho.entries)


def test_rng_stream_independent_and_reproducible():
    a = rng_stream(7, 1, 2).random(5)
    assert np.array_equal(a, rng_stream(7, 1, 2).random(5))
    assert not np.array_equal(a, rng_stream(7, 2, 1).random(5))
