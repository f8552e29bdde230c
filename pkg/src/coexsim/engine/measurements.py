"""The set of slot probabilities behind one result record, and the record builder."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import sprs_rate
from ..qstate import (
    TOMOGRAPHY_LABELS,
    AnalyzerSetting,
    PureState,
    analyzer,
    average_fidelity,
    visibility_hom,
    visibility_twofold,
)
from ..tomography import TomographyCounts, TomographyError, bootstrap_uncertainty, fidelity_statistic, mle_reconstruct
from .model import Pattern, entanglement_pattern, hom_pattern, teleport_pattern
from .scenario import DETECTORS, ResultRecord, Scenario

TELEPORT_INPUTS = ("H", "V", "D", "A")


@dataclass(frozen=True)
class Quantity:
    name: str
    pattern: Pattern
    analyzer: AnalyzerSetting | None
    coincidence: bool


def _vec(state: PureState) -> tuple[complex, complex]:
    a = state.amplitudes
    return complex(a[0]), complex(a[1])


def measurement_plan(s: Scenario, inputs=TELEPORT_INPUTS, singles: bool = True) -> list[Quantity]:
    """Every probability the record needs, grouped so patterns repeat."""
    q: list[Quantity] = []
    h = _vec(PureState.from_label("H"))
    if singles:
        cfg = s.bsm_config
        proj = (cfg.projector_d1, cfg.projector_d2)
        alice = _vec(s.alice_input)
        q.append(Quantity("single:d0", Pattern(h, True, (), proj, s.zeta, True), None, False))
        q.append(Quantity("single:d1", Pattern(alice, False, ("d1",), proj, s.zeta, True), None, False))
        q.append(Quantity("single:d2", Pattern(alice, False, ("d2",), proj, s.zeta, True), None, False))
        q.append(Quantity("single:d3", Pattern(None, False, (), proj, s.zeta, True), s.analyzer, False))
    for label in inputs:
        pat = teleport_pattern(s, _vec(PureState.from_label(label)))
        for setting in TOMOGRAPHY_LABELS:
            q.append(Quantity(f"fourfold:{label}:{setting}", pat, analyzer(setting), True))
    pat = teleport_pattern(s, _vec(s.alice_input))
    for setting in TOMOGRAPHY_LABELS:
        q.append(Quantity(f"fourfold:input:{setting}", pat, analyzer(setting), True))
    q.append(Quantity("fourfold:configured", pat, s.analyzer, True))
    for basis, (hi, lo) in (("V", ("H", "V")), ("A", ("D", "A"))):
        pat = entanglement_pattern(s, analyzer(basis))
        for setting in (hi, lo):
            q.append(Quantity(f"twofold:{basis}:{setting}", pat, analyzer(setting), True))
    for tag, zeta in (("distinguishable", 0.0), ("indistinguishable", s.zeta)):
        q.append(Quantity(f"hom:{tag}", hom_pattern(zeta), analyzer("V"), True))
    return q


def _vis_twofold_sigma(a: float, b: float, sa: float, sb: float) -> float:
    if a + b <= 0:
        return 0.0
    return float(np.hypot(2 * b / (a + b) ** 2 * sa, 2 * a / (a + b) ** 2 * sb))


def _vis_hom_sigma(a: float, b: float, sa: float, sb: float) -> float:
    if a <= 0:
        return 0.0
    return float(np.hypot(b / a**2 * sa, sb / a))


def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except ValueError:
        return float("nan")


def _visibility(fn, a: float, b: float) -> float:
    """Visibility, also for sampled rates where the minimum may exceed the maximum."""
    if a >= b:
        return _safe(fn, a, b)
    if fn is visibility_hom:
        return (a - b) / a if a > 0 else float("nan")
    return (a - b) / (a + b)


def build_record(
    s: Scenario,
    probs: dict[str, float],
    sigmas: dict[str, float] | None,
    backend: str,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    inputs=TELEPORT_INPUTS,
    noise: dict[str, tuple[float, float]] | None = None,
) -> ResultRecord:
    """Turn per-slot probabilities into rates, visibilities and fidelities.

    With ``sigmas`` given (Monte Carlo) uncertainties describe the
    estimator; without them (analytic) they are the Poisson spread expected
    from the configured exposure per setting. ``noise`` optionally replaces
    the configured free-running noise rates by estimates ``(rate, sigma)``.
    """
    rep = s.pulse_train.rep_rate
    acc = s.pulse_train.gate_acceptance(s.detectors["d0"].gate_window)
    exposure = s.run.exposure_s
    rec = ResultRecord(backend=backend, seed=seed)
    for d in DETECTORS:
        key = f"single:{d}"
        if key not in probs:
            continue
        if noise is not None:
            rec.noise_rates[d], noise_sigma = noise[d]
        else:
            raman = sprs_rate(s.raman[d], s.classical_plan) if d in s.raman else 0.0
            rec.noise_rates[d], noise_sigma = raman + s.detectors[d].dark_rate, 0.0
        rec.singles[d] = rep * probs[key] + rec.noise_rates[d]
        rec.singles_sigma[d] = float(np.hypot(rep * sigmas[key] if sigmas else 0.0, noise_sigma))
    rates, rsig = {}, {}
    for key, p in probs.items():
        if key.startswith("single:"):
            continue
        rates[key] = rep * acc * p
        rsig[key] = rep * acc * sigmas[key] if sigmas else 0.0
    rec.rates, rec.rates_sigma = rates, rsig

    def sig(a_key, b_key):
        if sigmas:
            return rsig[a_key], rsig[b_key]
        # Poisson counting spread at the configured exposure
        return (np.sqrt(rates[a_key] * exposure) / exposure if exposure else 0.0,
                np.sqrt(rates[b_key] * exposure) / exposure if exposure else 0.0)

    def add_vis(name, hi, lo, hom=False):
        a, b = rates[hi], rates[lo]
        sa, sb = sig(hi, lo)
        if hom:
            rec.visibilities[name] = (_visibility(visibility_hom, a, b), _vis_hom_sigma(a, b, sa, sb))
        else:
            rec.visibilities[name] = (_visibility(visibility_twofold, a, b), _vis_twofold_sigma(a, b, sa, sb))

    add_vis("ent_V", "twofold:V:H", "twofold:V:V")
    add_vis("ent_A", "twofold:A:D", "twofold:A:A")
    add_vis("hom", "hom:distinguishable", "hom:indistinguishable", hom=True)
    if "D" in inputs:
        add_vis("D", "fourfold:D:D", "fourfold:D:A")
    if "A" in inputs:
        add_vis("A", "fourfold:A:A", "fourfold:A:D")

    rng = rng or np.random.default_rng(0 if seed is None else seed)
    fids = {}
    for label in (*inputs, "input"):
        target = s.alice_input if label == "input" else PureState.from_label(label)
        keys = [f"fourfold:{label}:{t}" for t in TOMOGRAPHY_LABELS]
        if sigmas:
            values = [rates[k] for k in keys]
        else:
            values = [rates[k] * exposure for k in keys]
        counts = TomographyCounts.from_mapping(dict(zip(TOMOGRAPHY_LABELS, values)))
        try:
            res = mle_reconstruct(counts, target)
        except TomographyError:
            fids[label] = (float("nan"), 0.0)
            continue
        if label == "input":
            rec.conditional_state = res.rho.entries
        if sigmas:
            sd = _parametric_spread(counts, np.array([rsig[k] for k in keys]), target, rng, s.run.bootstrap_resamples)
        else:
            sd = bootstrap_uncertainty(counts, fidelity_statistic(target), s.run.bootstrap_resamples, rng)
        fids[label] = (res.fidelity_to_target, 0.0 if np.isnan(sd) else sd)
    if all(k in fids for k in TELEPORT_INPUTS):
        poles = 0.5 * (fids["H"][0] + fids["V"][0])
        equator = 0.5 * (fids["D"][0] + fids["A"][0])
        f_avg = _safe(average_fidelity, poles, equator)
        sd = np.sqrt(sum((fids[k][1] / 6) ** 2 for k in ("H", "V")) + sum((fids[k][1] / 3) ** 2 for k in ("D", "A")))
        fids["avg"] = (f_avg, float(sd))
    rec.fidelities = fids
    rec.validate()
    return rec


def _parametric_spread(counts: TomographyCounts, sd: np.ndarray, target, rng, n: int) -> float:
    """Spread of the fidelity when the estimated rates vary within their errors."""
    stat = fidelity_statistic(target)
    base = counts.values
    values = []
    for _ in range(n):
        draw = np.clip(base + rng.normal(0.0, sd), 0.0, None)
        try:
            values.append(stat(counts.replace_values(draw)))
        except TomographyError:
            continue
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
