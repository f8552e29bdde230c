"""Fringe scans, sweeps and the what-if analyses built on the backends."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..bsm import effective_overlap
from ..channel import FiberSpan
from ..qstate import TOMOGRAPHY_LABELS, AnalyzerSetting, PureState, analyzer, visibility_hom, visibility_twofold
from ..tomography import TomographyCounts
from .analytic import pattern_probability, run_analytic, target_operators
from .measurements import _vec
from .model import Pattern, SlotModel, entanglement_pattern, hom_pattern, teleport_pattern
from .scenario import ResultRecord, Scenario, ScenarioError, SweepSpec, with_parameter


def equator(n: int) -> tuple[np.ndarray, list[AnalyzerSetting]]:
    phi = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return phi, [AnalyzerSetting.from_angles(math.pi / 2, p) for p in phi]


def meridian(n: int) -> tuple[np.ndarray, list[AnalyzerSetting]]:
    """Great circle through H, D, V and A."""
    theta = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return theta, [AnalyzerSetting((math.sin(t), 0.0, math.cos(t))) for t in theta]


def _scan(model: SlotModel, pattern: Pattern, settings, rate: float) -> np.ndarray:
    ops = target_operators(model, pattern)
    return np.array([rate * pattern_probability(model, pattern, a, ops) for a in settings])


def analytic_fringes(s: Scenario, model: SlotModel | None = None) -> dict[str, np.ndarray]:
    """Four-fold fringes for inputs D and A and two-fold entanglement fringes."""
    model = model or SlotModel(s)
    rate = s.pulse_train.rep_rate * model.gate_acceptance
    n = s.run.fringe_points
    phi, eq = equator(n)
    theta, mer = meridian(n)
    out = {"equator_phase": phi, "meridian_angle": theta}
    for label in ("D", "A"):
        out[f"teleport_{label}"] = _scan(model, teleport_pattern(s, _vec(PureState.from_label(label))), eq, rate)
    out["ent_V"] = _scan(model, entanglement_pattern(s, analyzer("V")), mer, rate)
    out["ent_A"] = _scan(model, entanglement_pattern(s, analyzer("A")), mer, rate)
    return out


@dataclass
class TeleportationData:
    counts: dict[tuple[str, AnalyzerSetting], float]  # expected four-fold counts
    visibilities: dict[str, float]
    tomography: dict[str, TomographyCounts]


def teleportation_experiment(
    s: Scenario,
    inputs: Sequence[PureState],
    analyzers: Sequence[AnalyzerSetting],
    exposure: float | None = None,
) -> TeleportationData:
    """Expected four-fold counts per (input, analyzer), fringe visibilities and tomography data.

    The visibility of an input is taken from the analyzers parallel and
    orthogonal to it when both are present, otherwise from the extremes of
    the scan.
    """
    if not inputs or not analyzers:
        raise ScenarioError("inputs and analyzers must be non-empty")
    exposure = s.run.exposure_s if exposure is None else exposure
    model = SlotModel(s)
    rate = s.pulse_train.rep_rate * model.gate_acceptance
    counts, vis, tomo = {}, {}, {}
    for i, psi in enumerate(inputs):
        label = _label(psi, i)
        pat = teleport_pattern(s, _vec(psi))
        ops = target_operators(model, pat)
        row = [exposure * rate * pattern_probability(model, pat, a, ops) for a in analyzers]
        for a, c in zip(analyzers, row):
            counts[(label, a)] = c
        par, orth = AnalyzerSetting(tuple(psi.bloch())), AnalyzerSetting(tuple(-psi.bloch()))
        lookup = {a: c for a, c in zip(analyzers, row)}
        hi, lo = (lookup[par], lookup[orth]) if par in lookup and orth in lookup else (max(row), min(row))
        vis[label] = visibility_twofold(hi, lo) if hi > 0 else float("nan")
        six = [exposure * rate * pattern_probability(model, pat, analyzer(t), ops) for t in TOMOGRAPHY_LABELS]
        tomo[label] = TomographyCounts.from_mapping(dict(zip(TOMOGRAPHY_LABELS, six)), duration=exposure)
    return TeleportationData(counts, vis, tomo)


def _label(psi: PureState, i: int) -> str:
    for lab in ("H", "V", "D", "A", "R", "L"):
        if abs(abs(np.vdot(PureState.from_label(lab).amplitudes, psi.amplitudes)) - 1) < 1e-12:
            return lab
    return f"input{i}"


def hom_dip_scan(s: Scenario, offsets: Sequence[float]) -> np.ndarray:
    """Four-fold HOM coincidence rate (counts/s) versus arrival-time offset (s)."""
    model = SlotModel(s)
    rate = s.pulse_train.rep_rate * model.gate_acceptance
    out = []
    for dt in offsets:
        zeta = effective_overlap(replace(s.indistinguishability, arrival_offset=float(dt)))
        out.append(rate * pattern_probability(model, hom_pattern(zeta), analyzer("V")))
    return np.array(out)


def hom_visibility(s: Scenario) -> float:
    model = SlotModel(s)
    far = pattern_probability(model, hom_pattern(0.0), analyzer("V"))
    near = pattern_probability(model, hom_pattern(s.zeta), analyzer("V"))
    return visibility_hom(far, near)


def entanglement_visibility(s: Scenario, basis: str = "V") -> float:
    model = SlotModel(s)
    pat = entanglement_pattern(s, analyzer(basis))
    hi, lo = {"V": ("H", "V"), "A": ("D", "A")}[basis]
    ops = target_operators(model, pat)
    return visibility_twofold(
        pattern_probability(model, pat, analyzer(hi), ops), pattern_probability(model, pat, analyzer(lo), ops)
    )


def sweep(s: Scenario, spec: SweepSpec, backend: str = "analytic", **kwargs) -> list[ResultRecord]:
    """One record per value of ``spec.parameter``."""
    if not spec.values:
        raise ScenarioError("sweep needs at least one value")
    scenarios = [with_parameter(s, spec.parameter, v) for v in spec.values]
    out = []
    for sc in scenarios:
        if backend == "analytic":
            out.append(run_analytic(sc, **kwargs))
        elif backend in ("mc", "monte_carlo"):
            from .montecarlo import run_monte_carlo

            n = spec.n_slots or sc.run.n_slots
            out.append(run_monte_carlo(sc, n, sc.run.seed, **kwargs))
        else:
            raise ScenarioError(f"unknown backend {backend!r}")
    return out


def average_fidelity_of(s: Scenario) -> float:
    """Analytic F_avg without uncertainty estimation."""
    return run_analytic(replace(s, run=replace(s.run, bootstrap_resamples=2)), fringes=False).f_avg


def target_loss_tolerance(
    s: Scenario,
    fidelity_drop: float,
    ceiling_db: float = 120.0,
    tol_db: float = 0.01,
) -> float:
    """Largest extra target-path loss (dB) at which F_avg has fallen by less than ``fidelity_drop``.

    Returns ``ceiling_db`` when the drop is never reached within the search range.
    """
    if fidelity_drop <= 0:
        raise ScenarioError("fidelity_drop must be positive")
    base_loss = s.links["target"].extra_loss_db
    f0 = average_fidelity_of(s)

    def drop(extra):
        sc = with_parameter(s, "links.target.extra_loss_db", base_loss + extra)
        return f0 - average_fidelity_of(sc)

    if drop(ceiling_db) < fidelity_drop:
        return ceiling_db
    lo, hi = 0.0, ceiling_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if drop(mid) < fidelity_drop:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def band_comparison(
    s: Scenario,
    noise_ratio: float = 100.0,
    loss_delta_db_per_km: float = 0.15,
    wavelength: str = "1290",
) -> tuple[ResultRecord, ResultRecord]:
    """O-band record and the same link with a C-band quantum channel."""
    if noise_ratio < 1:
        raise ScenarioError("noise_ratio must be >= 1")
    raman = {d: m.scaled(noise_ratio) for d, m in s.raman.items()}
    links = {}
    for name, link in s.links.items():
        att = dict(link.span.attenuation)
        if name in ("alice", "bob") and link.wavelength == wavelength:
            att[wavelength] = max(0.0, att[wavelength] - loss_delta_db_per_km)
        links[name] = replace(link, span=FiberSpan(link.span.length, att, link.span.extra_losses_db))
    c_band = replace(s, raman=raman, links=links)
    return run_analytic(s, fringes=False), run_analytic(c_band, fringes=False)
