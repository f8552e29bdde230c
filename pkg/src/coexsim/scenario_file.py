"""Versioned key-value scenario files.

The format is INI with one section per component. Every physical quantity
carries its unit in the key name. Unknown sections or keys are rejected,
missing keys take the defaults below, and ``loads(dumps(s)) == s``.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from decimal import Decimal, InvalidOperation, localcontext
from importlib import resources
from pathlib import Path

import numpy as np

from .bsm import BsmConfig, IndistinguishabilityParams
from .channel import ClassicalChannelPlan, DetectorModel, FiberSpan, RamanNoiseModel
from .engine.scenario import DETECTORS, PATHS, LinkModel, RunSettings, Scenario, ScenarioError
from .qstate import AnalyzerSetting, PureState
from .sources import PairSourceParams, PulseTrain

HEADER = "# coexsim-scenario v1"
SECTIONS = ("sources", "links", "classical", "bsm", "detectors", "run")
LABELS = ("H", "V", "D", "A", "R", "L")


class ScenarioFileError(ScenarioError):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


_PICO = Decimal(10) ** 12


def _ps(seconds: float) -> str:
    """Seconds as picoseconds, in the shortest text that parses back exactly."""
    for digits in (15, 16, 17):
        text = f"{seconds * 1e12:.{digits}g}"
        if _from_ps(text) == seconds:
            return text
    return str(Decimal(seconds) * _PICO)  # exact


def _from_ps(text: str) -> float:
    with localcontext() as ctx:
        ctx.prec = 800
        return float(Decimal(text) / _PICO)


def _setting_text(v: AnalyzerSetting) -> str:
    for lab in LABELS:
        if np.allclose(AnalyzerSetting.from_label(lab).bloch_vector, v.bloch_vector, atol=1e-15):
            return lab
    return ",".join(repr(float(c)) for c in v.bloch_vector)


def _parse_setting(text: str) -> AnalyzerSetting:
    text = text.strip()
    if text.upper() in LABELS:
        return AnalyzerSetting.from_label(text.upper())
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ScenarioFileError(f"polarization must be a label or a Bloch vector x,y,z: {text!r}")
    return AnalyzerSetting(tuple(parts))


def _state_text(psi: PureState) -> str:
    return _setting_text(AnalyzerSetting(tuple(psi.bloch())))


def _parse_state(text: str) -> PureState:
    return _parse_setting(text).state()


def to_sections(s: Scenario) -> dict[str, dict[str, str]]:
    a, b = s.alice_source, s.bob_source
    out: dict[str, dict[str, str]] = {
        "sources": {
            "alice_mu": a.mu,
            "alice_spectral_purity": a.spectral_purity,
            "alice_statistics": a.statistics,
            "bob_mu": b.mu,
            "bob_spectral_purity": b.spectral_purity,
            "bob_statistics": b.statistics,
            "bob_intrinsic_visibility": b.intrinsic_visibility,
            "rep_rate_mhz": s.pulse_train.rep_rate / 1e6,
            "pulse_fwhm_ps": _ps(s.pulse_train.pulse_fwhm),
        },
        "links": {},
        "classical": {
            "launch_power_mw": s.classical_plan.launch_power,
            "p_min_mw": s.classical_plan.p_min,
            "alice_direction": s.classical_plan.directions.get("alice", "co"),
            "bob_direction": s.classical_plan.directions.get("bob", "counter"),
            "raman_d1_cps_per_mw": s.raman["d1"].coefficient,
            "raman_d2_cps_per_mw": s.raman["d2"].coefficient,
            "raman_d1_polarized_fraction": s.raman["d1"].polarized_fraction,
            "raman_d2_polarized_fraction": s.raman["d2"].polarized_fraction,
        },
        "bsm": {
            "splitter_ratio": s.bsm_config.splitter_ratio,
            "projector_d1": _setting_text(s.bsm_config.projector_d1),
            "projector_d2": _setting_text(s.bsm_config.projector_d2),
            "mode_overlap": s.indistinguishability.mode_overlap,
            "arrival_offset_ps": _ps(s.indistinguishability.arrival_offset),
            "coherence_time_ps": _ps(s.indistinguishability.coherence_time),
        },
        "detectors": {},
        "run": {
            "analyzer": _setting_text(s.analyzer),
            "alice_input": _state_text(s.alice_input),
            "n_max": s.run.n_max,
            "exposure_s": s.run.exposure_s,
            "bootstrap_resamples": s.run.bootstrap_resamples,
            "slots": s.run.n_slots,
            "seed": s.run.seed,
            "fringe_points": s.run.fringe_points,
        },
    }
    for p in PATHS:
        link = s.links[p]
        att = link.span.attenuation.get(link.wavelength, 0.0)
        out["links"].update(
            {
                f"{p}_wavelength_nm": link.wavelength,
                f"{p}_length_km": link.span.length,
                f"{p}_attenuation_db_per_km": att,
                f"{p}_insertion_loss_db": float(sum(link.span.extra_losses_db)),
                f"{p}_extra_loss_db": link.extra_loss_db,
                f"{p}_collection_efficiency": link.collection_efficiency,
                f"{p}_polarization_error": link.polarization_error,
            }
        )
    for d in DETECTORS:
        det = s.detectors[d]
        out["detectors"].update(
            {
                f"{d}_efficiency": det.efficiency,
                f"{d}_dark_rate_cps": det.dark_rate,
                f"{d}_window_ps": _ps(det.gate_window),
            }
        )
    return {sec: {k: _fmt(v) for k, v in kv.items()} for sec, kv in out.items()}


DEFAULTS = to_sections(Scenario())


def dumps(s: Scenario, comments: dict[str, list[str]] | None = None) -> str:
    """Serialize; ``comments`` maps a section (or ``""`` for the top) to comment lines."""
    comments = comments or {}
    lines = [HEADER]
    lines += [f"# {c}" for c in comments.get("", [])]
    for sec, kv in to_sections(s).items():
        lines.append("")
        lines += [f"# {c}" for c in comments.get(sec, [])]
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in kv.items()]
    return "\n".join(lines) + "\n"


def _num(sec: dict, key: str, kind=float):
    text = sec[key]
    try:
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        value = float(text)
    except ValueError:
        raise ScenarioFileError(f"{key}: expected a number, got {text!r}") from None
    if math.isnan(value):
        raise ScenarioFileError(f"{key}: NaN is not allowed")
    return value


def _num_ps(sec: dict, key: str) -> float:
    _num(sec, key)  # validates
    try:
        return _from_ps(sec[key].strip())
    except InvalidOperation:
        raise ScenarioFileError(f"{key}: expected a number, got {sec[key]!r}") from None


def loads(text: str) -> Scenario:
    first = text.lstrip("﻿").splitlines()[0].strip() if text.strip() else ""
    if first != HEADER:
        raise ScenarioFileError(f"missing or unsupported header line (expected {HEADER!r})")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioFileError(f"malformed scenario file: {exc}") from exc
    data = {sec: dict(kv) for sec, kv in DEFAULTS.items()}
    for sec in parser.sections():
        if sec not in data:
            raise ScenarioFileError(f"unknown section [{sec}]")
        for key, value in parser.items(sec):
            if key not in data[sec]:
                raise ScenarioFileError(f"unknown key {key!r} in [{sec}]")
            data[sec][key] = value.strip()
    try:
        return _build(data)
    except ScenarioFileError:
        raise
    except (ValueError, KeyError) as exc:
        raise ScenarioFileError(str(exc)) from exc


def _build(d: dict[str, dict[str, str]]) -> Scenario:
    src, lk, cl, bs, de, rn = (d[k] for k in SECTIONS)
    alice = PairSourceParams(
        _num(src, "alice_mu"), _num(src, "alice_spectral_purity"), statistics=src["alice_statistics"]
    )
    bob = PairSourceParams(
        _num(src, "bob_mu"),
        _num(src, "bob_spectral_purity"),
        statistics=src["bob_statistics"],
        intrinsic_visibility=_num(src, "bob_intrinsic_visibility"),
    )
    pulses = PulseTrain(_num(src, "rep_rate_mhz") * 1e6, _num_ps(src, "pulse_fwhm_ps"))
    links = {}
    for p in PATHS:
        wl = lk[f"{p}_wavelength_nm"]
        insertion = _num(lk, f"{p}_insertion_loss_db")
        span = FiberSpan(
            _num(lk, f"{p}_length_km"), {wl: _num(lk, f"{p}_attenuation_db_per_km")}, (insertion,) if insertion else ()
        )
        links[p] = LinkModel(
            span,
            wl,
            _num(lk, f"{p}_collection_efficiency"),
            _num(lk, f"{p}_extra_loss_db"),
            _num(lk, f"{p}_polarization_error"),
        )
    directions = {"alice": cl["alice_direction"], "bob": cl["bob_direction"]}
    for v in directions.values():
        if v not in ("co", "counter"):
            raise ScenarioFileError(f"direction must be 'co' or 'counter', got {v!r}")
    plan = ClassicalChannelPlan(_num(cl, "launch_power_mw"), _num(cl, "p_min_mw"), directions)
    raman = {
        det: RamanNoiseModel(_num(cl, f"raman_{det}_cps_per_mw"), _num(cl, f"raman_{det}_polarized_fraction"))
        for det in ("d1", "d2")
    }
    bsm = BsmConfig(
        splitter_ratio=_num(bs, "splitter_ratio"),
        projector_d1=_parse_setting(bs["projector_d1"]),
        projector_d2=_parse_setting(bs["projector_d2"]),
    )
    indist = IndistinguishabilityParams(
        _num(bs, "mode_overlap"), _num_ps(bs, "arrival_offset_ps"), _num_ps(bs, "coherence_time_ps")
    )
    detectors = {
        det: DetectorModel(_num(de, f"{det}_efficiency"), _num(de, f"{det}_dark_rate_cps"), _num_ps(de, f"{det}_window_ps"))
        for det in DETECTORS
    }
    run = RunSettings(
        n_max=_num(rn, "n_max", int),
        exposure_s=_num(rn, "exposure_s"),
        bootstrap_resamples=_num(rn, "bootstrap_resamples", int),
        n_slots=_num(rn, "slots", int),
        seed=_num(rn, "seed", int),
        fringe_points=_num(rn, "fringe_points", int),
    )
    return Scenario(
        alice_source=alice,
        bob_source=bob,
        pulse_train=pulses,
        links=links,
        classical_plan=plan,
        raman=raman,
        bsm_config=bsm,
        indistinguishability=indist,
        detectors=detectors,
        analyzer=_parse_setting(rn["analyzer"]),
        alice_input=_parse_state(rn["alice_input"]),
        run=run,
    )


def load(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def save(s: Scenario, path, comments=None) -> None:
    Path(path).write_text(dumps(s, comments))


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(dumps(s).encode()).hexdigest()[:12]


def bundled_path() -> Path:
    return Path(str(resources.files("coexsim") / "data" / "paper.scenario"))


def load_bundled() -> Scenario:
    return load(bundled_path())
