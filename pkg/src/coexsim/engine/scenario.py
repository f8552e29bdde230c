"""Scenario description, result records and parameter paths."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from ..bsm import BsmConfig, IndistinguishabilityParams, effective_overlap
from ..channel import (
    ClassicalChannelPlan,
    DetectorModel,
    FiberSpan,
    RamanNoiseModel,
    db_to_transmittance,
    transmittance,
)
from ..qstate import AnalyzerSetting, PureState, analyzer
from ..sources import PairSourceParams, PulseTrain

PATHS = ("herald", "alice", "bob", "target")
DETECTORS = ("d0", "d1", "d2", "d3")
NOISY_DETECTORS = ("d1", "d2")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class LinkModel:
    """One photon path from a source to its detector.

    ``collection_efficiency`` lumps coupling, filters and insertion losses
    that are not published; ``polarization_error`` is the probability of a
    uniformly random Pauli rotation left after compensation.
    """

    span: FiberSpan = field(default_factory=lambda: FiberSpan(0.0, {"1290": 0.0}))
    wavelength: str = "1290"
    collection_efficiency: float = 1.0
    extra_loss_db: float = 0.0
    polarization_error: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.collection_efficiency <= 1.0:
            raise ScenarioError("collection_efficiency must lie in (0, 1]")
        if self.extra_loss_db < 0:
            raise ScenarioError("extra_loss_db must be >= 0")
        if not 0.0 <= self.polarization_error <= 1.0:
            raise ScenarioError("polarization_error must lie in [0, 1]")

    def loss_db(self) -> float:
        return self.span.loss_db(self.wavelength) + self.extra_loss_db

    def transmission(self) -> float:
        return transmittance(self.span, self.wavelength, (self.extra_loss_db,)) * self.collection_efficiency


@dataclass(frozen=True)
class RunSettings:
    n_max: int = 3
    exposure_s: float = 1800.0  # acquisition time per analyzer setting
    bootstrap_resamples: int = 1000
    n_slots: int = 10_000_000
    seed: int = 0
    fringe_points: int = 16

    def __post_init__(self) -> None:
        if self.n_max < 2:
            raise ScenarioError("n_max must be at least 2")
        if self.exposure_s < 0:
            raise ScenarioError("exposure must be >= 0")
        if self.bootstrap_resamples < 2:
            raise ScenarioError("bootstrap_resamples must be at least 2")
        if self.n_slots < 1:
            raise ScenarioError("n_slots must be at least 1")
        if self.fringe_points < 4:
            raise ScenarioError("fringe_points must be at least 4")


def _default_links() -> dict[str, LinkModel]:
    return {p: LinkModel() for p in PATHS}


def _default_detectors() -> dict[str, DetectorModel]:
    return {d: DetectorModel() for d in DETECTORS}


def _default_raman() -> dict[str, RamanNoiseModel]:
    return {d: RamanNoiseModel(0.0) for d in NOISY_DETECTORS}


@dataclass(frozen=True)
class Scenario:
    alice_source: PairSourceParams = field(default_factory=lambda: PairSourceParams(0.018))
    bob_source: PairSourceParams = field(default_factory=lambda: PairSourceParams(0.013))
    pulse_train: PulseTrain = field(default_factory=PulseTrain)
    links: Mapping[str, LinkModel] = field(default_factory=_default_links)
    classical_plan: ClassicalChannelPlan = field(default_factory=ClassicalChannelPlan)
    raman: Mapping[str, RamanNoiseModel] = field(default_factory=_default_raman)
    bsm_config: BsmConfig = field(default_factory=BsmConfig)
    indistinguishability: IndistinguishabilityParams = field(default_factory=IndistinguishabilityParams)
    detectors: Mapping[str, DetectorModel] = field(default_factory=_default_detectors)
    analyzer: AnalyzerSetting = field(default_factory=lambda: analyzer("H"))
    alice_input: PureState = field(default_factory=lambda: PureState.from_label("H"))
    run: RunSettings = field(default_factory=RunSettings)

    def __post_init__(self) -> None:
        for name, keys in (("links", PATHS), ("detectors", DETECTORS), ("raman", NOISY_DETECTORS)):
            value = dict(getattr(self, name))
            if set(value) != set(keys):
                raise ScenarioError(f"{name} must define exactly {keys}")
            object.__setattr__(self, name, {k: value[k] for k in keys})

    @property
    def n_max(self) -> int:
        return self.run.n_max

    @property
    def zeta(self) -> float:
        return effective_overlap(self.indistinguishability)

    @property
    def residual_polarization_error(self) -> dict[str, float]:
        return {p: link.polarization_error for p, link in self.links.items()}


@dataclass
class ResultRecord:
    backend: str
    seed: int | None = None
    wall_time: float = 0.0
    singles: dict[str, float] = field(default_factory=dict)
    singles_sigma: dict[str, float] = field(default_factory=dict)
    noise_rates: dict[str, float] = field(default_factory=dict)
    rates: dict[str, float] = field(default_factory=dict)  # twofold/fourfold, counts/s
    rates_sigma: dict[str, float] = field(default_factory=dict)
    fringes: dict[str, np.ndarray] = field(default_factory=dict)
    visibilities: dict[str, tuple[float, float]] = field(default_factory=dict)
    fidelities: dict[str, tuple[float, float]] = field(default_factory=dict)
    conditional_state: np.ndarray | None = None
    n_slots: int = 0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for table in (self.singles, self.rates):
            for k, v in table.items():
                if v < 0:
                    raise ScenarioError(f"negative rate {k}={v}")
        for table in (self.singles_sigma, self.rates_sigma):
            for k, v in table.items():
                if v < 0:
                    raise ScenarioError(f"negative uncertainty for {k}")
        for table in (self.visibilities, self.fidelities):
            for k, (_, s) in table.items():
                if s < 0:
                    raise ScenarioError(f"negative uncertainty for {k}")

    @property
    def f_avg(self) -> float:
        return self.fidelities["avg"][0]

    @property
    def max_fourfold(self) -> float:
        return max(v for k, v in self.rates.items() if k.startswith("fourfold"))


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    n_slots: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ScenarioError("sweep needs at least one value")


# short names for the parameters swept most often
ALIASES = {
    "launch_power": "classical_plan.launch_power",
    "power_mw": "classical_plan.launch_power",
    "zeta": "indistinguishability.mode_overlap",
    "mode_overlap": "indistinguishability.mode_overlap",
    "mu_alice": "alice_source.mu",
    "mu_bob": "bob_source.mu",
    "target_loss_db": "links.target.extra_loss_db",
    "dark_rate_d3": "detectors.d3.dark_rate",
    "arrival_offset": "indistinguishability.arrival_offset",
}
# paths that set several fields at once
COMPOUND = {
    "mu": ("alice_source.mu", "bob_source.mu"),
    "noise_coefficient": ("raman.d1.coefficient", "raman.d2.coefficient"),
}


def _set(obj: Any, parts: Sequence[str], value: Any) -> Any:
    head, rest = parts[0], parts[1:]
    if isinstance(obj, Mapping):
        if head not in obj:
            raise ScenarioError(f"unknown key {head!r}")
        new = dict(obj)
        new[head] = _set(obj[head], rest, value) if rest else value
        return new
    if not dataclasses.is_dataclass(obj) or head not in {f.name for f in dataclasses.fields(obj)}:
        raise ScenarioError(f"unknown parameter {head!r}")
    current = getattr(obj, head)
    if rest:
        return replace(obj, **{head: _set(current, rest, value)})
    if isinstance(current, (int, float)) and not isinstance(current, bool):
        value = type(current)(value) if isinstance(current, float) or float(value).is_integer() else value
    return replace(obj, **{head: value})


def _get(obj: Any, parts: Sequence[str]) -> Any:
    for p in parts:
        if isinstance(obj, Mapping):
            if p not in obj:
                raise ScenarioError(f"unknown key {p!r}")
            obj = obj[p]
        elif dataclasses.is_dataclass(obj) and p in {f.name for f in dataclasses.fields(obj)}:
            obj = getattr(obj, p)
        else:
            raise ScenarioError(f"unknown parameter {p!r}")
    return obj


def resolve_path(path: str) -> tuple[str, ...]:
    if path in COMPOUND:
        return COMPOUND[path]
    return (ALIASES.get(path, path),)


def with_parameter(s: Scenario, path: str, value: Any) -> Scenario:
    """Copy of ``s`` with the (dotted) parameter ``path`` set to ``value``."""
    try:
        for p in resolve_path(path):
            s = _set(s, p.split("."), value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"cannot set {path}={value!r}: {exc}") from exc
    return s


def get_parameter(s: Scenario, path: str) -> Any:
    return _get(s, resolve_path(path)[0].split("."))


def ideal_scenario(mu: float = 1e-12, zeta: float = 1.0, n_max: int = 2) -> Scenario:
    """Lossless, noiseless, perfectly aligned teleportation at weak pumping."""
    det = DetectorModel(efficiency=1.0, dark_rate=0.0)
    return Scenario(
        alice_source=PairSourceParams(mu),
        bob_source=PairSourceParams(mu),
        detectors={d: det for d in DETECTORS},
        indistinguishability=IndistinguishabilityParams(mode_overlap=zeta),
        run=RunSettings(n_max=n_max),
    )


def paper_scenario(**overrides) -> Scenario:
    """Published link parameters with calibrated defaults for unpublished efficiencies.

    The calibrated values live in ``coexsim/data/paper.scenario``; this
    function loads that file.
    """
    from ..scenario_file import load_bundled

    s = load_bundled()
    for k, v in overrides.items():
        s = with_parameter(s, k, v)
    return s


def gate_probabilities(s: Scenario) -> dict[str, float]:
    """Per-gate noise click probabilities (SpRS plus dark counts)."""
    from ..channel import noise_click_probability, sprs_rate

    out = {}
    for d in DETECTORS:
        rate = sprs_rate(s.raman[d], s.classical_plan) if d in s.raman else 0.0
        out[d] = noise_click_probability(rate, s.detectors[d], apply_efficiency=False)
    return out


def path_transmissions(s: Scenario) -> dict[str, float]:
    return {p: s.links[p].transmission() for p in PATHS}


def total_loss_db(s: Scenario, path: str) -> float:
    link = s.links[path]
    return link.loss_db() - 10.0 * math.log10(link.collection_efficiency)


__all__ = [
    "ALIASES",
    "COMPOUND",
    "LinkModel",
    "ResultRecord",
    "RunSettings",
    "Scenario",
    "ScenarioError",
    "SweepSpec",
    "db_to_transmittance",
    "gate_probabilities",
    "get_parameter",
    "ideal_scenario",
    "paper_scenario",
    "path_transmissions",
    "with_parameter",
]
