"""Photon-pair sources: emission statistics and ideal output states.

Alice's source is a heralded single-photon source with one signal mode.
Bob's Sagnac source is two pair-emission processes, one per arm
(``HV``: signal H / target V, ``VH``: signal V / target H). ``mu`` is the
mean number of pairs per pulse per polarization qubit, so each arm emits
``mu / 2`` on average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import stats

from .channel import threshold_click
from .qstate import BellState, DensityMatrix

Statistics = Literal["poisson", "thermal"]

HERALDED_MODES = ("signal",)
ENTANGLED_MODES = ("HV", "VH")


@dataclass(frozen=True)
class PairSourceParams:
    mu: float
    spectral_purity: float = 1.0
    herald_efficiency: float = 1.0
    signal_efficiency: float = 1.0
    statistics: Statistics = "poisson"
    intrinsic_visibility: float = 1.0

    def __post_init__(self) -> None:
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu!r}")
        for name in ("herald_efficiency", "signal_efficiency"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
        if not 0.0 <= self.spectral_purity <= 1.0:
            raise ValueError("spectral_purity must lie in [0, 1]")
        if not 0.0 <= self.intrinsic_visibility <= 1.0:
            raise ValueError("intrinsic_visibility must lie in [0, 1]")
        if self.statistics not in ("poisson", "thermal"):
            raise ValueError(f"unknown statistics {self.statistics!r}")

    @property
    def thermal_modes(self) -> float:
        """Effective number of thermal modes, ``1/purity`` (inf when purity is 0)."""
        return math.inf if self.spectral_purity == 0 else 1.0 / self.spectral_purity


@dataclass(frozen=True)
class PulseTrain:
    rep_rate: float = 500e6
    pulse_fwhm: float = 65e-12

    def __post_init__(self) -> None:
        if self.rep_rate <= 0 or self.pulse_fwhm <= 0:
            raise ValueError("rep_rate and pulse_fwhm must be positive")
        if self.pulse_fwhm >= 1.0 / self.rep_rate:
            raise ValueError("pulses overlap: pulse_fwhm must be shorter than the period")

    @property
    def period(self) -> float:
        return 1.0 / self.rep_rate

    def gate_acceptance(self, window: float) -> float:
        """Probability that two Gaussian-pulse photons land within ``window``.

        The arrival difference of two independent photons has standard
        deviation ``sqrt(2) * sigma``; a centred gate of full width ``window``
        accepts ``erf(window / (4 sigma))``.
        """
        sigma = self.pulse_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        return math.erf(window / (4.0 * sigma))


@dataclass
class EmissionSample:
    """Per-slot pair counts keyed by emission mode."""

    pairs_per_mode: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_slots(self) -> int:
        return len(next(iter(self.pairs_per_mode.values())))


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def _nbinom(params: PairSourceParams):
    k = params.thermal_modes
    return stats.nbinom(k, k / (k + params.mu))


def sample_pairs(params: PairSourceParams, rng: np.random.Generator, size: int) -> np.ndarray:
    if params.mu == 0:
        return np.zeros(size, dtype=np.int64)
    if params.statistics == "poisson" or math.isinf(params.thermal_modes):
        return rng.poisson(params.mu, size)
    k = params.thermal_modes
    return rng.negative_binomial(k, k / (k + params.mu), size)


def arm_params(params: PairSourceParams) -> PairSourceParams:
    """Emission parameters of one arm of the entangled source."""
    return replace(params, mu=params.mu / 2.0)


def sample_emission(
    params: PairSourceParams,
    rng: np.random.Generator,
    n_slots: int,
    entangled: bool = False,
) -> EmissionSample:
    if entangled:
        arm = arm_params(params)
        return EmissionSample({m: sample_pairs(arm, rng, n_slots) for m in ENTANGLED_MODES})
    return EmissionSample({m: sample_pairs(params, rng, n_slots) for m in HERALDED_MODES})


def emission_distribution(params: PairSourceParams, n_max: int) -> tuple[np.ndarray, float]:
    """Pair-number pmf on ``0..n_max`` for one emission mode.

    Returns ``(pmf, tail)`` where ``tail`` is the probability of more than
    ``n_max`` pairs.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = np.arange(n_max + 1)
    if params.mu == 0:
        pmf = np.zeros(n_max + 1)
        pmf[0] = 1.0
        return pmf, 0.0
    if params.statistics == "poisson" or math.isinf(params.thermal_modes):
        dist = stats.poisson(params.mu)
    else:
        dist = _nbinom(params)
    pmf = dist.pmf(n)
    return pmf, float(dist.sf(n_max))


def entangled_pair_distribution(params: PairSourceParams, n_max: int) -> tuple[dict, float]:
    """Joint pmf of ``(k, l)`` pairs in the HV and VH arms with ``k + l <= n_max``.

    Returns ``({(k, l): p}, tail)``.
    """
    pmf, _ = emission_distribution(arm_params(params), n_max)
    joint = {(k, l): float(pmf[k] * pmf[l]) for k in range(n_max + 1) for l in range(n_max + 1 - k)}
    return joint, max(0.0, 1.0 - sum(joint.values()))


@dataclass(frozen=True)
class HeraldedState:
    herald_probability: float
    weights: np.ndarray  # vacuum, one photon, two or more, conditioned on a herald
    tail: float

    @property
    def single_photon_weight(self) -> float:
        return float(self.weights[1])

    @property
    def multi_photon_weight(self) -> float:
        return float(self.weights[2])


def heralded_state(params: PairSourceParams, n_max: int = 6, herald_noise: float = 0.0) -> HeraldedState:
    """Signal-arm photon-number mixture given a click of the herald detector."""
    pmf, tail = emission_distribution(params, n_max)
    weights = np.zeros(3)
    for n, p in enumerate(pmf):
        click = threshold_click(n, params.herald_efficiency, herald_noise)
        if p * click == 0:
            continue
        thinned = stats.binom.pmf(np.arange(n + 1), n, params.signal_efficiency)
        weights[0] += p * click * thinned[0]
        if n >= 1:
            weights[1] += p * click * thinned[1]
            weights[2] += p * click * thinned[2:].sum()
    total = weights.sum()
    if total == 0:
        return HeraldedState(0.0, np.full(3, np.nan), tail)
    return HeraldedState(float(total), weights / total, tail)


def entangled_state(params: PairSourceParams) -> DensityMatrix:
    """Single-pair output ``v|Psi-><Psi-| + (1-v) I/4``."""
    v = params.intrinsic_visibility
    return DensityMatrix(v * BellState.PSI_MINUS.density().entries + (1 - v) * np.eye(4) / 4.0)
