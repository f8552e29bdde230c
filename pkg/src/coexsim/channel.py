"""Fiber loss, Raman noise, detectors and coincidence gating."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Mapping

import numpy as np
from scipy import stats

Direction = Literal["co", "counter"]


def db_to_transmittance(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


def transmittance_to_db(t: float) -> float:
    return -10.0 * math.log10(t)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


@dataclass(frozen=True)
class FiberSpan:
    length: float  # km
    attenuation: Mapping[str, float] = field(default_factory=dict)  # dB/km keyed by wavelength label (nm)
    extra_losses_db: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("span length must be >= 0")
        if any(a < 0 for a in self.attenuation.values()):
            raise ValueError("attenuation must be >= 0")
        object.__setattr__(self, "attenuation", dict(self.attenuation))
        object.__setattr__(self, "extra_losses_db", tuple(self.extra_losses_db))

    def loss_db(self, wavelength: str) -> float:
        key = str(wavelength)
        if key not in self.attenuation:
            raise KeyError(f"no attenuation given for wavelength {key!r} nm")
        return self.length * self.attenuation[key] + sum(self.extra_losses_db)


def transmittance(span: FiberSpan, wavelength: str, extra_losses_db: Iterable[float] = ()) -> float:
    """Power transmission ``10^(-(L*alpha + sum(extra))/10)``."""
    return db_to_transmittance(span.loss_db(wavelength) + sum(extra_losses_db))


@dataclass(frozen=True)
class RamanNoiseModel:
    """Detected SpRS noise as a linear slope in classical launch power.

    ``coefficient`` is in counts/s per mW of launch power, referenced to the
    detector it feeds.
    """

    coefficient: float
    polarized_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.coefficient < 0:
            raise ValueError("Raman coefficient must be >= 0")
        if not 0.0 <= self.polarized_fraction <= 1.0:
            raise ValueError("polarized_fraction must lie in [0, 1]")

    @classmethod
    def from_spectral_density(
        cls, density_per_nm: float, filter_bandwidth_nm: float, path_efficiency: float, polarized_fraction: float = 0.0
    ) -> "RamanNoiseModel":
        """Slope from a flat noise density (counts/s/nm/mW) through a filter."""
        return cls(density_per_nm * filter_bandwidth_nm * path_efficiency, polarized_fraction)

    def scaled(self, ratio: float) -> "RamanNoiseModel":
        return replace(self, coefficient=self.coefficient * ratio)


@dataclass(frozen=True)
class ClassicalChannelPlan:
    launch_power: float = 0.0  # mW into the shared span
    p_min: float = 0.5  # mW for one error-free channel
    directions: Mapping[str, Direction] = field(default_factory=lambda: {"alice": "co", "bob": "counter"})

    def __post_init__(self) -> None:
        if self.launch_power < 0:
            raise ValueError("launch power must be >= 0")
        if self.p_min <= 0:
            raise ValueError("p_min must be > 0")
        object.__setattr__(self, "directions", dict(self.directions))


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.9
    dark_rate: float = 100.0  # counts/s
    gate_window: float = 500e-12  # s

    def __post_init__(self) -> None:
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in (0, 1]")
        if self.dark_rate < 0:
            raise ValueError("dark rate must be >= 0")
        if self.gate_window <= 0:
            raise ValueError("gate window must be > 0")


def sprs_rate(model: RamanNoiseModel, plan: ClassicalChannelPlan) -> float:
    """Detected Raman noise rate in counts/s, dark counts excluded."""
    if plan.launch_power < 0:
        raise ValueError("negative launch power")
    return model.coefficient * plan.launch_power


def polarizer_factor(polarized_fraction: float, polarized_overlap: float = 0.5) -> float:
    """Fraction of noise passing an ideal polarizer."""
    return 0.5 * (1.0 - polarized_fraction) + polarized_fraction * polarized_overlap


def noise_click_probability(
    rate: float,
    det: DetectorModel,
    after_polarizer: bool = False,
    polarized_fraction: float = 0.0,
    apply_efficiency: bool = True,
) -> float:
    """Probability of at least one noise or dark click inside one gate.

    ``rate`` is the noise flux reaching the polarizer (or the detector when
    ``after_polarizer`` is false). Dark counts are not attenuated by the
    detector efficiency.
    """
    if rate < 0:
        raise ValueError("noise rate must be >= 0")
    flux = rate * (polarizer_factor(polarized_fraction) if after_polarizer else 1.0)
    if apply_efficiency:
        flux *= det.efficiency
    return -math.expm1(-(flux + det.dark_rate) * det.gate_window)


def threshold_click(n, eta: float, noise: float = 0.0):
    """Click probability of a threshold detector hit by ``n`` photons.

    ``1 - (1-noise)(1-eta)^n`` evaluated without cancellation; ``n`` may be
    an integer array.
    """
    n_arr = np.asarray(n)
    if noise >= 1.0:
        out = np.ones(n_arr.shape)
    elif eta >= 1.0:
        out = np.where(n_arr > 0, 1.0, noise)
    else:
        out = -np.expm1(math.log1p(-noise) + n_arr * math.log1p(-eta))
    return float(out) if out.ndim == 0 else out


def thin(n, eta: float, rng: np.random.Generator):
    """Binomial loss on photon counts."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return rng.binomial(n, eta)


def thin_distribution(pmf, eta: float) -> np.ndarray:
    """Photon-number pmf after a loss channel of transmission ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    pmf = np.asarray(pmf, dtype=float)
    out = np.zeros_like(pmf)
    k = np.arange(len(pmf))
    for n, p in enumerate(pmf):
        if p:
            out[: n + 1] += p * stats.binom.pmf(k[: n + 1], n, eta)
    return out


def headroom_ratio(plan: ClassicalChannelPlan) -> float:
    """Launch power over the minimum power of one classical channel."""
    return plan.launch_power / plan.p_min
