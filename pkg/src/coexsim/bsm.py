"""Bell state measurement by two-photon interference at a beam splitter.

Input ports: port 1 carries Alice's photons (spectral mode ``e_A``), port 2
Bob's (spectral mode ``e_B``), with ``|<e_A|e_B>|^2 = zeta``. Each photon is
split into a common spectral component (amplitude ``sqrt(zeta)`` for Alice,
1 for Bob) and an orthogonal one; polarizers before D1 (output c) and D2
(output d) project onto the configured settings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fock
from .channel import threshold_click
from .qstate import AnalyzerSetting, analyzer

# input-mode order of the measurement block
PORT1_H, PORT1_V, PORT2_H, PORT2_V = range(4)
N_INPUT = 4
N_OUTPUT = 12  # 8 port/polarization/spectral modes + 4 loss modes

# detector -> output modes (port c/d, projector parallel/orthogonal, spectral C/O)
DETECTOR_MODES = {"d1": (0, 1), "d2": (4, 5), "d1_perp": (2, 3), "d2_perp": (6, 7)}


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IndistinguishabilityParams:
    mode_overlap: float = 1.0
    arrival_offset: float = 0.0  # s
    coherence_time: float = 41e-12  # s; ~60 pm filter at 1290 nm

    def __post_init__(self) -> None:
        if not 0.0 <= self.mode_overlap <= 1.0:
            raise ValueError("mode_overlap must lie in [0, 1]")
        if self.coherence_time <= 0:
            raise ValueError("coherence_time must be positive")


def effective_overlap(params: IndistinguishabilityParams) -> float:
    """Mode overlap reduced by a Gaussian arrival-time mismatch."""
    if math.isinf(params.arrival_offset):
        return 0.0
    return params.mode_overlap * math.exp(-((params.arrival_offset / params.coherence_time) ** 2))


@dataclass(frozen=True)
class BsmConfig:
    splitter_ratio: float = 0.5
    projector_d1: AnalyzerSetting = field(default_factory=lambda: analyzer("H"))
    projector_d2: AnalyzerSetting = field(default_factory=lambda: analyzer("V"))
    noise_click_prob_d1: float = 0.0
    noise_click_prob_d2: float = 0.0
    four_detectors: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.splitter_ratio < 1.0:
            raise ValueError("splitter_ratio must lie in (0, 1)")
        for p in (self.noise_click_prob_d1, self.noise_click_prob_d2):
            if not 0.0 <= p <= 1.0:
                raise ValueError("noise click probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class BsmOutcome:
    label: str  # "psi_minus_click" or "no_click"
    contributing: str = ""


def output_map(zeta: float, config: BsmConfig, transmissions: Sequence[float] = (1.0, 1.0)) -> np.ndarray:
    """Single-photon amplitude matrix from the 4 input modes to the 12 output modes."""
    t_a, t_b = transmissions
    bs_t = math.sqrt(config.splitter_ratio)
    bs_r = math.sqrt(1.0 - config.splitter_ratio)
    p1 = config.projector_d1.state().amplitudes
    p2 = config.projector_d2.state().amplitudes
    pols = {0: (p1, _perp(p1)), 1: (p2, _perp(p2))}
    spec_a = (math.sqrt(zeta), math.sqrt(1.0 - zeta))
    spec_b = (1.0, 0.0)
    # port 1 -> (c: t, d: r); port 2 -> (c: r, d: -t)
    split = {0: (bs_t, bs_r), 1: (bs_r, -bs_t)}
    m = np.zeros((N_OUTPUT, N_INPUT), dtype=complex)
    for j in range(N_INPUT):
        port = j // 2
        pol_in = np.eye(2)[j % 2]
        spec = spec_a if port == 0 else spec_b
        amp_t = math.sqrt(t_a if port == 0 else t_b)
        for out_port in (0, 1):
            for k, proj in enumerate(pols[out_port]):
                overlap = np.vdot(proj, pol_in)
                for s in (0, 1):
                    m[out_port * 4 + k * 2 + s, j] = amp_t * split[port][out_port] * overlap * spec[s]
        m[8 + j, j] = math.sqrt(1.0 - (t_a if port == 0 else t_b))
    return m


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


@dataclass
class BsmBranches:
    """Measurement-record branches of one input state.

    ``counts[g, k]`` is the photon number reaching detector ``detectors[k]``
    in branch ``g``; ``chi[g]`` is the (unnormalized) ancilla vector left in
    that branch over ``ancilla_basis``.
    """

    detectors: tuple[str, ...]
    counts: np.ndarray
    chi: np.ndarray
    ancilla_basis: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.einsum("ga,ga->g", self.chi, self.chi.conj()).real

    def operator(self, weights: np.ndarray) -> np.ndarray:
        """Ancilla operator ``sum_g w_g |chi_g><chi_g|``."""
        return (self.chi.T * weights) @ self.chi.conj()


def expand(
    occ: np.ndarray,
    amps: np.ndarray,
    zeta: float,
    config: BsmConfig,
    transmissions: Sequence[float] = (1.0, 1.0),
) -> BsmBranches:
    """Propagate an input state through loss and the splitter; group by record.

    ``occ`` rows hold the 4 measurement-block modes followed by any ancilla
    modes, which pass through untouched.
    """
    occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
    n_anc = occ.shape[1] - N_INPUT
    m = output_map(zeta, config, transmissions)
    full = np.zeros((N_OUTPUT + n_anc, N_INPUT + n_anc), dtype=complex)
    full[:N_OUTPUT, :N_INPUT] = m
    full[N_OUTPUT:, N_INPUT:] = np.eye(n_anc)
    out_occ, out_amp = fock.transform(occ, amps, full)
    record, anc = out_occ[:, :N_OUTPUT], out_occ[:, N_OUTPUT:]
    rec_keys, rec_idx = np.unique(record, axis=0, return_inverse=True)
    anc_keys, anc_idx = np.unique(anc, axis=0, return_inverse=True)
    chi = np.zeros((len(rec_keys), len(anc_keys)), dtype=complex)
    np.add.at(chi, (rec_idx.reshape(-1), anc_idx.reshape(-1)), out_amp)
    names = tuple(DETECTOR_MODES) if config.four_detectors else ("d1", "d2")
    counts = np.stack([rec_keys[:, list(DETECTOR_MODES[d])].sum(axis=1) for d in names], axis=1)
    return BsmBranches(names, counts, chi, anc_keys)


def pattern_weights(
    branches: BsmBranches,
    clicks: Sequence[str],
    silent: Sequence[str] = (),
    efficiencies: dict | None = None,
    noise: dict | None = None,
) -> np.ndarray:
    """Per-branch probability that ``clicks`` fire and ``silent`` stay dark."""
    efficiencies = efficiencies or {}
    noise = noise or {}
    w = np.ones(len(branches.counts))
    for d in clicks:
        k = branches.detectors.index(d)
        w = w * threshold_click(branches.counts[:, k], efficiencies.get(d, 1.0), noise.get(d, 0.0))
    for d in silent:
        k = branches.detectors.index(d)
        eta = efficiencies.get(d, 1.0)
        miss = (1.0 - noise.get(d, 0.0)) * (1.0 - eta) ** branches.counts[:, k] if eta < 1 else \
            np.where(branches.counts[:, k] > 0, 0.0, 1.0 - noise.get(d, 0.0))
        w = w * miss
    return w


@dataclass
class BsmResult:
    click_probability: float
    conditional_state: np.ndarray | None  # normalized ancilla operator, None when no click possible
    ancilla_basis: np.ndarray
    contributions: dict[str, float]

    def outcomes(self) -> dict[BsmOutcome, float]:
        return {
            BsmOutcome("psi_minus_click"): self.click_probability,
            BsmOutcome("no_click"): 1.0 - self.click_probability,
        }


def bsm_event_probabilities(
    occ: np.ndarray,
    amps: np.ndarray,
    zeta_eff: float,
    config: BsmConfig,
    efficiencies: Sequence[float] = (1.0, 1.0),
    transmissions: Sequence[float] = (1.0, 1.0),
    n_max: int | None = None,
) -> BsmResult:
    """Heralding probability of the H@D1, V@D2 pattern and the ancilla it leaves.

    ``occ``/``amps`` describe a pure input over ``[1H, 1V, 2H, 2V, ancilla...]``.
    Noise clicks are independent OR-events with the probabilities in
    ``config``.
    """
    occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
    if n_max is not None and occ[:, :N_INPUT].sum(axis=1).max() > 2 * n_max:
        raise TruncationError("input photon number exceeds the truncation")
    br = expand(occ, amps, zeta_eff, config, transmissions)
    eff = {"d1": efficiencies[0], "d2": efficiencies[1]}
    noise = {"d1": config.noise_click_prob_d1, "d2": config.noise_click_prob_d2}
    w = pattern_weights(br, ("d1", "d2"), (), eff, noise)
    total_norm = float(br.probabilities.sum())
    probs = br.probabilities
    s1 = threshold_click(br.counts[:, 0], eff["d1"])
    s2 = threshold_click(br.counts[:, 1], eff["d2"])
    p1, p2 = noise["d1"], noise["d2"]
    multi = occ[:, :N_INPUT].sum(axis=1).max() > 2
    tag = "involving-multi-pair" if multi else "signal-signal"
    contributions = {
        tag: float(probs @ (s1 * s2)),
        "signal-noise": float(probs @ (s1 * (1 - s2) * p2 + (1 - s1) * s2 * p1)),
        "noise-noise": float(probs @ ((1 - s1) * (1 - s2))) * p1 * p2,
    }
    k = br.operator(w)
    p_click = float(np.trace(k).real) / total_norm if total_norm else 0.0
    state = k / np.trace(k).real if np.trace(k).real > 0 else None
    return BsmResult(p_click, state, br.ancilla_basis, contributions)


def hom_dip_scan(scenario, offsets: Sequence[float]):
    """Four-fold HOM coincidence rate versus arrival offset; see ``engine``."""
    from .engine.experiments import hom_dip_scan as _scan

    return _scan(scenario, offsets)
