"""Photon-number resolved model of one pulse slot, shared by both backends.

A slot is split into configurations ``(n_a, n_b)``: ``n_a`` pairs from
Alice's source and ``n_b`` pairs from Bob's two Sagnac arms together. For each
configuration the joint state of Alice's photons, Bob's signal photons and
Bob's target mode is propagated through loss and the splitter
(:func:`coexsim.bsm.expand`); every measurement-record branch keeps the
target-mode vector it leaves behind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .. import fock
from ..bsm import BsmBranches, BsmConfig, TruncationError, expand, pattern_weights
from ..channel import threshold_click
from ..qstate import PAULIS, AnalyzerSetting, analyzer
from ..sources import arm_params, emission_distribution
from .scenario import Scenario, gate_probabilities

TRUNCATION_LIMIT = 1e-6


@dataclass(frozen=True)
class Pattern:
    """Detectors required to click in one slot, apart from the target detector.

    ``alice`` is the Jones vector of Alice's qubit or ``None`` with her source
    switched off.
    """

    alice: tuple[complex, complex] | None
    herald: bool
    clicks: tuple[str, ...]
    projectors: tuple[AnalyzerSetting, AnalyzerSetting]
    zeta: float
    noiseless: bool = False

    @property
    def order(self) -> int:
        return int(self.herald) + len(self.clicks)


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def twirl_weights(p: float) -> np.ndarray:
    """Kraus weights of I, X, Y, Z for a random Pauli applied with probability ``p``."""
    return np.array([1 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p])


class SlotModel:
    def __init__(self, s: Scenario):
        self.s = s
        n_max = s.run.n_max
        self.n_max = n_max
        self.p_alice, tail_a = emission_distribution(s.alice_source, n_max)
        arm, _ = emission_distribution(arm_params(s.bob_source), n_max)
        self.p_bob = np.zeros(n_max + 1)
        self.bob_terms: dict[int, list[tuple[int, int, float]]] = {}
        for n in range(n_max + 1):
            weights = [(k, n - k, arm[k] * arm[n - k]) for k in range(n + 1)]
            total = sum(w for *_, w in weights)
            self.p_bob[n] = total
            if total > 0:
                self.bob_terms[n] = [(k, l, (-1) ** l * math.sqrt(w / total)) for k, l, w in weights if w > 0]
        self.tail = 1.0 - self.p_alice.sum() * self.p_bob.sum()
        if self.tail > TRUNCATION_LIMIT:
            raise TruncationError(
                f"probability beyond n_max={n_max} is {self.tail:.2e} > {TRUNCATION_LIMIT:g}; "
                f"increase n_max to at least {self.suggest_n_max()}"
            )
        t = {p: s.links[p].transmission() for p in s.links}
        self.t_alice = t["alice"]
        self.t_bob = t["bob"]
        self.eta_herald = t["herald"] * s.detectors["d0"].efficiency
        self.eta_target = t["target"] * s.detectors["d3"].efficiency
        self.eff = {"d1": s.detectors["d1"].efficiency, "d2": s.detectors["d2"].efficiency}
        self.noise = gate_probabilities(s)
        self.alice_twirl = twirl_weights(s.links["alice"].polarization_error)
        v = s.bob_source.intrinsic_visibility * (1 - s.links["target"].polarization_error)
        self.target_twirl = twirl_weights(1 - v)
        self._branches: dict = {}
        self._povm: dict = {}

    def suggest_n_max(self) -> int:
        for n in range(self.n_max + 1, 40):
            pa, _ = emission_distribution(self.s.alice_source, n)
            arm, _ = emission_distribution(arm_params(self.s.bob_source), n)
            pb = sum(arm[k] * arm[m - k] for m in range(n + 1) for k in range(m + 1))
            if 1 - pa.sum() * pb <= TRUNCATION_LIMIT:
                return n
        return 40

    @cached_property
    def gate_acceptance(self) -> float:
        return self.s.pulse_train.gate_acceptance(self.s.detectors["d0"].gate_window)

    # ---- configurations -------------------------------------------------

    def configurations(self, pattern: Pattern):
        """``(n_a, n_b, weight)`` over the truncated photon-number space."""
        alice_range = range(self.n_max + 1) if pattern.alice is not None else (0,)
        for n_a in alice_range:
            pa = self.p_alice[n_a] if pattern.alice is not None else 1.0
            for n_b in range(self.n_max + 1):
                w = pa * self.p_bob[n_b]
                if w > 0:
                    yield n_a, n_b, w

    def alice_branches(self, pattern: Pattern, n_a: int):
        """Alice's polarization after the residual twirl, with weights."""
        if n_a == 0 or pattern.alice is None:
            return [(1.0, (1.0 + 0j, 0j))]
        psi = np.asarray(pattern.alice, dtype=complex)
        out = []
        for w, sigma in zip(self.alice_twirl, PAULIS):
            if w > 0:
                v = sigma @ psi
                out.append((float(w), (complex(v[0]), complex(v[1]))))
        return out

    def herald_factor(self, pattern: Pattern, n_a: int) -> float:
        if not pattern.herald:
            return 1.0
        return threshold_click(n_a, self.eta_herald, 0.0 if pattern.noiseless else self.noise["d0"])

    def input_state(self, n_a: int, n_b: int, alice_vec) -> tuple[np.ndarray, np.ndarray]:
        """Occupations over ``[1H, 1V, 2H, 2V, b2H, b2V]`` and amplitudes."""
        alpha, beta = alice_vec
        a_rows, a_amps = [], []
        for j in range(n_a + 1):
            amp = math.sqrt(math.comb(n_a, j)) * alpha**j * beta ** (n_a - j)
            if amp != 0:
                a_rows.append((j, n_a - j))
                a_amps.append(amp)
        occ, amps = [], []
        for (ah, av), aa in zip(a_rows, a_amps):
            for k, l, c in self.bob_terms[n_b]:
                occ.append((ah, av, k, l, l, k))
                amps.append(aa * c)
        return np.array(occ, dtype=np.int64), np.array(amps, dtype=complex)

    def branches(self, pattern: Pattern, n_a: int, n_b: int, alice_vec) -> BsmBranches:
        """Record branches with the target vector in the canonical basis ``fock_basis(2, n_b)``."""
        key = (n_a, n_b, alice_vec, pattern.projectors, pattern.zeta)
        if key not in self._branches:
            occ, amps = self.input_state(n_a, n_b, alice_vec)
            cfg = BsmConfig(
                splitter_ratio=self.s.bsm_config.splitter_ratio,
                projector_d1=pattern.projectors[0],
                projector_d2=pattern.projectors[1],
            )
            br = expand(occ, amps, pattern.zeta, cfg, (self.t_alice, self.t_bob))
            chi = np.zeros((len(br.counts), n_b + 1), dtype=complex)
            # canonical index of occupation (h, v) is n_b - h
            chi[:, n_b - br.ancilla_basis[:, 0]] = br.chi
            self._branches[key] = BsmBranches(br.detectors, br.counts, chi, fock.fock_basis(2, n_b))
        return self._branches[key]

    def bsm_weights(self, pattern: Pattern, br: BsmBranches) -> np.ndarray:
        noise = {} if pattern.noiseless else {d: self.noise[d] for d in ("d1", "d2")}
        return pattern_weights(br, pattern.clicks, (), self.eff, noise)

    # ---- target detector --------------------------------------------------

    def target_rotation(self, n: int, vec) -> tuple[np.ndarray, np.ndarray]:
        """Fock representation of the analyzer-basis change and photons in the analyzed mode."""
        v = np.asarray(vec, dtype=complex)
        w = np.array([v.conj(), _perp(v).conj()])
        rep, basis = fock.representation(w, n)
        return rep, basis[:, 0]

    def target_click(self, n_s: np.ndarray, noiseless: bool = False) -> np.ndarray:
        return np.asarray(threshold_click(n_s, self.eta_target, 0.0 if noiseless else self.noise["d3"]), dtype=float)

    def target_analyzers(self, setting: AnalyzerSetting):
        """Analyzer vectors seen by an untwirled target, one per Pauli branch."""
        v = setting.state().amplitudes
        return [(float(w), tuple(sigma @ v)) for w, sigma in zip(self.target_twirl, PAULIS) if w > 0]

    def target_povm(self, n: int, setting: AnalyzerSetting, noiseless: bool = False) -> np.ndarray:
        """Click operator of the target detector on the ``n``-photon sector, twirl included."""
        key = (n, setting, noiseless)
        if key not in self._povm:
            e = np.zeros((n + 1, n + 1), dtype=complex)
            for w, vec in self.target_analyzers(setting):
                rep, n_s = self.target_rotation(n, vec)
                e += w * (rep.conj().T * self.target_click(n_s, noiseless)) @ rep
            self._povm[key] = e
        return self._povm[key]


def hom_pattern(zeta: float) -> Pattern:
    h = analyzer("H")
    return Pattern((1.0 + 0j, 0j), True, ("d1", "d2"), (h, h), zeta)


def teleport_pattern(s: Scenario, alice_vec) -> Pattern:
    cfg = s.bsm_config
    return Pattern(tuple(complex(a) for a in alice_vec), True, ("d1", "d2"), (cfg.projector_d1, cfg.projector_d2), s.zeta)


def entanglement_pattern(s: Scenario, projector: AnalyzerSetting) -> Pattern:
    """Bob's source alone: the D2 polarizer analyzes Bob's signal photon."""
    return Pattern(None, False, ("d2",), (s.bsm_config.projector_d1, projector), s.zeta)
