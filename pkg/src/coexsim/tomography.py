"""Single-qubit maximum-likelihood state tomography."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import optimize

from .qstate import TOMOGRAPHY_LABELS, AnalyzerSetting, DensityMatrix, PureState, analyzer, fidelity


class TomographyError(ValueError):
    pass


def _setting(key) -> AnalyzerSetting:
    return key if isinstance(key, AnalyzerSetting) else analyzer(str(key))


@dataclass
class TomographyCounts:
    counts: dict[AnalyzerSetting, float]
    duration: float = 0.0
    scenario_hash: str = ""
    labels: dict[AnalyzerSetting, str] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, counts: Mapping, duration: float = 0.0, scenario_hash: str = "") -> "TomographyCounts":
        data, labels = {}, {}
        for key, value in counts.items():
            s = _setting(key)
            if value < 0:
                raise TomographyError("counts must be non-negative")
            data[s] = float(value)
            if not isinstance(key, AnalyzerSetting):
                labels[s] = str(key)
        return cls(data, duration, scenario_hash, labels)

    @property
    def settings(self) -> list[AnalyzerSetting]:
        return list(self.counts)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.counts.values()), dtype=float)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def replace_values(self, values) -> "TomographyCounts":
        return TomographyCounts(dict(zip(self.settings, map(float, values))), self.duration, self.scenario_hash, self.labels)


@dataclass
class ReconstructionResult:
    rho: DensityMatrix
    log_likelihood: float
    iterations: int
    gradient_norm: float
    converged: bool
    fidelity_to_target: float | None = None
    fidelity_uncertainty: float | None = None


def forward_counts(rho, settings, total_exposure: float, efficiencies=None) -> dict[AnalyzerSetting, float]:
    """Expected counts ``exposure * <P_s> * efficiency`` per setting."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    out = {}
    for i, key in enumerate(settings):
        s = _setting(key)
        eff = 1.0 if efficiencies is None else efficiencies[i]
        out[s] = total_exposure * float(np.trace(m @ s.projector()).real) * eff
    return out


def _design(settings) -> np.ndarray:
    return np.array([[1.0, *s.bloch_vector] for s in settings])


def check_complete(settings) -> None:
    if len(settings) < 4 or np.linalg.matrix_rank(_design(settings)) < 4:
        raise TomographyError("measurement settings are not informationally complete")


def linear_inversion(counts: TomographyCounts) -> np.ndarray:
    """Least-squares Bloch vector, pulled back into the unit ball."""
    design = 0.5 * _design(counts.settings)
    sol, *_ = np.linalg.lstsq(design, counts.values, rcond=None)
    if sol[0] <= 0:
        return np.zeros(3)
    r = sol[1:] / sol[0]
    n = np.linalg.norm(r)
    return r / n if n > 1 else r


def _params_from_rho(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    t = np.sqrt(np.clip(w, 0, None))[:, None] * v.conj().T
    r = np.linalg.qr(t, mode="r")
    # fix the gauge so the diagonal is real and non-negative
    phases = np.exp(-1j * np.angle(np.diag(r)))
    r = phases[:, None] * r
    return np.array([r[0, 0].real, r[1, 1].real, r[0, 1].real, r[0, 1].imag])


def _r_from_params(x: np.ndarray) -> np.ndarray:
    return np.array([[x[0], x[2] + 1j * x[3]], [0.0, x[1]]], dtype=complex)


def mle_reconstruct(
    counts: TomographyCounts,
    target: PureState | None = None,
    gtol: float = 1e-9,
    max_iter: int = 10_000,
) -> ReconstructionResult:
    """Maximize the Poisson likelihood over ``rho = R^dag R / tr``.

    The overall count scale is profiled out. Converged when the gradient
    (objective normalized by total counts) drops below ``gtol``.
    """
    settings = counts.settings
    check_complete(settings)
    n = counts.values
    total = n.sum()
    if total <= 0:
        raise TomographyError("total counts must be positive")
    projectors = np.array([s.projector() for s in settings])
    s_sum = projectors.sum(axis=0)
    floor = 1e-300

    def objective(x):
        r = _r_from_params(x)
        a = r.conj().T @ r
        q = np.einsum("ij,sji->s", a, projectors).real
        big_q = np.trace(a @ s_sum).real
        qc = np.maximum(q, floor)
        f = -(n @ np.log(qc) - total * np.log(big_q)) / total
        g_mat = -(np.einsum("s,sij->ij", n / qc, projectors) - total * s_sum / big_q) / total
        gr = g_mat @ r.conj().T  # df = 2 Re tr(G R^dag dR)
        grad = np.array([2 * gr[0, 0].real, 2 * gr[1, 1].real, 2 * gr[1, 0].real, -2 * gr[1, 0].imag])
        return f, grad

    r0 = DensityMatrix.from_bloch(linear_inversion(counts) * (1 - 1e-12)).entries
    x0 = _params_from_rho(r0)
    x0 = x0 / np.sqrt(np.sum(x0**2))
    res = optimize.minimize(objective, x0, jac=True, method="BFGS", options={"gtol": gtol, "maxiter": max_iter})
    x = res.x
    f, grad = objective(x)
    r = _r_from_params(x)
    a = r.conj().T @ r
    rho = DensityMatrix.physical(a)
    p = np.array([np.trace(rho.entries @ pr).real for pr in projectors])
    scale = total / p.sum()
    lam = np.maximum(scale * p, floor)
    loglik = float(n @ np.log(lam) - lam.sum())
    gnorm = float(np.max(np.abs(grad)))
    result = ReconstructionResult(rho, loglik, int(res.nit), gnorm, bool(gnorm < gtol or res.success))
    if target is not None:
        result.fidelity_to_target = fidelity(rho, target)
    return result


def log_likelihood(rho, counts: TomographyCounts) -> float:
    """Poisson log-likelihood of ``counts`` under ``rho`` with the scale profiled out."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    p = np.array([np.trace(m @ s.projector()).real for s in counts.settings])
    n = counts.values
    lam = np.maximum(n.sum() / p.sum() * p, 1e-300)
    return float(n @ np.log(lam) - lam.sum())


def bootstrap_uncertainty(
    counts: TomographyCounts,
    statistic: Callable[[TomographyCounts], float],
    n_resamples: int = 1000,
    rng: np.random.Generator | None = None,
) -> float:
    """Sample standard deviation of ``statistic`` under Poisson resampling."""
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    rng = rng or np.random.default_rng(0)
    values = counts.values
    draws = rng.poisson(values, size=(n_resamples, len(values)))
    stats_ = []
    for row in draws:
        try:
            stats_.append(statistic(counts.replace_values(row)))
        except TomographyError:
            continue
    return float(np.std(stats_, ddof=1)) if len(stats_) >= 2 else float("nan")


def fidelity_statistic(target: PureState) -> Callable[[TomographyCounts], float]:
    def stat(c: TomographyCounts) -> float:
        return fidelity(mle_reconstruct(c).rho, target)

    return stat


def six_setting_counts(rho, exposure: float) -> TomographyCounts:
    return TomographyCounts.from_mapping(
        {lab: v for lab, v in zip(TOMOGRAPHY_LABELS, forward_counts(rho, TOMOGRAPHY_LABELS, exposure).values())}
    )
