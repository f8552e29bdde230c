"""Stratified Monte Carlo backend with forced detection.

Each measured pattern is estimated separately. Slots are split by which
sources emitted: the empty slot (noise only) is evaluated exactly, the
other three classes are sampled with a fixed share of the slot budget and
reweighted by their emission probability. Within a class every latent
variable is drawn in turn: pair numbers, residual polarization rotations,
the measurement-record branch, the photon number reaching the target
detector and its click. The required herald and BSM clicks are forced: the
branch is drawn from its distribution conditioned on those clicks and the
slot carries their probability as a weight, so no sample is wasted on
slots that would have been discarded. Every step preserves the mean, so
the estimator is unbiased.
"""
from __future__ import annotations

import time

import numpy as np

from ..channel import sprs_rate
from ..sources import rng_stream
from .analytic import pattern_probability
from .measurements import TELEPORT_INPUTS, Quantity, build_record, measurement_plan
from .model import Pattern, SlotModel
from .scenario import DETECTORS, ResultRecord, Scenario

# share of the slot budget per emission class (alice emitted, bob emitted)
CLASS_SHARE = {(True, True): 0.8, (True, False): 0.1, (False, True): 0.1}
BLOCK_SIZE = 2_500_000


class _VacuumModel:
    """View of a slot model restricted to the empty configuration."""

    def __init__(self, model: SlotModel):
        self._m = model

    def __getattr__(self, name):
        return getattr(self._m, name)

    def configurations(self, pattern):
        yield 0, 0, 1.0


def vacuum_probability(model: SlotModel, q: Quantity) -> float:
    """Probability of the pattern given that neither source emitted."""
    return pattern_probability(_VacuumModel(model), q.pattern, q.analyzer)


def _class_pmfs(model: SlotModel, pattern: Pattern):
    pa = model.p_alice if pattern.alice is not None else np.array([1.0])
    pb = model.p_bob
    out = {}
    for a_on, b_on in CLASS_SHARE:
        wa = pa[1:].sum() if a_on else pa[0]
        wb = pb[1:].sum() if b_on else pb[0]
        if wa * wb <= 0:
            continue
        ca = pa[1:] / pa[1:].sum() if a_on else np.array([1.0])
        cb = pb[1:] / pb[1:].sum() if b_on else np.array([1.0])
        out[(a_on, b_on)] = (float(wa * wb), ca, cb, int(a_on), int(b_on))
    return out, float(pa[0] * pb[0])


def _sample_class(model: SlotModel, q: Quantity, n: int, ca, cb, a0: int, b0: int, rng) -> tuple[float, float]:
    """Sum of slot weights and of squared weights for ``n`` slots of one class."""
    pat = q.pattern
    grid = rng.multinomial(n, np.outer(ca, cb).ravel()).reshape(len(ca), len(cb))
    sx = sx2 = 0.0
    for ia, ib in zip(*np.nonzero(grid)):
        n_a, n_b = ia + a0, ib + b0
        branches = model.alice_branches(pat, n_a)
        tw = rng.multinomial(grid[ia, ib], [w for w, _ in branches])
        for (_, vec), n_tw in zip(branches, tw):
            if n_tw:
                x, x2 = _sample_branches(model, q, n_a, n_b, vec, int(n_tw), rng)
                sx += x
                sx2 += x2
    return sx, sx2


def _sample_branches(model: SlotModel, q: Quantity, n_a: int, n_b: int, vec, n: int, rng) -> tuple[float, float]:
    pat = q.pattern
    br = model.branches(pat, n_a, n_b, vec)
    p = br.probabilities
    forced = p / p.sum() * model.herald_factor(pat, n_a) * model.bsm_weights(pat, br)
    weight = float(forced.sum())  # probability that the forced clicks happen
    if weight <= 0:
        return 0.0, 0.0
    if q.analyzer is None:
        return n * weight, n * weight**2
    counts = rng.multinomial(n, forced / weight)
    live = counts > 0
    chi, counts, p_live = br.chi[live], counts[live], p[live]
    analyzers = model.target_analyzers(q.analyzer)
    split = rng.multinomial(counts, np.broadcast_to([w for w, _ in analyzers], (len(counts), len(analyzers))))
    hits = 0
    for j, (_, avec) in enumerate(analyzers):
        rep, n_s = model.target_rotation(n_b, avec)
        dist = np.abs(chi @ rep.T) ** 2 / p_live[:, None]
        dist /= dist.sum(axis=1, keepdims=True)
        photons = rng.multinomial(split[:, j], dist)
        hits += int(rng.binomial(photons, model.target_click(n_s, pat.noiseless)[None, :]).sum())
    return hits * weight, hits * weight**2


def estimate(model: SlotModel, q: Quantity, n_slots: int, seed: int, key: int, block_size: int = BLOCK_SIZE):
    """Unbiased estimate of one pattern probability and its standard error."""
    classes, w_vac = _class_pmfs(model, q.pattern)
    p = w_vac * vacuum_probability(model, q) if w_vac > 0 else 0.0
    var = 0.0
    share_total = sum(CLASS_SHARE[c] for c in classes)
    for ci, (cls, (weight, ca, cb, a0, b0)) in enumerate(sorted(classes.items())):
        n_cls = max(1, int(round(n_slots * CLASS_SHARE[cls] / share_total)))
        sx = sx2 = 0.0
        done, block = 0, 0
        while done < n_cls:
            size = min(block_size, n_cls - done)
            x, x2 = _sample_class(model, q, size, ca, cb, a0, b0, rng_stream(seed, key, ci, block))
            sx, sx2 = sx + x, sx2 + x2
            done += size
            block += 1
        mean = sx / n_cls
        p += weight * mean
        var += weight**2 * max(0.0, sx2 / n_cls - mean**2) / n_cls
    return p, float(np.sqrt(var))


def run_monte_carlo(
    s: Scenario,
    n_slots: int | None = None,
    seed: int | None = None,
    inputs=TELEPORT_INPUTS,
    block_size: int = BLOCK_SIZE,
) -> ResultRecord:
    """Sampled counterpart of :func:`run_analytic`, deterministic in ``(seed, n_slots)``."""
    start = time.perf_counter()
    n_slots = s.run.n_slots if n_slots is None else int(n_slots)
    seed = s.run.seed if seed is None else int(seed)
    if n_slots < 1:
        raise ValueError("n_slots must be at least 1")
    model = SlotModel(s)
    plan = measurement_plan(s, inputs)
    probs, sigmas = {}, {}
    for key, q in enumerate(plan):
        probs[q.name], sigmas[q.name] = estimate(model, q, n_slots, seed, key, block_size)
        probs[q.name] = max(0.0, probs[q.name])
    # free-running noise counts over the simulated acquisition time
    duration = n_slots / s.pulse_train.rep_rate
    noise_rng = rng_stream(seed, len(plan), 0, 0)
    noise = {}
    for d in DETECTORS:
        rate = (sprs_rate(s.raman[d], s.classical_plan) if d in s.raman else 0.0) + s.detectors[d].dark_rate
        counts = noise_rng.poisson(rate * duration)
        noise[d] = (counts / duration, np.sqrt(counts) / duration)
    rec = build_record(
        s, probs, sigmas, "monte_carlo", seed=seed, rng=rng_stream(seed, len(plan), 1, 0), inputs=inputs, noise=noise
    )
    rec.n_slots = n_slots
    rec.wall_time = time.perf_counter() - start
    return rec
