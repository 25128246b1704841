"""Simulated quadrature measurements.

Maps instrument parameters to quadrature settings and draws i.i.d. outcomes
from the corresponding marginal by inverse-CDF sampling on a tabulated
cumulative (4096 points, linear interpolation): deterministic for a given
64-bit seed and stable across platforms.  The generator is numpy's PCG64
(``default_rng``); per-batch streams are spawned from ``(master_seed,
batch_index)`` so campaigns are reproducible batch by batch.

Hardware idealizations: detection is lossless and noise-free, and the
squeezer/heterodyne maps place the sampled distribution exactly at the mapped
ideal marginal (no anti-squeezed contamination of the record).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSetting,
    EmptySchedule,
    InvalidParameter,
    PhaseLockRequired,
)
from .kernels import KernelScale
from .marginals import MarginalEvaluator, QuadratureSetting, default_x_grid
from .twomode import TwoModeSetting, tilde_marginal, _default_x1_grid

__all__ = [
    "GENERATOR_NAME",
    "SqueezerSetting",
    "HeterodyneSettingTwoMode",
    "SampleBatch",
    "squeezer_to_setting",
    "heterodyne_to_setting",
    "sample_marginal",
    "sample_campaign",
    "importance_schedule",
    "tabulated_cdf",
]

GENERATOR_NAME = "numpy-PCG64"
CDF_POINTS = 4096


@dataclass(frozen=True)
class SqueezerSetting:
    """Squeezing pre-amplification ahead of a balanced homodyne detector."""

    s: float
    theta: float
    phase_lock: bool = True

    def __post_init__(self):
        if self.s < 0:
            raise InvalidParameter("squeeze magnitude must be nonnegative")


@dataclass(frozen=True)
class HeterodyneSettingTwoMode:
    """Balanced heterodyne with per-mode phase shifters.

    ``E1``/``E2`` are local-oscillator amplitudes, ``phi`` the LO phase and
    ``theta1``/``theta2`` the per-mode phase shifts.
    """

    E1: float
    E2: float
    phi: float
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        if self.E1 < 0 or self.E2 < 0:
            raise InvalidParameter("local-oscillator amplitudes must be nonnegative")


@dataclass(frozen=True)
class SampleBatch:
    """Outcomes of one setting: the raw (delta-shifted) measurement record.

    ``weight`` is the sampling density of the setting in the (mu, nu) plane
    when the setting was drawn from an importance schedule (1.0 for manually
    scheduled settings).
    """

    setting: object
    outcomes: np.ndarray
    seed: int
    weight: float = 1.0
    generator: str = GENERATOR_NAME

    def __post_init__(self):
        arr = np.asarray(self.outcomes, dtype=float)
        if arr.size and not np.all(np.isfinite(arr)):
            raise InvalidParameter("outcomes must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "outcomes", arr)
        if not self.weight > 0:
            raise InvalidParameter("weight must be positive")


# ---------------------------------------------------------------------------
# instrument maps
# ---------------------------------------------------------------------------


def squeezer_to_setting(sq: SqueezerSetting) -> QuadratureSetting:
    """(mu, nu) of the quadrature measured after squeezing pre-amplification.

    With the local oscillator locked to half the squeezer phase the measured
    direction is radius ``cosh s - sinh s = exp(-s) <= 1`` at angle
    ``theta / 2``; radii above 1 are unreachable for this scheme.
    """
    if not sq.phase_lock:
        raise PhaseLockRequired("the mapping assumes phi = theta / 2")
    r = np.exp(-sq.s)
    return QuadratureSetting(r * np.cos(sq.theta / 2), r * np.sin(sq.theta / 2), 0.0)


def heterodyne_to_setting(h: HeterodyneSettingTwoMode) -> TwoModeSetting:
    """Tilde-only two-mode setting of the heterodyne current.

    ``mu_j = E_j cos(phi + theta_j)``, ``nu_j = E_j sin(phi + theta_j)``; the
    four instrument parameters reach every direction of the setting sphere.
    """
    if h.E1 == 0 and h.E2 == 0:
        raise DegenerateSetting("need at least one nonzero local oscillator")
    psi1, psi2 = h.phi + h.theta1, h.phi + h.theta2
    mu = np.array([h.E1 * np.cos(psi1), h.E2 * np.cos(psi2)])
    nu = np.array([h.E1 * np.sin(psi1), h.E2 * np.sin(psi2)])
    return TwoModeSetting(mu=mu, nu=nu)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _marginal_table(state, setting, num: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(setting, TwoModeSetting):
        x = _default_x1_grid(state, setting, num)
        w = np.asarray(tilde_marginal(state, x, setting), dtype=float)
    else:
        x = default_x_grid(state, setting, num)
        w = np.asarray(MarginalEvaluator(state).values(x, setting), dtype=float)
    return x, w


def tabulated_cdf(state, setting, num: int = CDF_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """(x, CDF) table used by the sampler; also handy for KS checks."""
    from .errors import GridTooNarrow

    x, w = _marginal_table(state, setting, num)
    w = np.clip(w, 0.0, None)
    dx = x[1] - x[0]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * dx)])
    total = cdf[-1]
    if abs(total - 1.0) > 1e-3:
        raise GridTooNarrow(f"cumulative covers only {total:.6f} of the distribution")
    return x, cdf / total


def _batch_seed(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(master_seed), int(index))))


def sample_marginal(state, setting, n: int, seed: int, weight: float = 1.0) -> SampleBatch:
    """Draw ``n`` i.i.d. outcomes of the setting's marginal.

    Outcomes are reported in the raw coordinate ``X = x + delta``: a nonzero
    shift acts as a pure translation of the record.
    """
    if n < 1:
        raise InvalidParameter("need n >= 1 samples")
    x, cdf = tabulated_cdf(state, setting)
    rng = _batch_seed(seed, 0)
    u = rng.random(n)
    outcomes = np.interp(u, cdf, x)
    delta = setting.delta[0] if isinstance(setting, TwoModeSetting) else setting.delta
    return SampleBatch(setting=setting, outcomes=outcomes + delta, seed=int(seed), weight=weight)


def sample_campaign(state, schedule, n_per_setting: int, seed: int) -> list[SampleBatch]:
    """One batch per scheduled setting, with per-batch derived seeds.

    ``schedule`` entries are settings or ``(setting, weight)`` pairs; two
    campaigns with the same master seed are identical batch for batch.
    """
    schedule = list(schedule)
    if not schedule:
        raise EmptySchedule("schedule must contain at least one setting")
    batches = []
    for idx, entry in enumerate(schedule):
        setting, weight = entry if isinstance(entry, tuple) else (entry, 1.0)
        x, cdf = tabulated_cdf(state, setting)
        rng = _batch_seed(seed, idx)
        outcomes = np.interp(rng.random(n_per_setting), cdf, x)
        delta = setting.delta[0] if isinstance(setting, TwoModeSetting) else setting.delta
        batches.append(
            SampleBatch(setting=setting, outcomes=outcomes + delta, seed=int(seed), weight=weight)
        )
    return batches


def importance_schedule(
    n_settings: int,
    scale: KernelScale = KernelScale(),
    r_max: float | None = None,
    seed: int = 0,
    stratified: bool = True,
) -> list[tuple[QuadratureSetting, float]]:
    """Random settings matched to the kernel damping, with their densities.

    Angles are uniform; radii follow ``p(r) ~ r exp(-z^2 r^2 / 4)`` on
    ``(0, r_max]`` (inverted in closed form), so the kernel's Gaussian factor
    cancels in the importance-weighted estimator.  The returned weight is the
    plane density of the setting.

    By default the draws are Latin-hypercube stratified (one radius per
    quantile stratum, one angle per randomly permuted angle stratum): the
    marginal distributions and hence the weights are exactly those of
    independent draws, but the setting-scatter variance drops sharply, which
    is what lets schedules of a few dozen settings reach percent accuracy.
    ``stratified=False`` gives plain independent draws, for which every
    component of the estimator error obeys the plain 1/sqrt(N) law.
    """
    if n_settings < 1:
        raise EmptySchedule("need at least one setting")
    z = scale.z
    if r_max is None:
        r_max = 8.0 / abs(z)
    rng = _batch_seed(seed, 2**32)
    norm = (2.0 / z**2) * (1.0 - np.exp(-(z**2) * r_max**2 / 4.0))
    if stratified:
        u = (np.arange(n_settings) + rng.random(n_settings)) / n_settings
        v = (rng.permutation(n_settings) + rng.random(n_settings)) / n_settings
    else:
        u = rng.random(n_settings)
        v = rng.random(n_settings)
    r = np.sqrt(-4.0 / z**2 * np.log1p(-u * (1.0 - np.exp(-(z**2) * r_max**2 / 4.0))))
    phi = v * 2 * np.pi
    out = []
    for rv, pv in zip(r, phi):
        density = np.exp(-(z**2) * rv**2 / 4.0) / (2 * np.pi * norm)
        out.append((QuadratureSetting(rv * np.cos(pv), rv * np.sin(pv)), float(density)))
    return out
