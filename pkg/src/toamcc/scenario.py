"""Synthetic TOA trials: uniform deployment, Gaussian noise, uniform NLOS bias.

Every random component draws from its own child stream of
``numpy.random.SeedSequence(seed)``, so changing e.g. ``b_max`` rescales the
NLOS biases without touching the geometry or the Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Child-stream indices of the trial SeedSequence.
_DEPLOY, _SELECT, _NOISE, _BIAS = range(4)


@dataclass(frozen=True)
class ScenarioParams:
    d: int = 2
    L: int = 10
    region: float = 20.0
    sigma_g2: float = 0.1
    b_max: float = 5.0
    l_nlos: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if self.L < self.d + 1:
            raise ValueError(f"L must be >= d+1 = {self.d + 1}, got {self.L}")
        if not 0 <= self.l_nlos <= self.L:
            raise ValueError(f"l_nlos must lie in [0, L={self.L}], got {self.l_nlos}")
        if not self.region > 0:
            raise ValueError("region must be > 0")
        if self.sigma_g2 < 0:
            raise ValueError("sigma_g2 must be >= 0")
        if self.b_max < 0:
            raise ValueError("b_max must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Scenario:
    source: np.ndarray
    sensors: np.ndarray
    nlos_mask: np.ndarray

    @property
    def truth_distances(self) -> np.ndarray:
        return np.linalg.norm(self.sensors - self.source, axis=1)


@dataclass(frozen=True)
class RangeSet:
    ranges: np.ndarray
    truth_distances: np.ndarray
    clamped: np.ndarray

    @property
    def any_clamped(self) -> bool:
        return bool(self.clamped.any())


def _streams(seed: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def sample_scenario(params: ScenarioParams) -> Scenario:
    streams = _streams(params.seed)
    deploy = streams[_DEPLOY]
    source = deploy.uniform(0.0, params.region, params.d)
    sensors = deploy.uniform(0.0, params.region, (params.L, params.d))
    # Prefix of one permutation: NLOS sets are nested as l_nlos grows.
    chosen = streams[_SELECT].permutation(params.L)[: params.l_nlos]
    mask = np.zeros(params.L, dtype=bool)
    mask[chosen] = True
    return Scenario(source=source, sensors=sensors, nlos_mask=mask)


def synthesize_ranges(sc: Scenario, params: ScenarioParams) -> RangeSet:
    if sc.sensors.shape != (params.L, params.d):
        raise ValueError("scenario does not match params")
    streams = _streams(params.seed)
    truth = sc.truth_distances
    noise = np.sqrt(params.sigma_g2) * streams[_NOISE].standard_normal(params.L)
    bias = params.b_max * streams[_BIAS].random(params.L)
    r = truth + noise + np.where(sc.nlos_mask, bias, 0.0)
    clamped = r < 0
    return RangeSet(ranges=np.where(clamped, 0.0, r), truth_distances=truth, clamped=clamped)


def make_trial(params: ScenarioParams) -> tuple[Scenario, RangeSet]:
    sc = sample_scenario(params)
    return sc, synthesize_ranges(sc, params)
