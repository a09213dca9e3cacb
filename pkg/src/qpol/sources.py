"""Single-photon and photon-pair emitters.

Every emission is linearly polarized (``delta = 0``). A random polarization
draws ``2 beta`` uniformly on ``[0, 2 pi)`` from one uniform variate. Pair
photons in the coupled mode share one draw and therefore carry identical
Stokes vectors; the uncoupled mode draws twice per pair, photon one first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RandomStream
from .stokes import TWO_PI, FieldState, StokesS, field_to_stokes


@dataclass(frozen=True)
class FixedBeta:
    beta: float


@dataclass(frozen=True)
class UniformBeta:
    pass


@dataclass(frozen=True)
class SingleSourceSpec:
    mode: FixedBeta | UniformBeta = field(default_factory=UniformBeta)
    amplitude: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be positive and finite, got {self.amplitude!r}")


@dataclass(frozen=True)
class PairSourceSpec:
    coupled: bool = True
    amplitude: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be positive and finite, got {self.amplitude!r}")


def emit_photon(spec: SingleSourceSpec, rng: RandomStream) -> StokesS:
    if isinstance(spec.mode, FixedBeta):
        beta = spec.mode.beta
    else:
        beta = 0.5 * TWO_PI * rng.uniform()
    return field_to_stokes(FieldState(spec.amplitude, beta, 0.0, spec.delta))


def emit_pair(spec: PairSourceSpec, rng: RandomStream) -> tuple[StokesS, StokesS]:
    first = _linear(spec.amplitude, TWO_PI * rng.uniform())
    if spec.coupled:
        return first, first
    return first, _linear(spec.amplitude, TWO_PI * rng.uniform())


def _linear(amplitude: float, two_beta: float) -> StokesS:
    s0 = amplitude**2
    return StokesS(s0, s0 * math.cos(two_beta), s0 * math.sin(two_beta), 0.0)


def _linear_batch(amplitude: float, two_beta: np.ndarray) -> np.ndarray:
    s0 = amplitude**2
    out = np.empty((len(two_beta), 4))
    out[:, 0] = s0
    out[:, 1] = s0 * np.cos(two_beta)
    out[:, 2] = s0 * np.sin(two_beta)
    out[:, 3] = 0.0
    return out


def emit_photon_batch(spec: SingleSourceSpec, rng: RandomStream, n: int) -> np.ndarray:
    """``n`` emissions as an ``(n, 4)`` array of Stokes rows."""
    if isinstance(spec.mode, FixedBeta):
        row = field_to_stokes(FieldState(spec.amplitude, spec.mode.beta, 0.0, spec.delta))
        return np.tile(row.as_array(), (n, 1))
    two_beta = TWO_PI * rng.uniform(n)
    out = _linear_batch(spec.amplitude, two_beta)
    if spec.delta != 0.0:
        s2 = out[:, 2].copy()
        out[:, 2] = s2 * math.cos(spec.delta)
        out[:, 3] = s2 * math.sin(spec.delta)
    return out


def emit_pair_batch(spec: PairSourceSpec, rng: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
    if spec.coupled:
        states = _linear_batch(spec.amplitude, TWO_PI * rng.uniform(n))
        return states, states.copy()
    draws = rng.uniform((n, 2))
    return (
        _linear_batch(spec.amplitude, TWO_PI * draws[:, 0]),
        _linear_batch(spec.amplitude, TWO_PI * draws[:, 1]),
    )
