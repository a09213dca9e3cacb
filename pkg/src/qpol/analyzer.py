"""Quasi-deterministic analyzer.

For each incident photon the analyzer draws the orientation ``2 alpha`` of its
matrix Stokes vector, forms the transition quantity ``T(0) = S1(0) P1(0)`` and
sends the photon to the ``+`` channel when ``T(0) >= 0``. The photon leaves
collapsed onto the eigenstate of the selected channel.

Each operation comes in a scalar form (one photon, readable) and a ``*_batch``
form used by the experiment drivers. Both consume a :class:`RandomStream` in
the same order, so the batch path reproduces a photon-by-photon loop exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RandomStream
from .stokes import Kind, StokesP, StokesS

HALF_PI = 0.5 * math.pi

# Widths of a zero-mean normal that match the arccos-uniform arg law
# (density cos(a)/2 on [-pi/2, pi/2]) in mean absolute deviation and in variance.
MAD_MATCHED_SIGMA = (HALF_PI - 1.0) * math.sqrt(HALF_PI)
VARIANCE_MATCHED_SIGMA = math.sqrt(math.pi**2 / 4.0 - 2.0)
DEFAULT_GAUSSIAN_SIGMA = MAD_MATCHED_SIGMA


@dataclass(frozen=True)
class ArccosUniform:
    """``arg = arccos(u) - pi/2`` with ``u`` uniform on ``[-1, 1]``."""


@dataclass(frozen=True)
class Gaussian:
    """Zero-mean normal arg, clamped to ``[-pi/2, pi/2]``."""

    sigma: float = DEFAULT_GAUSSIAN_SIGMA

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"Gaussian sigma must be positive and finite, got {self.sigma!r}")


SamplingDistribution = ArccosUniform | Gaussian


class Criterion(enum.Enum):
    DETERMINISTIC = "deterministic"
    # Ablation control: Plus with the Malus probability, independent of the drawn P1.
    MALUS_PROBABILISTIC = "malus_probabilistic"


class Channel(enum.IntEnum):
    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class Analyzer:
    theta: float = 0.0
    p0: float = 1.0
    phi_sign: int = 1
    distribution: SamplingDistribution = field(default_factory=ArccosUniform)
    criterion: Criterion = Criterion.DETERMINISTIC
    kind: Kind = Kind.VECTOR

    def __post_init__(self):
        if not (math.isfinite(self.p0) and self.p0 > 0):
            raise ValueError(f"p0 must be positive and finite, got {self.p0!r}")
        if self.phi_sign not in (1, -1):
            raise ValueError(f"phi_sign must be +1 or -1, got {self.phi_sign!r}")

    def offset_from(self, reference: Analyzer) -> float:
        """Poincare offset ``q`` of this analyzer seen from ``reference``'s frame."""
        return self.kind.poincare_angle(self.theta - reference.theta)

    def stokes_p(self) -> StokesP:
        """Macroscopic matrix Stokes vector in the analyzer's own frame."""
        return StokesP(self.p0, self.p0, 0.0, 0.0)

    def drawn_stokes_p(self, arg: float, frame_offset_q: float = 0.0) -> StokesP:
        two_alpha = arg + frame_offset_q
        return StokesP(
            self.p0,
            self.p0 * math.cos(two_alpha),
            self.p0 * math.sin(two_alpha) * self.phi_sign,
            0.0,
        )


@dataclass(frozen=True)
class ChannelOutcome:
    channel: Channel
    post_state: StokesS
    t_value: float
    drawn_arg: float


def arg_from_u(u):
    return np.arccos(u) - HALF_PI


def sample_arg(dist: SamplingDistribution, rng: RandomStream) -> float:
    if isinstance(dist, ArccosUniform):
        return float(arg_from_u(2.0 * rng.uniform() - 1.0))
    return float(np.clip(rng.normal(dist.sigma), -HALF_PI, HALF_PI))


def sample_arg_batch(dist: SamplingDistribution, rng: RandomStream, n: int) -> np.ndarray:
    if isinstance(dist, ArccosUniform):
        return arg_from_u(2.0 * rng.uniform(n) - 1.0)
    return np.clip(rng.normal(dist.sigma, n), -HALF_PI, HALF_PI)


def p1_from_arg(p0, arg, frame_offset_q):
    """``P1 = p0 cos(2 alpha')`` with ``2 alpha' = arg + q``; the sign before q is fixed to +."""
    return p0 * np.cos(arg + frame_offset_q)


def draw_p1(analyzer: Analyzer, rng: RandomStream, frame_offset_q: float = 0.0) -> tuple[float, float]:
    arg = sample_arg(analyzer.distribution, rng)
    return float(p1_from_arg(analyzer.p0, arg, frame_offset_q)), arg


def plus_probability(s0, s1, s2, frame_offset_q):
    """Projection probability onto the analyzer axis at Poincare angle ``q``.

    For a vector field this is ``cos^2`` of the physical angle between the
    photon's polarization axis and the analyzer axis.
    """
    proj = (s1 * np.cos(frame_offset_q) + s2 * np.sin(frame_offset_q)) / s0
    return np.clip(0.5 * (1.0 + proj), 0.0, 1.0)


def collapsed(s0: float, channel: Channel) -> StokesS:
    return StokesS(s0, channel * s0, 0.0, 0.0)


def transit(
    analyzer: Analyzer, s_in: StokesS, frame_offset_q: float, rng: RandomStream
) -> ChannelOutcome:
    """Send one photon through ``analyzer``.

    ``frame_offset_q`` is the analyzer's Poincare offset in the frame where
    ``s_in`` is expressed (0 when the analyzer defines that frame). The
    returned ``post_state`` is in the analyzer's own frame.

    Draw order per photon: one arg variate (deterministic criterion) or one
    uniform decision variate (probabilistic criterion).
    """
    if s_in.s0 <= 0:
        raise ValueError("degenerate input state: s0 must be positive")
    if analyzer.criterion is Criterion.DETERMINISTIC:
        p1, arg = draw_p1(analyzer, rng, frame_offset_q)
        t_value = s_in.s1 * p1
    else:
        # 1 - U lies in (0, 1], so p = 0 never passes and p = 1 always does
        threshold = 1.0 - rng.uniform()
        p = float(plus_probability(s_in.s0, s_in.s1, s_in.s2, frame_offset_q))
        t_value, arg = p - threshold, math.nan
    channel = Channel.PLUS if t_value >= 0 else Channel.MINUS
    return ChannelOutcome(channel, collapsed(s_in.s0, channel), t_value, arg)


def transit_batch(
    analyzer: Analyzer, states: np.ndarray, frame_offset_q: float, rng: RandomStream
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`transit` over an ``(n, 4)`` array of Stokes rows.

    Returns ``(plus, t_values)`` where ``plus`` is a boolean array. Collapsed
    states are ``(s0, +-s0, 0, 0)``; see :func:`collapse_batch`.
    """
    states = np.asarray(states, dtype=float)
    n = states.shape[0]
    if np.any(states[:, 0] <= 0):
        raise ValueError("degenerate input state: s0 must be positive")
    if analyzer.criterion is Criterion.DETERMINISTIC:
        args = sample_arg_batch(analyzer.distribution, rng, n)
        t_values = states[:, 1] * p1_from_arg(analyzer.p0, args, frame_offset_q)
    else:
        threshold = 1.0 - rng.uniform(n)
        p = plus_probability(states[:, 0], states[:, 1], states[:, 2], frame_offset_q)
        t_values = p - threshold
    return t_values >= 0, t_values


def collapse_batch(s0: np.ndarray, plus: np.ndarray) -> np.ndarray:
    out = np.zeros((len(s0), 4))
    out[:, 0] = s0
    out[:, 1] = np.where(plus, s0, -s0)
    return out
