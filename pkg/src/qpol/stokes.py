"""Stokes representation of the two-component Hermitian eigenvalue problem.

The field is ``Psi = (A cos(beta) e^{i alpha_x}, A sin(beta) e^{i(alpha_x + delta)})``
and the analyzer matrix is ``[[a, h e^{-i phi}], [h e^{i phi}, d]]``. Both map to
points on Poincare spheres: the field to ``S`` with radius ``A**2`` and the
matrix to ``P`` with radius equal to the eigenvalue gap.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class Kind(enum.Enum):
    """Particle kind; sets how a frame rotation maps onto the Poincare sphere."""

    SPINOR = "spinor"
    VECTOR = "vector"

    def poincare_angle(self, theta: float) -> float:
        return theta if self is Kind.SPINOR else 2.0 * theta


@dataclass(frozen=True)
class FieldState:
    amplitude: float
    beta: float
    alpha_x: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be positive and finite, got {self.amplitude!r}")
        object.__setattr__(self, "beta", math.fmod(self.beta, TWO_PI) % TWO_PI)
        object.__setattr__(self, "delta", math.fmod(self.delta, TWO_PI) % TWO_PI)

    def components(self) -> np.ndarray:
        """Complex field components ``(Psi_x, Psi_y)``."""
        psi_x = self.amplitude * math.cos(self.beta) * np.exp(1j * self.alpha_x)
        psi_y = self.amplitude * math.sin(self.beta) * np.exp(1j * (self.alpha_x + self.delta))
        return np.array([psi_x, psi_y])

    @classmethod
    def from_components(cls, psi) -> FieldState:
        psi_x, psi_y = complex(psi[0]), complex(psi[1])
        amplitude = math.hypot(abs(psi_x), abs(psi_y))
        beta = math.atan2(abs(psi_y), abs(psi_x))
        alpha_x = math.atan2(psi_x.imag, psi_x.real) if psi_x != 0 else 0.0
        alpha_y = math.atan2(psi_y.imag, psi_y.real) if psi_y != 0 else alpha_x
        return cls(amplitude, beta, alpha_x, alpha_y - alpha_x)


@dataclass(frozen=True)
class StokesS:
    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if self.s0 < 0:
            raise ValueError(f"s0 must be non-negative, got {self.s0!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3])

    def spatial(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])


@dataclass(frozen=True)
class HermitianAnalyzerMatrix:
    a: float
    d: float
    h: float
    phi: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.a, self.d, self.h, self.phi)):
            raise ValueError("matrix elements must be finite")
        if self.h < 0:
            raise ValueError(f"off-diagonal magnitude h must be >= 0, got {self.h!r}")

    def as_array(self) -> np.ndarray:
        off = self.h * np.exp(-1j * self.phi)
        return np.array([[self.a, off], [np.conj(off), self.d]])


@dataclass(frozen=True)
class StokesP:
    p0: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if self.p0 < 0:
            raise ValueError(f"p0 must be non-negative, got {self.p0!r}")

    def spatial(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: float
    lambda_minus: float


def field_to_stokes(f: FieldState) -> StokesS:
    s0 = f.amplitude**2
    two_beta = 2.0 * f.beta
    return StokesS(
        s0,
        s0 * math.cos(two_beta),
        s0 * math.sin(two_beta) * math.cos(f.delta),
        s0 * math.sin(two_beta) * math.sin(f.delta),
    )


def matrix_to_stokes(m: HermitianAnalyzerMatrix) -> StokesP:
    """Matrix Stokes vector; the degenerate matrix ``a == d, h == 0`` maps to zero.

    ``2 alpha`` is taken as ``atan2(2h, a - d)`` so that the sign of ``p1``
    follows ``a - d``.
    """
    diff = m.a - m.d
    p0 = math.hypot(diff, 2.0 * m.h)
    if p0 == 0.0:
        return StokesP(0.0, 0.0, 0.0, 0.0)
    two_alpha = math.atan2(2.0 * m.h, diff)
    return StokesP(
        p0,
        p0 * math.cos(two_alpha),
        p0 * math.sin(two_alpha) * math.cos(m.phi),
        p0 * math.sin(two_alpha) * math.sin(m.phi),
    )


def eigenvalues(m: HermitianAnalyzerMatrix) -> EigenPair:
    gap = math.hypot(m.a - m.d, 2.0 * m.h)
    mean = 0.5 * (m.a + m.d)
    return EigenPair(mean + 0.5 * gap, mean - 0.5 * gap)


def eigenstate_residuals(s: StokesS, p: StokesP, branch: int) -> tuple[float, float, float]:
    """Residuals of the three eigenstate relations between ``s`` and ``p``.

    ``branch`` is +1 for the ``lambda_plus`` eigenchannel and -1 for
    ``lambda_minus``. All three residuals vanish for an eigenstate.
    """
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch!r}")
    if p.p0 <= 0 or s.s0 <= 0:
        raise ValueError("degenerate input: s0 and p0 must both be positive")
    r1 = s.s1 * p.p1 + s.s2 * p.p2 + s.s3 * p.p3 - branch * p.p0 * s.s0
    r2 = s.s3 * p.p2 - s.s2 * p.p3
    r3 = s.s1 * p.p1 - branch * p.p1**2 * s.s0 / p.p0
    return r1, r2, r3


def rotate_stokes(s: StokesS, theta: float, kind: Kind = Kind.VECTOR) -> StokesS:
    """Rotate ``(s1, s2)`` by the Poincare angle of a frame rotation ``theta``."""
    q = kind.poincare_angle(theta)
    c, sn = math.cos(q), math.sin(q)
    return StokesS(s.s0, c * s.s1 - sn * s.s2, sn * s.s1 + c * s.s2, s.s3)
