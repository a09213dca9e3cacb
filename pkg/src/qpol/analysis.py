"""Statistical checks on accumulated counts and closed-form channel probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .analyzer import HALF_PI, ArccosUniform, Criterion, Gaussian, SamplingDistribution

REDUCED_CHI2_BAND = (0.3, 2.5)
MAX_RESIDUAL_SIGMAS = 4.0


@dataclass(frozen=True)
class FitReport:
    chi_square: float
    degrees_of_freedom: int
    reduced_chi_square: float
    max_abs_residual_sigmas: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "chi_square": self.chi_square,
            "degrees_of_freedom": self.degrees_of_freedom,
            "reduced_chi_square": self.reduced_chi_square,
            "max_abs_residual_sigmas": self.max_abs_residual_sigmas,
            "pass": self.passed,
        }


def _positive_segments(q: float) -> list[tuple[float, float]]:
    """Sub-intervals of [-pi/2, pi/2] on which cos(a + q) > 0."""
    # zeros of cos(a + q) sit at a = pi/2 - q + k pi
    k0 = math.floor(q / math.pi)
    cuts = [-HALF_PI, HALF_PI]
    for k in range(k0 - 2, k0 + 3):
        z = HALF_PI - q + k * math.pi
        if -HALF_PI < z < HALF_PI:
            cuts.append(z)
    cuts.sort()
    return [(lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo and math.cos(0.5 * (lo + hi) + q) > 0]


def closed_form_plus_probability(theta_deg: float, dist: SamplingDistribution = ArccosUniform()) -> float:
    """Probability that the second factor ``cos(arg + 2 theta)`` of ``T'(0)`` is non-negative.

    Computed by adaptive quadrature of the arg density over the set where the
    factor is positive. For :class:`ArccosUniform` this equals ``cos^2 theta``.
    The clamped Gaussian has point masses at ``+-pi/2``. Those sit exactly on a
    sign boundary when ``theta`` is a multiple of 45 degrees, so they are
    classified with the same floating-point test the analyzer applies.
    """
    q = 2.0 * math.radians(theta_deg)
    if isinstance(dist, ArccosUniform):
        def density(a):
            return 0.5 * math.cos(a)
        atoms = []
    elif isinstance(dist, Gaussian):
        def density(a):
            return stats.norm.pdf(a, scale=dist.sigma)
        tail = float(stats.norm.sf(HALF_PI, scale=dist.sigma))
        atoms = [(-HALF_PI, tail), (HALF_PI, tail)]
    else:
        raise TypeError(f"unknown sampling distribution {dist!r}")
    total = 0.0
    for lo, hi in _positive_segments(q):
        value, _ = integrate.quad(density, lo, hi, epsabs=1e-13, epsrel=1e-12)
        total += value
    for a, mass in atoms:
        if np.cos(np.float64(a) + q) >= 0:
            total += mass
    return min(max(total, 0.0), 1.0)


def expected_gamma(theta_deg: float, dist: SamplingDistribution, criterion: Criterion, coupled: bool) -> float:
    """Model expectation of the pair correlation at relative angle ``theta_deg``."""
    if not coupled:
        return 0.0
    if criterion is Criterion.MALUS_PROBABILISTIC:
        return 0.5 * math.cos(2.0 * math.radians(theta_deg))
    return 2.0 * closed_form_plus_probability(theta_deg, dist) - 1.0


def expected_cell_probabilities(
    theta_deg: float, dist: SamplingDistribution, criterion: Criterion, coupled: bool | None = None
) -> tuple[float, float, float, float]:
    """Expected ``(pp, pm, mp, mm)`` probabilities per photon (``coupled=None``) or pair.

    In the Malus protocol the first analyzer splits photons evenly and the
    second passes a collapsed ``+`` photon with the closed-form plus
    probability. For pairs the four cells follow from the correlation and the
    even marginals.
    """
    if coupled is None:
        if criterion is Criterion.MALUS_PROBABILISTIC:
            p = math.cos(math.radians(theta_deg)) ** 2
        else:
            p = closed_form_plus_probability(theta_deg, dist)
        return 0.5 * p, 0.5 * (1.0 - p), 0.5 * (1.0 - p), 0.5 * p
    e = expected_gamma(theta_deg, dist, criterion, coupled)
    return 0.25 * (1 + e), 0.25 * (1 - e), 0.25 * (1 - e), 0.25 * (1 + e)


def binomial_sigma(n: int, p: float) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return math.sqrt(n * p * (1.0 - p))


def chi_square_fit(observed, expected, variance_floor: float = 1.0, n_trials=None) -> FitReport:
    """Chi-square of counts against parameter-free expectations.

    The variance per point is binomial, ``exp * (1 - exp / n)``, where ``n`` is
    the number of trials behind that point (``n_trials``, scalar or per point).
    Without ``n_trials`` the variance is Poisson, ``exp``. Points whose variance
    falls below ``variance_floor`` use the floor.

    The fit passes when the reduced chi-square lies in ``REDUCED_CHI2_BAND``
    and no point deviates by more than ``MAX_RESIDUAL_SIGMAS``. An exact match
    (all residuals zero) also passes.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape or obs.ndim != 1:
        raise ValueError(f"observed and expected must be 1-d of equal length, got {obs.shape} and {exp.shape}")
    if len(obs) < 2:
        raise ValueError("need at least two points")
    if np.any(exp < 0):
        raise ValueError("expected values must be non-negative")
    if variance_floor <= 0 and not np.any(exp > 0):
        raise ValueError("all expected values are zero and variance_floor is zero")
    if n_trials is None:
        var = exp.copy()
    else:
        n = np.broadcast_to(np.asarray(n_trials, dtype=float), exp.shape)
        var = exp * (1.0 - exp / n)
    var = np.maximum(var, variance_floor)
    if np.any(var <= 0):
        raise ValueError("zero variance at a point with no variance floor")
    resid = obs - exp
    chi2 = float(np.sum(resid**2 / var))
    dof = len(obs) - 1
    reduced = chi2 / dof
    max_sig = float(np.max(np.abs(resid) / np.sqrt(var)))
    lo, hi = REDUCED_CHI2_BAND
    in_band = lo <= reduced <= hi or chi2 == 0.0
    passed = bool(in_band and max_sig <= MAX_RESIDUAL_SIGMAS)
    return FitReport(chi2, dof, reduced, max_sig, passed)


def residual_sigmas(observed, expected, n_trials) -> np.ndarray:
    """Per-point residuals in binomial sigmas; a zero-variance point scores 0 if exact, inf otherwise."""
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    n = np.broadcast_to(np.asarray(n_trials, dtype=float), exp.shape)
    sigma = np.sqrt(np.clip(exp * (1.0 - exp / n), 0.0, None))
    resid = np.abs(obs - exp)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(sigma > 0, resid / np.where(sigma > 0, sigma, 1.0), np.where(resid == 0, 0.0, np.inf))
    return out
