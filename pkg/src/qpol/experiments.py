"""In-sequence Malus counting and two-wing coincidence counting.

A run is split into work units, one per ``(angle_index, block_index)``, each
holding up to ``BLOCK_SIZE`` photons or pairs. A unit owns three random
substreams labelled ``(angle_index, block_index, wing)``: the source, the first
analyzer and the second analyzer. Within a unit every photon is processed
independently in emission order, so the accumulated counts equal those of a
one-photon-at-a-time loop and do not depend on how units are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import binomial_sigma
from .analyzer import (
    Analyzer,
    ArccosUniform,
    Criterion,
    SamplingDistribution,
    collapse_batch,
    transit_batch,
)
from .rng import RandomStream
from .sources import PairSourceSpec, SingleSourceSpec, emit_pair_batch, emit_photon_batch

BLOCK_SIZE = 8192
WING_SOURCE, WING_FIRST, WING_SECOND = 0, 1, 2


@dataclass(frozen=True)
class AngleGrid:
    """Relative analyzer angles in degrees."""

    angles: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise ValueError("angle grid must be non-empty")
        for a in angles:
            if not (math.isfinite(a) and 0.0 <= a < 360.0):
                raise ValueError(f"angle {a} outside [0, 360)")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("angles must be strictly increasing")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> AngleGrid:
        """Grid from ``start`` to ``stop`` inclusive."""
        if not step > 0:
            raise ValueError(f"step must be positive, got {step}")
        if stop < start:
            raise ValueError(f"stop {stop} is below start {start}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(tuple(round(start + k * step, 10) for k in range(n)))

    @classmethod
    def default(cls) -> AngleGrid:
        return cls.from_range(0.0, 90.0, 5.0)

    def __len__(self):
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)


def _check_count(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def _check_seed(value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not 0 <= value < 2**64:
        raise ValueError(f"master_seed must be an integer in [0, 2**64), got {value!r}")


@dataclass(frozen=True)
class MalusConfig:
    grid: AngleGrid = field(default_factory=AngleGrid.default)
    photons_per_angle: int = 40000
    master_seed: int = 0
    distribution: SamplingDistribution = field(default_factory=ArccosUniform)
    criterion: Criterion = Criterion.DETERMINISTIC
    source: SingleSourceSpec = field(default_factory=SingleSourceSpec)

    def __post_init__(self):
        _check_count("photons_per_angle", self.photons_per_angle)
        _check_seed(self.master_seed)


@dataclass(frozen=True)
class CoincidenceConfig:
    grid: AngleGrid = field(default_factory=AngleGrid.default)
    pairs_per_angle: int = 10000
    master_seed: int = 0
    distribution: SamplingDistribution = field(default_factory=ArccosUniform)
    criterion: Criterion = Criterion.DETERMINISTIC
    coupled: bool = True

    def __post_init__(self):
        _check_count("pairs_per_angle", self.pairs_per_angle)
        _check_seed(self.master_seed)


@dataclass(frozen=True)
class CountTable:
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0

    @property
    def total(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def __add__(self, other: CountTable) -> CountTable:
        return CountTable(
            self.n_pp + other.n_pp,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
            self.n_mm + other.n_mm,
        )

    @classmethod
    def from_channels(cls, first_plus: np.ndarray, second_plus: np.ndarray) -> CountTable:
        pp = int(np.count_nonzero(first_plus & second_plus))
        pm = int(np.count_nonzero(first_plus & ~second_plus))
        mp = int(np.count_nonzero(~first_plus & second_plus))
        mm = int(len(first_plus)) - pp - pm - mp
        return cls(pp, pm, mp, mm)


@dataclass(frozen=True)
class ResultRow:
    theta: float
    counts: CountTable
    gamma: float
    normalized_pp: float
    malus_plus_ref: float
    malus_minus_ref: float
    gamma_ref: float
    norm_pp_ref: float
    gamma_sigma: float
    n_pp_sigma: float


def gamma(counts: CountTable) -> float:
    n = counts.total
    if n <= 0:
        raise ValueError("cannot form a correlation from zero counts")
    return (counts.n_pp + counts.n_mm - counts.n_pm - counts.n_mp) / n


def normalized_pp(counts: CountTable) -> float:
    n = counts.total
    if n <= 0:
        raise ValueError("cannot normalize zero counts")
    return 2.0 * counts.n_pp / n


def reference_curves(theta_deg: float, n_half: float) -> tuple[float, float, float]:
    """Scaled Malus curves ``n_half cos^2``, ``n_half sin^2`` and the pair correlation ``cos 2 theta``."""
    t = math.radians(theta_deg)
    return n_half * math.cos(t) ** 2, n_half * math.sin(t) ** 2, math.cos(2.0 * t)


def _analyzer_pair(theta_deg: float, dist, criterion) -> tuple[Analyzer, Analyzer, float]:
    first = Analyzer(theta=0.0, distribution=dist, criterion=criterion)
    second = Analyzer(theta=math.radians(theta_deg), distribution=dist, criterion=criterion)
    return first, second, second.offset_from(first)


def _streams(seed: int, angle_index: int, block_index: int):
    return tuple(RandomStream(seed, (angle_index, block_index, w)) for w in (WING_SOURCE, WING_FIRST, WING_SECOND))


def _malus_unit(config: MalusConfig, angle_index: int, theta: float, block_index: int, n: int) -> CountTable:
    src, rng1, rng2 = _streams(config.master_seed, angle_index, block_index)
    first, second, q = _analyzer_pair(theta, config.distribution, config.criterion)
    states = emit_photon_batch(config.source, src, n)
    plus1, _ = transit_batch(first, states, 0.0, rng1)
    plus2, _ = transit_batch(second, collapse_batch(states[:, 0], plus1), q, rng2)
    return CountTable.from_channels(plus1, plus2)


def _coincidence_unit(config: CoincidenceConfig, angle_index: int, theta: float, block_index: int, n: int) -> CountTable:
    src, rng1, rng2 = _streams(config.master_seed, angle_index, block_index)
    first, second, q = _analyzer_pair(theta, config.distribution, config.criterion)
    wing1, wing2 = emit_pair_batch(PairSourceSpec(coupled=config.coupled), src, n)
    plus1, _ = transit_batch(first, wing1, 0.0, rng1)
    plus2, _ = transit_batch(second, wing2, q, rng2)
    return CountTable.from_channels(plus1, plus2)


def _accumulate(unit, config, thetas, n_per_angle: int, threads: int = 1) -> list[CountTable]:
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    jobs = []
    for i, theta in enumerate(thetas):
        for j, start in enumerate(range(0, n_per_angle, BLOCK_SIZE)):
            jobs.append((i, theta, j, min(BLOCK_SIZE, n_per_angle - start)))

    def work(job):
        return job[0], unit(config, *job)

    if threads == 1:
        results = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    tables = [CountTable() for _ in thetas]
    for i, table in results:
        tables[i] = tables[i] + table
    return tables


def _row(theta: float, counts: CountTable) -> ResultRow:
    n = counts.total
    g = gamma(counts)
    plus_ref, minus_ref, gamma_ref = reference_curves(theta, n / 2.0)
    p_pp = math.cos(math.radians(theta)) ** 2 / 2.0
    return ResultRow(
        theta=theta,
        counts=counts,
        gamma=g,
        normalized_pp=normalized_pp(counts),
        malus_plus_ref=plus_ref,
        malus_minus_ref=minus_ref,
        gamma_ref=gamma_ref,
        norm_pp_ref=math.cos(math.radians(theta)) ** 2,
        gamma_sigma=math.sqrt(max(1.0 - g * g, 0.0) / n),
        n_pp_sigma=binomial_sigma(n, min(max(p_pp, 0.0), 1.0)),
    )


def run_malus(config: MalusConfig, threads: int = 1) -> list[ResultRow]:
    """Two analyzers in sequence, the second rotated by each grid angle.

    Every photon leaving the first analyzer, from either channel, enters the
    second, so all four (first, second) channel combinations are counted.
    """
    tables = _accumulate(_malus_unit, config, config.grid.angles, config.photons_per_angle, threads)
    return [_row(theta, t) for theta, t in zip(config.grid.angles, tables)]


def run_coincidence(config: CoincidenceConfig, threads: int = 1) -> list[ResultRow]:
    tables = _accumulate(_coincidence_unit, config, config.grid.angles, config.pairs_per_angle, threads)
    return [_row(theta, t) for theta, t in zip(config.grid.angles, tables)]


@dataclass(frozen=True)
class ChshSetting:
    a: float
    b: float
    theta: float
    counts: CountTable
    correlation: float
    sigma: float


@dataclass(frozen=True)
class ChshResult:
    settings: tuple[ChshSetting, ...]
    s_value: float
    sigma: float

    @property
    def exceeds_bell_limit(self) -> bool:
        return self.s_value > 2.0

    @property
    def significance(self) -> float:
        """Distance of S above 2 in units of its standard error."""
        return (self.s_value - 2.0) / self.sigma if self.sigma > 0 else math.inf


def chsh_run(config: CoincidenceConfig, a1: float, a2: float, b1: float, b2: float, threads: int = 1) -> ChshResult:
    """Estimate the four correlations and combine them into the CHSH value.

    The settings are run in the order (a1,b1), (a1,b2), (a2,b1), (a2,b2), each
    with its own substreams and ``config.pairs_per_angle`` pairs. The config
    grid is ignored.
    """
    pairs = [(a1, b1), (a1, b2), (a2, b1), (a2, b2)]
    thetas = [abs(a - b) for a, b in pairs]
    tables = _accumulate(_coincidence_unit, config, thetas, config.pairs_per_angle, threads)
    settings = []
    for (a, b), theta, t in zip(pairs, thetas, tables):
        e = gamma(t)
        settings.append(ChshSetting(a, b, theta, t, e, math.sqrt(max(1.0 - e * e, 0.0) / t.total)))
    e11, e12, e21, e22 = (s.correlation for s in settings)
    s_value = abs(e11 - e12) + abs(e21 + e22)
    sigma = math.sqrt(sum(s.sigma**2 for s in settings))
    return ChshResult(tuple(settings), s_value, sigma)


def chsh_s(config: CoincidenceConfig, a1: float, a2: float, b1: float, b2: float, threads: int = 1) -> float:
    return chsh_run(config, a1, a2, b1, b2, threads).s_value
