"""Self-checks run by ``qpol verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import stokes
from .analysis import closed_form_plus_probability
from .analyzer import ArccosUniform, sample_arg_batch
from .experiments import AngleGrid, CoincidenceConfig, MalusConfig, run_coincidence, run_malus
from .rng import RandomStream

RESIDUAL_TOL = 1e-10
GAP_RTOL = 1e-12
HISTOGRAM_MAX_REDUCED_CHI2 = 1.5
ORACLE_TOL = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def check_eigen_relations(seed: int, n_matrices: int = 10_000) -> list[Check]:
    """Eigenvectors from LAPACK must satisfy the Stokes eigenstate relations."""
    rng = np.random.default_rng([seed, 1])
    worst_resid = 0.0
    worst_gap = 0.0
    tested = 0
    for a, d, h, phi in zip(
        rng.uniform(-10, 10, n_matrices),
        rng.uniform(-10, 10, n_matrices),
        rng.uniform(0, 10, n_matrices),
        rng.uniform(0, 2 * math.pi, n_matrices),
    ):
        m = stokes.HermitianAnalyzerMatrix(a, d, h, phi)
        p = stokes.matrix_to_stokes(m)
        pair = stokes.eigenvalues(m)
        gap = pair.lambda_plus - pair.lambda_minus
        worst_gap = max(worst_gap, abs(gap - p.p0) / max(p.p0, 1e-300))
        if p.p0 <= 1e-9:
            continue
        _, vecs = np.linalg.eigh(m.as_array())
        p_unit = stokes.StokesP(1.0, p.p1 / p.p0, p.p2 / p.p0, p.p3 / p.p0)
        for column, branch in ((1, 1), (0, -1)):
            s = stokes.field_to_stokes(stokes.FieldState.from_components(vecs[:, column]))
            s_unit = stokes.StokesS(1.0, s.s1 / s.s0, s.s2 / s.s0, s.s3 / s.s0)
            r = stokes.eigenstate_residuals(s_unit, p_unit, branch)
            worst_resid = max(worst_resid, max(abs(x) for x in r))
        tested += 1
    return [
        Check("eigen_relation_residuals", bool(worst_resid <= RESIDUAL_TOL),
              f"max |r| = {worst_resid:.3g} over {tested} matrices (tol {RESIDUAL_TOL:g})"),
        Check("spectral_gap_identity", bool(worst_gap <= GAP_RTOL),
              f"max relative gap error = {worst_gap:.3g} (tol {GAP_RTOL:g})"),
    ]


def arg_histogram_chi2(seed: int, n_draws: int = 1_000_000, n_bins: int = 50) -> float:
    """Reduced chi-square of sampled args against the density cos(a)/2."""
    args = sample_arg_batch(ArccosUniform(), RandomStream(seed, (2**32, 0)), n_draws)
    edges = np.linspace(-math.pi / 2, math.pi / 2, n_bins + 1)
    observed, _ = np.histogram(args, bins=edges)
    expected = n_draws * 0.5 * np.diff(np.sin(edges))
    return float(np.sum((observed - expected) ** 2 / expected) / (n_bins - 1))


def check_sampling_histogram(seed: int) -> Check:
    red = arg_histogram_chi2(seed)
    return Check("arg_sampling_histogram", bool(red < HISTOGRAM_MAX_REDUCED_CHI2),
                 f"chi2/dof = {red:.3f} over 50 bins (limit {HISTOGRAM_MAX_REDUCED_CHI2})")


def check_oracle_identity() -> Check:
    worst = max(
        abs(closed_form_plus_probability(t) - math.cos(math.radians(t)) ** 2) for t in range(0, 360)
    )
    return Check("quadrature_oracle_identity", bool(worst <= ORACLE_TOL),
                 f"max |quad - cos^2| = {worst:.3g} on a 1 degree grid (tol {ORACLE_TOL:g})")


def check_reproducibility(seed: int, threads: int = 8) -> Check:
    grid = AngleGrid.from_range(0, 90, 15)
    malus = MalusConfig(grid=grid, photons_per_angle=20_000, master_seed=seed)
    pairs = CoincidenceConfig(grid=grid, pairs_per_angle=20_000, master_seed=seed)
    same = (
        run_malus(malus, threads=1) == run_malus(malus, threads=threads)
        and run_coincidence(pairs, threads=1) == run_coincidence(pairs, threads=threads)
    )
    return Check("thread_count_reproducibility", same, f"threads=1 vs threads={threads}")


def check_endpoints(seed: int) -> Check:
    grid = AngleGrid((0.0, 90.0))
    m0, _ = run_malus(MalusConfig(grid=grid, photons_per_angle=10_000, master_seed=seed))
    c0, c90 = run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=10_000, master_seed=seed))
    ok = (
        m0.counts.n_pm == 0 and m0.counts.n_mp == 0
        and c0.gamma == 1.0 and c90.gamma == -1.0
    )
    return Check("endpoint_identities", ok,
                 f"malus(0) discordant={m0.counts.n_pm + m0.counts.n_mp}, gamma(0)={c0.gamma}, gamma(90)={c90.gamma}")


def run_checks(seed: int = 0, threads: int = 8) -> list[Check]:
    return [
        *check_eigen_relations(seed),
        check_sampling_histogram(seed),
        check_oracle_identity(),
        check_reproducibility(seed, threads),
        check_endpoints(seed),
    ]
