import math

import pytest

from qpol.analyzer import ArccosUniform, Criterion, Gaussian
from qpol.experiments import (
    BLOCK_SIZE,
    AngleGrid,
    CoincidenceConfig,
    CountTable,
    MalusConfig,
    chsh_run,
    chsh_s,
    gamma,
    normalized_pp,
    reference_curves,
    run_coincidence,
    run_malus,
)

from .oracles import photonwise_malus, photonwise_pairs

CHSH_ANGLES = (0.0, 45.0, 22.5, 67.5)


def test_angle_grid_range_is_inclusive():
    grid = AngleGrid.from_range(0, 90, 5)
    assert len(grid) == 19 and grid.angles[0] == 0 and grid.angles[-1] == 90
    assert AngleGrid.default() == grid
    assert AngleGrid.from_range(0, 1, 0.1).angles[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("angles", [(), (10.0, 5.0), (5.0, 5.0), (-1.0,), (360.0,), (math.nan,)])
def test_angle_grid_rejects(angles):
    with pytest.raises(ValueError):
        AngleGrid(angles)


@pytest.mark.parametrize("kwargs", [{"photons_per_angle": 0}, {"photons_per_angle": 2.5},
                                    {"photons_per_angle": True}, {"master_seed": -1}, {"master_seed": 2**64}])
def test_malus_config_rejects(kwargs):
    with pytest.raises(ValueError):
        MalusConfig(**kwargs)


def test_coincidence_config_rejects():
    with pytest.raises(ValueError):
        CoincidenceConfig(pairs_per_angle=0)


@pytest.mark.parametrize("counts, expected", [((10, 0, 0, 10), 1.0), ((25, 25, 25, 25), 0.0),
                                              ((50, 0, 0, 50), 1.0), ((0, 50, 50, 0), -1.0)])
def test_gamma_examples(counts, expected):
    assert gamma(CountTable(*counts)) == expected


@pytest.mark.parametrize("counts, expected", [((50, 0, 0, 50), 1.0), ((25, 25, 25, 25), 0.5)])
def test_normalized_pp_examples(counts, expected):
    assert normalized_pp(CountTable(*counts)) == expected


def test_empty_counts_rejected():
    with pytest.raises(ValueError):
        gamma(CountTable())
    with pytest.raises(ValueError):
        normalized_pp(CountTable())


@pytest.mark.parametrize("theta, expected", [(0, (100, 0, 1)), (90, (0, 100, -1)), (60, (25, 75, -0.5))])
def test_reference_curves(theta, expected):
    assert reference_curves(theta, 100) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n", [1, 100, 40000])
def test_malus_endpoints_exact(n):
    zero, ninety = run_malus(MalusConfig(grid=AngleGrid((0.0, 90.0)), photons_per_angle=n, master_seed=n))
    assert zero.counts.n_pm == 0 and zero.counts.n_mp == 0
    assert ninety.counts.n_pp == 0 and ninety.counts.n_mm == 0


def test_malus_at_45_degrees():
    (row,) = run_malus(MalusConfig(grid=AngleGrid((45.0,)), photons_per_angle=40000, master_seed=45))
    assert abs(row.counts.n_pp - 10000) <= 4 * math.sqrt(40000 / 8)


def test_count_conservation_and_bounds():
    grid = AngleGrid.from_range(0, 180, 30)
    for rows, n in (
        (run_malus(MalusConfig(grid=grid, photons_per_angle=12345, master_seed=1)), 12345),
        (run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=9999, master_seed=1, coupled=False)), 9999),
    ):
        for r in rows:
            assert r.counts.total == n
            # 2 N++ / N fluctuates above 1 near theta = 0 since N++ ~ N/2 there
            assert -1 <= r.gamma <= 1 and 0 <= r.normalized_pp <= 2


def test_coincidence_endpoints_exact():
    zero, ninety = run_coincidence(CoincidenceConfig(grid=AngleGrid((0.0, 90.0)), pairs_per_angle=30000))
    assert zero.gamma == 1.0 and zero.counts.n_pm == zero.counts.n_mp == 0
    assert ninety.gamma == -1.0


def test_coincidence_at_22_5_degrees():
    (row,) = run_coincidence(CoincidenceConfig(grid=AngleGrid((22.5,)), pairs_per_angle=100_000, master_seed=7))
    assert row.gamma == pytest.approx(math.cos(math.radians(45)), abs=0.01)


def test_normalized_pp_at_45_degrees():
    (row,) = run_coincidence(CoincidenceConfig(grid=AngleGrid((45.0,)), pairs_per_angle=10_000, master_seed=3))
    assert row.normalized_pp == pytest.approx(0.5, abs=0.02)


def test_closed_form_agreement_on_5_degree_grid():
    rows = run_coincidence(CoincidenceConfig(pairs_per_angle=10_000, master_seed=11))
    for r in rows:
        c = math.cos(2 * math.radians(r.theta))
        assert abs(r.gamma - c) <= 4 * math.sqrt((1 - c * c) / 10_000) + 0.01
        assert abs(r.normalized_pp - math.cos(math.radians(r.theta)) ** 2) <= 4 * math.sqrt((1 - c * c) / 10_000) + 0.01


def test_gamma_symmetry():
    n = 20_000
    grid = AngleGrid((20.0, 160.0, 340.0))
    a, b, c = run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=n, master_seed=4))
    sigma = math.sqrt(2 * (1 - a.gamma**2) / n)
    assert abs(a.gamma - b.gamma) <= 4 * sigma
    assert abs(a.gamma - c.gamma) <= 4 * sigma


def test_ablation_inequality():
    grid = AngleGrid((0.0,))
    det = run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=10_000, master_seed=5))[0]
    prob = run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=10_000, master_seed=5,
                                             criterion=Criterion.MALUS_PROBABILISTIC))[0]
    assert det.gamma - prob.gamma >= 0.4
    s_det = chsh_s(CoincidenceConfig(pairs_per_angle=10_000, master_seed=5), *CHSH_ANGLES)
    s_prob = chsh_s(CoincidenceConfig(pairs_per_angle=10_000, master_seed=5,
                                      criterion=Criterion.MALUS_PROBABILISTIC), *CHSH_ANGLES)
    assert s_det > 2 > s_prob


@pytest.mark.parametrize(
    "kwargs, expected",
    [
        ({}, 2 * math.sqrt(2)),
        ({"criterion": Criterion.MALUS_PROBABILISTIC}, math.sqrt(2)),
        ({"coupled": False}, 0.0),
    ],
)
def test_chsh_values(kwargs, expected):
    config = CoincidenceConfig(pairs_per_angle=100_000, master_seed=99, **kwargs)
    assert chsh_s(config, *CHSH_ANGLES) == pytest.approx(expected, abs=0.03)


def test_chsh_settings_order_and_sigma():
    result = chsh_run(CoincidenceConfig(pairs_per_angle=5000), *CHSH_ANGLES)
    assert [(s.a, s.b) for s in result.settings] == [(0, 22.5), (0, 67.5), (45, 22.5), (45, 67.5)]
    assert [s.theta for s in result.settings] == [22.5, 67.5, 22.5, 22.5]
    assert result.sigma == pytest.approx(math.sqrt(sum(s.sigma**2 for s in result.settings)))


def test_thread_count_does_not_change_results():
    config = MalusConfig(grid=AngleGrid.from_range(0, 90, 10), photons_per_angle=3 * BLOCK_SIZE + 17, master_seed=8)
    assert run_malus(config, threads=1) == run_malus(config, threads=8)
    pairs = CoincidenceConfig(grid=config.grid, pairs_per_angle=3 * BLOCK_SIZE + 17, master_seed=8)
    assert run_coincidence(pairs, threads=1) == run_coincidence(pairs, threads=8)
    assert chsh_run(pairs, *CHSH_ANGLES, threads=1) == chsh_run(pairs, *CHSH_ANGLES, threads=4)


def test_seed_changes_results():
    a = run_malus(MalusConfig(grid=AngleGrid((30.0,)), photons_per_angle=5000, master_seed=1))
    b = run_malus(MalusConfig(grid=AngleGrid((30.0,)), photons_per_angle=5000, master_seed=2))
    assert a != b


def _photonwise_total(fn, theta_index, theta, n, seed=13, **kwargs):
    total = (0, 0, 0, 0)
    for block, start in enumerate(range(0, n, BLOCK_SIZE)):
        part = fn(seed, theta_index, theta, block, min(BLOCK_SIZE, n - start), **kwargs)
        total = tuple(x + y for x, y in zip(total, part))
    return CountTable(*total)


@pytest.mark.parametrize(
    "dist, criterion, sigma",
    [
        (ArccosUniform(), Criterion.DETERMINISTIC, None),
        (Gaussian(), Criterion.DETERMINISTIC, Gaussian().sigma),
        (ArccosUniform(), Criterion.MALUS_PROBABILISTIC, None),
    ],
)
def test_malus_matches_photon_by_photon_loop(dist, criterion, sigma):
    n = BLOCK_SIZE + 500
    grid = AngleGrid((0.0, 35.0, 90.0))
    rows = run_malus(MalusConfig(grid=grid, photons_per_angle=n, master_seed=13, distribution=dist, criterion=criterion))
    for i, r in enumerate(rows):
        expected = _photonwise_total(photonwise_malus, i, r.theta, n, gaussian_sigma=sigma,
                                     probabilistic=criterion is Criterion.MALUS_PROBABILISTIC)
        assert r.counts == expected


@pytest.mark.parametrize("coupled, criterion", [(True, Criterion.DETERMINISTIC), (False, Criterion.DETERMINISTIC),
                                                (True, Criterion.MALUS_PROBABILISTIC)])
def test_coincidence_matches_pair_by_pair_loop(coupled, criterion):
    n = BLOCK_SIZE + 500
    grid = AngleGrid((10.0, 67.5))
    rows = run_coincidence(CoincidenceConfig(grid=grid, pairs_per_angle=n, master_seed=13, coupled=coupled,
                                             criterion=criterion))
    for i, r in enumerate(rows):
        expected = _photonwise_total(photonwise_pairs, i, r.theta, n, coupled=coupled,
                                     probabilistic=criterion is Criterion.MALUS_PROBABILISTIC)
        assert r.counts == expected
