# What the correlation depends on.
#
# Three switches change the model:
#   * the sign rule is swapped for a coin flip with the projection probability,
#   * the two photons of a pair get independent polarizations,
#   * the arccos-uniform draw of the analyzer angle is replaced by a Gaussian.
# Each run is compared with its closed-form expectation.
from qpol import AngleGrid, ArccosUniform, CoincidenceConfig, Criterion, Gaussian, chsh_s, expected_gamma, run_coincidence

ANGLES = (0, 45, 22.5, 67.5)
grid = AngleGrid((0.0, 22.5, 45.0, 67.5))
variants = {
    "deterministic": dict(),
    "probabilistic": dict(criterion=Criterion.MALUS_PROBABILISTIC),
    "uncoupled": dict(coupled=False),
    "gaussian": dict(distribution=Gaussian()),
}

for name, kwargs in variants.items():
    config = CoincidenceConfig(grid=grid, pairs_per_angle=50_000, master_seed=11, **kwargs)
    rows = run_coincidence(config, threads=4)
    dist = kwargs.get("distribution", ArccosUniform())
    criterion = kwargs.get("criterion", Criterion.DETERMINISTIC)
    coupled = kwargs.get("coupled", True)
    print(f"\n{name}:  S = {chsh_s(config, *ANGLES, threads=4):.4f}")
    for r in rows:
        print(f"  theta {r.theta:5.1f}  gamma {r.gamma:+.4f}  expected {expected_gamma(r.theta, dist, criterion, coupled):+.4f}")
