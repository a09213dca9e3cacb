# Malus law from a deterministic sign rule.
#
# Randomly polarized photons pass a polarizer at 0 degrees, then a second
# analyzer at theta. Each photon is sent into one channel by the sign of
# s1 * p1, where p1 is drawn fresh for every photon. Counting the (+,+)
# channel over many photons reproduces N/2 cos^2(theta).
import time

import numpy as np

from qpol import AngleGrid, MalusConfig, chi_square_fit, run_malus

N = 40_000
config = MalusConfig(grid=AngleGrid.from_range(0, 90, 5), photons_per_angle=N, master_seed=2024)

start = time.perf_counter()
rows = run_malus(config, threads=4)
print(f"{len(rows)} angles x {N} photons in {time.perf_counter() - start:.2f} s\n")

print(" theta    N++   expected     N-+   expected")
for r in rows:
    print(f"{r.theta:6.1f} {r.counts.n_pp:6d} {r.malus_plus_ref:10.1f} {r.counts.n_mp:7d} {r.malus_minus_ref:10.1f}")

fit = chi_square_fit([r.counts.n_pp for r in rows], [r.malus_plus_ref for r in rows], 1.0, N)
print("\nchi-square of N++ against N/2 cos^2:", fit.as_dict())

# Same experiment with only 100 photons per angle: the law is visible but noisy.
small = run_malus(MalusConfig(photons_per_angle=100, master_seed=2024))
print("\n100 photons/angle, N++:", [r.counts.n_pp for r in small])

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    theta = np.array([r.theta for r in rows])
    fig, ax = plt.subplots()
    ax.plot(theta, [r.counts.n_pp for r in rows], "o", label="N++ simulated")
    ax.plot(theta, [r.counts.n_mp for r in rows], "s", label="N-+ simulated")
    fine = np.linspace(0, 90, 181)
    ax.plot(fine, N / 2 * np.cos(np.radians(fine)) ** 2, "-", label="N/2 cos^2")
    ax.plot(fine, N / 2 * np.sin(np.radians(fine)) ** 2, "--", label="N/2 sin^2")
    ax.set_xlabel("theta (deg)")
    ax.set_ylabel("counts")
    ax.legend()
    fig.savefig("malus.png", dpi=120)
    print("\nwrote malus.png")
except ImportError:
    pass
