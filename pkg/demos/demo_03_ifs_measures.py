"""Invariant measures of iterated function systems.

The branch-averaging map lam -> sum_i p_i lam o tau_i^{-1} contracts toward
the system's invariant measure.  For the doubling branches that measure is
Lebesgue; for the middle-thirds branches it is the Cantor distribution,
which the cell representation tracks exactly at triadic resolutions.
"""

import numpy as np

import towb

# Middle thirds: after k steps from Lebesgue, mass 2^-k sits on each
# generation-k triadic interval.  At N = 3^5 cells the arithmetic is exact.
N = 3 ** 5
system = towb.sys_d(N)
lam = towb.Measure.lebesgue(N)
for step in range(1, 6):
    lam = towb.hutchinson_iterate(system, lam, 1)
    occupied = int(np.count_nonzero(lam.cell_masses))
    per_cell = 2.0 ** -step / 3 ** (5 - step)
    print(f"step {step}: {occupied} occupied cells, "
          f"mass per cell {lam.cell_masses.max():.6f} "
          f"(target {per_cell:.6f}, "
          f"{2.0 ** -step:.6f} per generation-{step} interval)")

# A point mass under the doubling branches spreads out to uniform.
N2 = 256
system2 = towb.sys_a(N2)
lam2 = towb.Measure.dirac(0.3, N2)
uniform = towb.Measure.lebesgue(N2)
print("\npoint mass under the doubling branches:")
for step in range(1, 13):
    lam2 = towb.hutchinson_iterate(system2, lam2, 1)
    tv = lam2.tv_cell_distance(uniform)
    print(f"  step {step:2d}: TV to uniform = {tv:.4f}")
    if tv == 0.0:
        break
