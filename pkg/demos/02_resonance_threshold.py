"""Birman-Schwinger operators and the zero-energy resonance of a square well.

I + V R0(lambda^2) stays invertible for small potentials.  Deepening an
attractive well, it first fails at lambda = 0 when the well is just deep
enough to hold a zero-energy state: cos(sqrt c) = 0, so c = (pi/2)^2.
Here the failure is located by sweeping the depth on a Nystrom grid.
"""
import numpy as np

from katodisp import Potential, birman_schwinger, depth_sweep, kato_norm, nystrom_grid, resonance_scan

well = Potential.square_well(1.0, 1.0)
grid = nystrom_grid(well, 0.25)
print(f"Nystrom grid: {len(grid)} nodes, h = {grid.spacing}")

bound = kato_norm(well) / (4 * np.pi)
for lam in (0.0, 5.0, 20.0):
    print(f"lambda = {lam:5.1f}: L1 norm of V R0 = {birman_schwinger(well, grid, lam).norm():.4f}"
          f"  (bound ||V||_K / 4 pi = {bound:.4f})")

sweep = depth_sweep(well, grid, np.linspace(-3.0, -2.0, 21))
c = -sweep.threshold_depth
print(f"\nthreshold depth {c:.4f}   exact (pi/2)^2 = {(np.pi / 2) ** 2:.4f}   "
      f"min singular value there {sweep.threshold_min_singular:.2e}")

lams = np.linspace(0.0, 2.0, 9)
for scale in (0.9, 1.0, 1.5):
    scan = resonance_scan(well.scaled(-scale * c), grid, lams)
    print(f"depth {scale:.1f} x threshold: min sv at lambda=0 {scan.min_singular[0]:.2e}, "
          f"flagged {scan.flagged or 'none'}")
