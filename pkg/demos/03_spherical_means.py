"""The family T(rho): spherical means weighted by V.

T(rho) f(x) = V(x) / (4 pi rho) * (integral of f over the sphere |x - y| = rho).
Integrated over rho its L1 norm is at most ||V||_K / 4 pi, and its Fourier
transform in rho is V R0(lambda^2).  Both facts are checked on a lattice.
"""
import numpy as np

from katodisp import Potential, RhoGrid, cartesian_grid, fourier_consistency, kato_norm, slice_norms, wiener_norm
from katodisp.tfamily import delta_probe, interaction_reach

well = Potential.square_well(1.0, 1.0)
grid = cartesian_grid(1.2, 0.1)
f = delta_probe(grid, (0.0, 0.0, 0.0))
rg = RhoGrid(0.05, 2.4)

print("rho    ||T(rho) f||_1   (for a unit mass at the origin this is rho on [0, 1])")
for rho, n in slice_norms(well, grid, rg, f)[::4]:
    print(f"{rho:5.3f}  {n:.4f}")

w = wiener_norm(well, grid, rg, [f])
print(f"\nrho-integrated norm {w:.4f}  vs bound {kato_norm(well) / (4 * np.pi):.4f}")

fine = cartesian_grid(1.1, 0.05)
g = delta_probe(fine, (0.3, 0.1, -0.2))
reach = interaction_reach(well, fine, g)
for lam in (0.0, 1.0, 4.0):
    a = fourier_consistency(well, fine, RhoGrid(0.03, reach), lam, g)
    b = fourier_consistency(well, fine, RhoGrid(0.015, reach), lam, g)
    print(f"lambda = {lam}: Fourier sum vs V R0 f relative gap {a:.3%} -> {b:.3%} after halving h_rho")
