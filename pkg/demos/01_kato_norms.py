"""Kato norms: the quantity that controls everything else.

The norm sup_y int |V(x)| / |x - y| dx is scale-invariant under
V -> r^2 V(r x), so a shallow wide well and a deep narrow one can share it.
The local profile shrinks to zero as the ball radius shrinks, and the distal
profile vanishes once the radius passes the support.
"""
import numpy as np

from katodisp import Potential, kato_norm, kato_report

well = Potential.square_well(1.0, 1.0)
print(f"unit well           ||V||_K = {kato_norm(well):.6f}   (2 pi = {2 * np.pi:.6f})")
for r in (0.5, 2.0, 4.0):
    print(f"rescaled by r = {r:<4} ||V_r||_K = {kato_norm(well.rescaled(r)):.6f}")

g = Potential.gaussian(1.0, 1.0)
print(f"\ngaussian(1, 1)      ||V||_K = {kato_norm(g):.6f}   (4 pi = {4 * np.pi:.6f})")

rep = kato_report(well, deltas=(2.0, 1.0, 0.5, 0.1), radii=(0.5, 1.0, 3.0))
print("\nlocal profile  (delta -> sup over centres of the |x-y| < delta part):")
for d, v in rep.local_profile:
    print(f"  {d:5.2f}  {v:.6f}")
print("distal profile (R -> sup over centres of the |x-y| > R part):")
for R, v in rep.distal_profile:
    print(f"  {R:5.2f}  {v:.6f}")
print(f"maximising centre: {rep.argmax_center}")
