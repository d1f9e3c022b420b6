"""Dispersive decay |u(t)| ~ t^(-3/2) in a finite box.

Free evolution on a 64^3 Dirichlet box recovers the (4 pi t)^(-3/2) law
while the wave has not reached the walls.  For radial potentials the s-wave
reduction reaches much larger boxes, which is what the perturbed runs need:
a shallow well decays like the free case, a deep well keeps a bound-state
plateau unless that state is projected out first.
"""
from katodisp import BoxSpec, Potential, discretize_H, evolve_and_fit
from katodisp.propagator import FREE_PREFACTOR

free = evolve_and_fit(discretize_H(Potential.zero(), BoxSpec(16.0, 64)))
print(f"free 64^3: slope {free.fitted_slope:.3f}, prefactor / (4 pi)^-3/2 = {free.prefactor / FREE_PREFACTOR:.3f}")

box = BoxSpec(400.0, 4000, geometry="radial")
shallow = evolve_and_fit(discretize_H(Potential.square_well(-1.0, 1.0), box), support_radius=1.0)
print(f"well depth -1: slope {shallow.fitted_slope:.3f} on t in {tuple(round(t, 2) for t in shallow.fit_window)}")

deep = discretize_H(Potential.square_well(-8.0, 1.0), box)
print(f"well depth -8: bound state at E = {deep.pp_eigenvalues[0]:.4f}")
for project in (True, False):
    rep = evolve_and_fit(deep, project=project, support_radius=1.0)
    label = "projected" if project else "raw      "
    print(f"  {label}: slope {rep.fitted_slope:.3f}")
