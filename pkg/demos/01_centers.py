"""
Where the laser-off state loses stability
=========================================

Below threshold every laser in the ring sits at the laser-off level.  As the pump
``alpha`` grows, a pair of characteristic roots of one Fourier mode of the ring
reaches the imaginary axis.  Each such crossing is a center, and the symmetry of the
mode decides which rotating waves are born there.
"""

from ringhopf.bifurcation import CALIBRATED_PSI, classify_equilibrium_hopf, find_centers
from ringhopf.model import case_study_params

p = case_study_params(CALIBRATED_PSI)
print(f"coupling phase psi = {p.psi}, delay T = {p.T}, coupling strength eta = {p.eta}")

# %%
# Every Fourier mode ``j = 0..4`` of the ring has its own scalar quasi-polynomial, so
# centers are searched mode by mode and then merged.

centers = sorted((c for j in range(5) for c in find_centers(p, (0.03, 0.0363), j)), key=lambda c: c.alpha0)

# %%
# At each center the root crosses from left to right (crossing number -1) and the
# catalog of maximal twisted orbit types tells which branches appear and how many.

for c in centers:
    pred = classify_equilibrium_hopf(p, c)
    kinds = ", ".join(f"{k} x {t.name}" for t, k in pred.orbit_types)
    print(f"alpha0 = {c.alpha0:.6f}  mode {c.j}  w0 = {c.w0:+.4f}  r' = {c.r_prime:6.2f}  "
          f"t = {pred.crossing.t:+d}  ->  {kinds}")
