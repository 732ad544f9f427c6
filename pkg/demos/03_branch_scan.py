"""
Following a rotating wave and watching it destabilize
=====================================================

The D8 rotating wave, where all lasers are in phase, is born at the first center.
Continuing it in ``alpha`` and counting unstable roots on every isotypic component
of its linearization locates the secondary bifurcations along the branch.
"""

import numpy as np

from ringhopf.bifurcation import CALIBRATED_PSI, branch_from_center, hopf_scan_releq, regularity_check
from ringhopf.model import case_study_params

p = case_study_params(CALIBRATED_PSI)
branch = branch_from_center(p, 0, alpha_max=0.07)
amps = np.array([re.node.a.real for re in branch])
print(f"{len(branch)} points from alpha = {branch[0].alpha:.5f} to {branch[-1].alpha:.5f}")
print(f"drift frequency w = {branch[0].w:.6f}, field amplitude grows from {amps[0]:.3f} to {amps[-1]:.3f}")

# %%
# The rotating-frame equations must be nondegenerate along the branch for the
# secondary bifurcation theory to apply.

print("regular everywhere:", all(regularity_check(p, re).passed for re in branch[::5]))

# %%
# Hopf events change the count on a split component by two, steady events are
# crossings through the origin and make no prediction.

events, predictions = hopf_scan_releq(p, branch)
for e in events:
    print(f"alpha = {e.alpha:.5f}  U{e.component}  {e.kind:6s} change {e.delta_count:+d}")
for pr in predictions:
    print(f"alpha = {pr.alpha0:.5f}  new periodic solutions: "
          + ", ".join(f"{k} x {t.label}" for t, k in pr.orbit_types))
