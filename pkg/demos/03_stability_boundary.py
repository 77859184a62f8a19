"""
Where a deterministic link breaks mean-square stability
=======================================================

For a scalar node with step 0.02, unit regressor power and complex data,
a constant gain c is stable while c^2 * 0.9608 < 1.
"""

import numpy as np

from fading_ilms import channels as ch
from fading_ilms import network as nw
from fading_ilms import simulation as sm
from fading_ilms import theory as th


def scalar(c):
    return nw.make_profile([1.0], 0.02, [[1.0]], 0.01, ch.deterministic(c), gamma=1.0)


for c in (0.9, 1.0, 1.0201, 1.0202, 1.2):
    st = th.ms_stability(scalar(c))
    print(f"c = {c:<7} s * rho(F) = {st.node_factor[0]:.6f}  stable: {st.stable}")

print(f"\nanalytic boundary: c = {1 / np.sqrt(th.fbar(0.02, [1.0], 1.0)[0, 0]):.6f}")

# Simulate both sides of the boundary (real data, so gamma = 2 here).
cfg = sm.SimConfig(iterations=400, runs=50, tail=100, master_seed=1)
for c in (0.9, 1.2):
    res = sm.run_ensemble(scalar(c).replace(gamma=2.0), cfg)
    ratio = res.msd_curve[0, -100:].mean() / res.msd_curve[0, 0]
    print(f"c = {c}: tail MSD / initial MSD = {ratio:.3g}")
