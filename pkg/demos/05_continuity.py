"""Continuity of state-dependent characteristics on a compact box.

Run with ``python3 demos/05_continuity.py``.
"""
import numpy as np

from fellerforge import ProbeGrids, StateCharacteristics, continuity_probe

grids = ProbeGrids(k_points=33, k_coarse=9, R_grid=tuple(np.geomspace(1, 1e6, 13)),
                   r_small=tuple(np.geomspace(1e-8, 1, 13)), h_grid=(1e-1, 1e-2, 1e-3, 1e-4))

# Stable-like jumps whose index varies smoothly with the state.
chars = StateCharacteristics.stable_like(lambda x: 1.2 + 0.5 * np.tanh(x))
rep = continuity_probe(chars, (-1, 1), grids)
print("stable-like:", rep.verdict)
for sub in rep.subreports:
    print(f"  {sub.condition_id:16s} {sub.verdict}")
