# %% [markdown]
# # Region shape descriptors
#
# Area, eccentricity, solidity and perimeter for a few hand-made shapes,
# then for a whole simulated video.

# %%
import numpy as np

from celldyn.morphology import label_components, morphology_metrics, region_descriptors
from celldyn.simulator import SimParams, simulate

frame = np.zeros((12, 20), np.uint8)
frame[1:6, 1:6] = 1          # square
frame[8, 2:9] = 1            # line
frame[1:6, 10:15] = 1        # L shape
frame[1:4, 12:15] = 0
labels, n = label_components(frame)
print(labels)

# %%
for d in region_descriptors(labels):
    print(f"label {d.label}: area {d.area:3d}  ecc {d.eccentricity:.3f}  "
          f"solidity {d.solidity:.3f}  perimeter {d.perimeter:.2f}")

# %% [markdown]
# Simulated disks of radius r cover close to pi r^2 pixels each.

# %%
video, _ = simulate(SimParams(height=200, width=200, frames=5, initial_count=15, radius=6, seed=1))
ms = morphology_metrics(video)
areas = ms.column("area")
print(f"{len(ms)} regions, mean area {areas.mean():.1f} vs pi r^2 = {np.pi * 36:.1f}")
print(f"mean solidity {ms.column('solidity').mean():.3f}")
