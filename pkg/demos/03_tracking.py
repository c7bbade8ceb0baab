# %% [markdown]
# # Linking centroids into tracks
#
# Detections in consecutive frames are linked greedily, shortest distance
# first, each detection used at most once.

# %%
import math

import numpy as np

from celldyn.movement import speed_per_hour, track_movement, video_tracks
from celldyn.simulator import SimParams, simulate

sigma = 1.5
video, truth = simulate(SimParams(height=300, width=300, frames=40, initial_count=25, motion_std=sigma, seed=3))
tracks = video_tracks(video, max_link_distance=40)
print(len(tracks), "tracks for", len(truth.cells), "simulated cells")

# %%
metrics = track_movement(tracks)
speeds = np.array([m.avg_speed for m in metrics])
print(f"mean speed {speeds.mean():.3f} px/frame, "
      f"expected step length {sigma * math.sqrt(math.pi / 2):.3f}")
print(f"as px/hour at 30 min per frame: {speed_per_hour(speeds.mean(), video.frame_interval):.2f}")

# %% [markdown]
# A random walk wanders, so directness (net over total distance) stays low.

# %%
for m in metrics[:5]:
    print(f"track {m.track_id}: net {m.net_displacement:6.2f}  total {m.total_distance:6.2f}  "
          f"directness {m.directness:.2f}")
