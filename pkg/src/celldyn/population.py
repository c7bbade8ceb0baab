"""Per-frame nucleus counts, growth and division-event statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import MaskVideo
from .morphology import label_components

DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class PopulationStats:
    initial_count: int
    final_count: int
    growth_ratio: float
    growth_absolute: int
    division_count: int
    division_frames: tuple[int, ...]
    avg_division_interval: Optional[float]  # None when fewer than two divisions


def counts_per_frame(video: MaskVideo) -> list[int]:
    """Number of nuclei in each frame.

    Binary frames count 8-connected components; labeled frames count
    distinct nonzero labels.
    """
    counts = []
    for frame in video.frames:
        if video.kind == "binary":
            counts.append(label_components(frame)[1])
        else:
            counts.append(int(np.count_nonzero(np.unique(frame))))
    return counts


def population_stats(counts: Sequence[int], tau: float = DEFAULT_TAU) -> PopulationStats:
    """Summarise a count series.

    A division frame is any ``t`` where ``counts[t+1] - counts[t] > tau``; a
    jump of several nuclei in one step still marks a single frame.
    """
    counts = [int(c) for c in counts]
    if not counts:
        raise ValueError("counts must hold at least one frame")
    if not tau > 0:
        raise ValueError("tau must be > 0")
    if min(counts) < 0:
        raise ValueError("counts must be nonnegative")
    initial, final = counts[0], counts[-1]
    derivative = np.diff(np.asarray(counts, dtype=np.int64))
    frames = tuple(int(t) for t in np.flatnonzero(derivative > tau))
    interval = float(np.mean(np.diff(frames))) if len(frames) >= 2 else None
    return PopulationStats(
        initial_count=initial,
        final_count=final,
        growth_ratio=final / max(initial, 1),
        growth_absolute=final - initial,
        division_count=len(frames),
        division_frames=frames,
        avg_division_interval=interval,
    )
