"""Centroid linking across frames and per-track movement metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import Centroid, MaskVideo
from .morphology import FrameRegions, frame_labels, measure_labels

DEFAULT_MAX_LINK_DISTANCE = 40.0


@dataclass(frozen=True)
class Track:
    track_id: int
    observations: tuple[tuple[int, Centroid], ...]

    def __post_init__(self):
        if not self.observations:
            raise ValueError("a track needs at least one observation")
        frames = [f for f, _ in self.observations]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("track frame indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def frames(self) -> list[int]:
        return [f for f, _ in self.observations]

    def positions(self) -> np.ndarray:
        """(n, 2) array of (y, x) centroids in time order."""
        return np.array([(c.y, c.x) for _, c in self.observations], dtype=np.float64)


@dataclass(frozen=True)
class MovementMetrics:
    track_id: int
    n_obs: int
    total_distance: float
    net_displacement: float
    avg_speed: float  # pixels per frame
    directness: float


def extract_centroids(labeled_frame: np.ndarray) -> list[tuple[int, Centroid]]:
    """Mean pixel coordinate of every nonzero label, in label order."""
    regions = measure_labels(labeled_frame)
    return [
        (int(lab), Centroid(float(y), float(x)))
        for lab, y, x in zip(regions.label, regions.centroid_y, regions.centroid_x)
    ]


def _as_arrays(detections) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(detections, FrameRegions):
        return detections.label, np.column_stack((detections.centroid_y, detections.centroid_x))
    detections = list(detections)
    if not detections:
        return np.empty(0, np.int64), np.empty((0, 2))
    labels = np.array([lab for lab, _ in detections], dtype=np.int64)
    pos = np.array([(c.y, c.x) for _, c in detections], dtype=np.float64)
    return labels, pos


def _greedy_pairs(prev_ids, prev_pos, cur_labels, cur_pos, max_dist):
    """Globally nearest one-to-one matching between two detection sets.

    Candidate pairs within ``max_dist`` are accepted in ascending order of
    (distance, previous track id, detection label), skipping pairs whose
    endpoints are already taken.
    """
    if not len(prev_ids) or not len(cur_labels):
        return []
    tree_prev = cKDTree(prev_pos)
    tree_cur = cKDTree(cur_pos)
    # the tree's own distances may round differently for exact ties, so recompute
    sdm = tree_prev.sparse_distance_matrix(tree_cur, max_dist * (1 + 1e-12), output_type="ndarray")
    if sdm.size == 0:
        return []
    i = sdm["i"].astype(np.int64)
    j = sdm["j"].astype(np.int64)
    d = np.hypot(prev_pos[i, 0] - cur_pos[j, 0], prev_pos[i, 1] - cur_pos[j, 1])
    ok = d <= max_dist
    i, j, d = i[ok], j[ok], d[ok]
    order = np.lexsort((cur_labels[j], prev_ids[i], d))
    used_prev = np.zeros(len(prev_ids), dtype=bool)
    used_cur = np.zeros(len(cur_labels), dtype=bool)
    pairs = []
    for k in order.tolist():
        a, b = i[k], j[k]
        if used_prev[a] or used_cur[b]:
            continue
        used_prev[a] = used_cur[b] = True
        pairs.append((a, b))
    return pairs


def link_tracks(per_frame_centroids: Sequence, max_link_distance: float = DEFAULT_MAX_LINK_DISTANCE) -> list[Track]:
    """Link detections of consecutive frames into tracks.

    Args:
        per_frame_centroids: one entry per frame, either a :class:`FrameRegions`
            or a sequence of ``(label, Centroid)`` pairs.
        max_link_distance: pairs farther apart than this are never linked.

    Returns:
        Tracks ordered by id. Ids are assigned in order of creation; within
        a frame, new tracks are opened in detection-label order.
    """
    if not max_link_distance > 0:
        raise ValueError("max_link_distance must be > 0")
    obs: list[list[tuple[int, float, float]]] = []
    active_ids = np.empty(0, np.int64)
    active_pos = np.empty((0, 2))
    for t, detections in enumerate(per_frame_centroids):
        labels, pos = _as_arrays(detections)
        order = np.argsort(labels, kind="stable")
        labels, pos = labels[order], pos[order]
        assigned = np.full(len(labels), -1, dtype=np.int64)
        for a, b in _greedy_pairs(active_ids, active_pos, labels, pos, max_link_distance):
            assigned[b] = active_ids[a]
        for b in np.flatnonzero(assigned < 0):
            assigned[b] = len(obs)
            obs.append([])
        for b, tid in enumerate(assigned.tolist()):
            obs[tid].append((t, float(pos[b, 0]), float(pos[b, 1])))
        active_ids, active_pos = assigned, pos
    return [
        Track(tid, tuple((f, Centroid(y, x)) for f, y, x in rows))
        for tid, rows in enumerate(obs)
    ]


def movement_metrics(track: Track) -> Optional[MovementMetrics]:
    """Path length, net displacement, speed and directness of one track.

    Tracks with fewer than two observations carry no movement data and
    yield ``None``.
    """
    n = len(track)
    if n < 2:
        return None
    pts = track.positions()
    steps = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    total = float(steps.sum())
    net = math.hypot(pts[-1, 0] - pts[0, 0], pts[-1, 1] - pts[0, 1])
    return MovementMetrics(
        track_id=track.track_id,
        n_obs=n,
        total_distance=total,
        net_displacement=net,
        avg_speed=total / (n - 1),
        directness=net / total if total > 0 else 0.0,
    )


def track_movement(tracks: Iterable[Track]) -> list[MovementMetrics]:
    return [m for m in map(movement_metrics, tracks) if m is not None]


def speed_per_hour(avg_speed: float, frame_interval: float) -> float:
    """Convert pixels/frame to pixels/hour given the frame interval in minutes."""
    return avg_speed * 60.0 / frame_interval


def video_tracks(video: MaskVideo, max_link_distance: float = DEFAULT_MAX_LINK_DISTANCE) -> list[Track]:
    regions = [measure_labels(frame_labels(video, t), t) for t in range(video.n_frames)]
    return link_tracks(regions, max_link_distance)
