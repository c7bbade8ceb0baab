"""Connected-component labeling and per-nucleus shape descriptors.

All per-region quantities of a frame are computed in one vectorized pass
over the foreground pixels, so the cost per frame is a handful of array
operations regardless of how many nuclei it holds.

Conventions:

* Components are 8-connected and numbered 1..k in row-major order of
  their first pixel.
* Eccentricity comes from the eigenvalues of the pixel-coordinate
  covariance, ``sqrt(1 - lmin / lmax)``; a single pixel is 0.
* Solidity is area over the area of the convex hull of all pixel corners.
* Perimeter is the length of the outer contour traced through boundary
  pixel centres, with axis steps weighing 1 and diagonal steps sqrt(2).
  Thin parts are walked twice, as a contour follower would. A lone pixel
  has a zero-length contour and is assigned perimeter 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import ndimage

from .core import Centroid, MaskVideo

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
SQRT2 = float(np.sqrt(2.0))
SINGLE_PIXEL_PERIMETER = 1.0


@dataclass(frozen=True)
class RegionDescriptor:
    frame: int
    label: int
    area: int
    eccentricity: float
    solidity: float
    perimeter: float
    centroid: Centroid


@dataclass(frozen=True, eq=False)
class FrameRegions:
    """Column-wise descriptors of every region in one frame, ordered by label."""

    frame: int
    label: np.ndarray
    area: np.ndarray
    eccentricity: np.ndarray
    solidity: np.ndarray
    perimeter: np.ndarray
    centroid_y: np.ndarray
    centroid_x: np.ndarray

    def __len__(self) -> int:
        return int(self.label.size)

    def descriptors(self) -> list[RegionDescriptor]:
        return [
            RegionDescriptor(
                frame=self.frame,
                label=int(self.label[i]),
                area=int(self.area[i]),
                eccentricity=float(self.eccentricity[i]),
                solidity=float(self.solidity[i]),
                perimeter=float(self.perimeter[i]),
                centroid=Centroid(float(self.centroid_y[i]), float(self.centroid_x[i])),
            )
            for i in range(len(self))
        ]


COLUMNS = ("frame", "label", "area", "eccentricity", "solidity", "perimeter", "centroid_y", "centroid_x")


class MorphologySet:
    """Descriptors of all regions of a video, frame-major and label-minor."""

    def __init__(self, frames: list[FrameRegions]):
        self.frames = list(frames)

    def __len__(self) -> int:
        return sum(len(f) for f in self.frames)

    def __iter__(self) -> Iterator[RegionDescriptor]:
        for f in self.frames:
            yield from f.descriptors()

    @property
    def descriptors(self) -> list[RegionDescriptor]:
        return list(self)

    def column(self, name: str) -> np.ndarray:
        if name == "frame":
            parts = [np.full(len(f), f.frame, dtype=np.int64) for f in self.frames]
        else:
            parts = [getattr(f, name) for f in self.frames]
        if not parts:
            return np.empty(0)
        return np.concatenate(parts)

    def rows(self) -> list[dict]:
        return [
            {
                "frame": d.frame,
                "label": d.label,
                "area": d.area,
                "eccentricity": d.eccentricity,
                "solidity": d.solidity,
                "perimeter": d.perimeter,
                "centroid_y": d.centroid.y,
                "centroid_x": d.centroid.x,
            }
            for d in self
        ]


def label_components(frame: np.ndarray) -> tuple[np.ndarray, int]:
    """Label the 8-connected foreground components of a binary frame.

    Returns:
        ``(labels, count)`` where ``labels`` is an int32 array with 0 for
        background and 1..count in first-encounter raster order.
    """
    frame = np.asarray(frame)
    labels, count = ndimage.label(frame != 0, structure=EIGHT_CONNECTED)
    return labels.astype(np.int32, copy=False), int(count)


def _compact_labels(lab: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map raw label values of foreground pixels to 0..n-1 (sorted by label)."""
    top = int(lab.max())
    if top <= 4 * lab.size + 1024:
        present = np.bincount(lab, minlength=top + 1) > 0
        present[0] = False
        ids = np.flatnonzero(present)
        lut = np.zeros(top + 1, dtype=np.int64)
        lut[ids] = np.arange(ids.size)
        return ids, lut[lab]
    ids, inv = np.unique(lab, return_inverse=True)
    return ids, inv


def _neighbour_flags(flat: np.ndarray, idx: np.ndarray, lab: np.ndarray, stride: int):
    """Same-label flags of the 8 neighbours of each foreground pixel."""

    def same(offset):
        return flat[idx + offset] == lab

    return {
        "N": same(-stride),
        "S": same(stride),
        "E": same(1),
        "W": same(-1),
        "NE": same(1 - stride),
        "SE": same(1 + stride),
        "SW": same(stride - 1),
    }


def _contour_terms(nb: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel contributions to contour length and Euler number.

    Pixel centres joined along same-label axis and diagonal adjacencies form
    a planar complex whose 2x2 blocks with >= 3 pixels are filled. Each edge
    issued by a pixel (E, S, SE, SW) is walked by the outer contour once per
    side that borders no filled block. The Euler number is V - E + F of the
    same complex.
    """
    n, s, e, w = nb["N"], nb["S"], nb["E"], nb["W"]
    ne, se, sw = nb["NE"], nb["SE"], nb["SW"]
    i8 = np.int8
    e_mult = e * (2 - (n | ne).astype(i8) - (s | se).astype(i8))
    s_mult = s * (2 - (w | sw).astype(i8) - (e | se).astype(i8))
    se_mult = se * (2 - e.astype(i8) - s.astype(i8))
    sw_mult = sw * (2 - w.astype(i8) - s.astype(i8))
    axis = (e_mult + s_mult).astype(np.float64)
    diag = (se_mult + sw_mult).astype(np.float64)

    n_edges = (
        e.astype(i8) + s + (se & ~(e & s)) + (sw & ~(w & s))
    )
    block_tl = (e.astype(i8) + s + se) >= 2
    block_tr = ~w & sw & s
    euler = 1 - n_edges.astype(np.int64) + block_tl + block_tr
    return axis, diag, euler


def _traced_perimeter(mask: np.ndarray) -> float:
    """Outer contour length of a (possibly holed) binary crop."""
    filled = ndimage.binary_fill_holes(mask)
    pad = np.pad(filled.astype(np.int32), 1)
    flat = pad.ravel()
    idx = np.flatnonzero(flat)
    lab = flat[idx]
    axis, diag, _ = _contour_terms(_neighbour_flags(flat, idx, lab, pad.shape[1]))
    return float(axis.sum() + SQRT2 * diag.sum())


def _convex_minorant(y: np.ndarray, x: np.ndarray, group: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Vertices of the lower convex envelope of x(y), per group.

    Points must be sorted by (group, y) with y strictly increasing inside a
    group. Any point lying on or right of the chord joining its surviving
    neighbours cannot be a vertex, so all such points are dropped at once
    and the pass repeats until nothing changes.
    """
    keep = keep.copy()
    while True:
        ii = np.flatnonzero(keep)
        if ii.size < 3:
            return keep
        yy, xx, gg = y[ii], x[ii], group[ii]
        inner = (gg[1:-1] == gg[:-2]) & (gg[1:-1] == gg[2:])
        cross = (xx[1:-1] - xx[:-2]) * (yy[2:] - yy[:-2]) - (xx[2:] - xx[:-2]) * (yy[1:-1] - yy[:-2])
        drop = inner & (cross >= 0)
        if not drop.any():
            return keep
        keep[ii[1:-1][drop]] = False


def _hull_areas(inv, row, col, r0, heights, n) -> np.ndarray:
    """Convex-hull area of the pixel corners of every region (shoelace)."""
    row_off = np.concatenate(([0], np.cumsum(heights)[:-1]))
    n_slots = int(heights.sum())
    slot = row_off[inv] + (row - r0[inv])
    big = np.iinfo(np.int64).max // 4
    minc = np.full(n_slots, big, dtype=np.int64)
    maxc = np.full(n_slots, -big, dtype=np.int64)
    np.minimum.at(minc, slot, col)
    np.maximum.at(maxc, slot, col)

    # corner rows of region k run r0..r0+h; chain slot j of region k sits at row_off[k] + k + j
    slot_region = np.repeat(np.arange(n), heights)
    top = np.arange(n_slots) + slot_region
    n_chain = n_slots + n
    left = np.full(n_chain, big, dtype=np.int64)
    right = np.full(n_chain, -big, dtype=np.int64)
    left[top] = minc
    right[top] = maxc + 1
    left[top + 1] = np.minimum(left[top + 1], minc)
    right[top + 1] = np.maximum(right[top + 1], maxc + 1)

    chain_region = np.repeat(np.arange(n), heights + 1)
    chain_y = np.arange(n_chain) - np.repeat(row_off + np.arange(n), heights + 1) + np.repeat(r0, heights + 1)
    valid = left < big  # rows can be empty only in disconnected labeled regions
    keep_l = _convex_minorant(chain_y, left, chain_region, valid)
    keep_r = _convex_minorant(chain_y, -right, chain_region, valid)

    # polygon: left chain downwards, then right chain upwards
    li = np.flatnonzero(keep_l)
    ri = np.flatnonzero(keep_r)[::-1]
    px = np.concatenate((left[li], right[ri]))
    py = np.concatenate((chain_y[li], chain_y[ri]))
    pg = np.concatenate((chain_region[li], chain_region[ri]))
    part = np.concatenate((np.zeros(li.size, np.int8), np.ones(ri.size, np.int8)))
    order = np.lexsort((np.arange(pg.size), part, pg))
    px, py, pg = px[order], py[order], pg[order]
    return _shoelace(px, py, pg, n)


def _shoelace(x: np.ndarray, y: np.ndarray, group: np.ndarray, n: int) -> np.ndarray:
    """Areas of closed polygons stored back to back, one per group id."""
    starts = np.flatnonzero(np.r_[True, group[1:] != group[:-1]])
    nxt = np.arange(x.size) + 1
    ends = np.r_[starts[1:], x.size]
    nxt[ends - 1] = starts
    terms = x * y[nxt] - x[nxt] * y
    area = np.zeros(n, dtype=np.float64)
    area[group[starts]] = np.add.reduceat(terms, starts).astype(np.float64)
    return np.abs(area) / 2.0


def measure_labels(labels: np.ndarray, frame_index: int = 0) -> FrameRegions:
    """Descriptors for every nonzero label of a labeled 2-D frame."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("expected a 2-D labeled frame")
    h, w = labels.shape
    pad = np.pad(labels.astype(np.int32, copy=False), 1)
    stride = w + 2
    flat = pad.ravel()
    idx = np.flatnonzero(flat)
    if idx.size == 0:
        empty_f = np.empty(0, dtype=np.float64)
        return FrameRegions(frame_index, np.empty(0, np.int64), np.empty(0, np.int64),
                            empty_f, empty_f, empty_f, empty_f, empty_f)
    lab = flat[idx]
    ids, inv = _compact_labels(lab)
    n = ids.size
    row = idx // stride - 1
    col = idx % stride - 1

    r0 = np.full(n, h, dtype=np.int64)
    c0 = np.full(n, w, dtype=np.int64)
    r1 = np.full(n, -1, dtype=np.int64)
    np.minimum.at(r0, inv, row)
    np.minimum.at(c0, inv, col)
    np.maximum.at(r1, inv, row)
    heights = r1 - r0 + 1

    # offsets from the bounding-box corner keep the moment sums exact integers
    dy = (row - r0[inv]).astype(np.float64)
    dx = (col - c0[inv]).astype(np.float64)
    area = np.bincount(inv, minlength=n)
    sy = np.bincount(inv, dy, minlength=n)
    sx = np.bincount(inv, dx, minlength=n)
    syy = np.bincount(inv, dy * dy, minlength=n)
    sxx = np.bincount(inv, dx * dx, minlength=n)
    sxy = np.bincount(inv, dy * dx, minlength=n)
    a = (syy - sy * sy / area) / area
    c = (sxx - sx * sx / area) / area
    b = (sxy - sy * sx / area) / area
    half_tr = (a + c) / 2.0
    root = np.sqrt(((a - c) / 2.0) ** 2 + b * b)
    lmax = half_tr + root
    lmin = half_tr - root
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lmax > 0, lmin / lmax, 1.0)
    eccentricity = np.sqrt(1.0 - np.clip(ratio, 0.0, 1.0))

    nb = _neighbour_flags(flat, idx, lab, stride)
    axis, diag, euler = _contour_terms(nb)
    perimeter = np.bincount(inv, axis, minlength=n) + SQRT2 * np.bincount(inv, diag, minlength=n)
    euler_k = np.bincount(inv, euler, minlength=n)
    for k in np.flatnonzero(euler_k != 1):
        # holes, or a labeled region split into pieces: trace on the filled crop
        sl = (slice(r0[k], r1[k] + 1), slice(None))
        crop = labels[sl] == ids[k]
        cols = np.flatnonzero(crop.any(axis=0))
        perimeter[k] = _traced_perimeter(crop[:, cols[0] : cols[-1] + 1])
    perimeter[perimeter == 0] = SINGLE_PIXEL_PERIMETER

    hull = _hull_areas(inv, row, col, r0, heights, n)
    solidity = area / hull

    return FrameRegions(
        frame=frame_index,
        label=ids.astype(np.int64),
        area=area.astype(np.int64),
        eccentricity=eccentricity,
        solidity=solidity,
        perimeter=perimeter,
        centroid_y=r0 + sy / area,
        centroid_x=c0 + sx / area,
    )


def region_descriptors(labeled_frame: np.ndarray, frame_index: int = 0) -> list[RegionDescriptor]:
    """One :class:`RegionDescriptor` per nonzero label, in label order."""
    return measure_labels(labeled_frame, frame_index).descriptors()


def frame_labels(video: MaskVideo, t: int) -> np.ndarray:
    """Labels of frame ``t``: computed for binary videos, passed through otherwise."""
    frame = video.frames[t]
    if video.kind == "binary":
        return label_components(frame)[0]
    return frame


def measure_video(video: MaskVideo) -> list[FrameRegions]:
    return [measure_labels(frame_labels(video, t), t) for t in range(video.n_frames)]


def morphology_metrics(video: MaskVideo) -> MorphologySet:
    """Shape descriptors of every nucleus in every frame of ``video``."""
    return MorphologySet(measure_video(video))
