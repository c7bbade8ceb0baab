"""Seeded synthetic nucleus videos with a ground-truth event ledger.

Nuclei are disks of fixed radius. Between consecutive frames every cell
first may die, then either divides or takes an isotropic Gaussian step
reflected at the field border. Centres are kept at least ``2 * radius + 2``
apart (any move or division that would break this is retried or
abandoned), so no two disks ever touch, even diagonally, and mask-derived
counts equal the ledger counts exactly.

Ground-truth JSON schema::

    {
      "params":  {...SimParams fields...},
      "counts":  [n_0, ..., n_{T-1}],
      "births":  [b_0, ..., b_{T-2}],   # divisions between frame t and t+1
      "deaths":  [d_0, ..., d_{T-2}],   # deaths between frame t and t+1
      "cells": [
        {"id": 0, "parent": null, "start": 0, "end": 80, "fate": "alive",
         "trajectory": [[frame, y, x], ...]},
        ...
      ]
    }

``counts[t + 1] == counts[t] + births[t] - deaths[t]`` holds for every t.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import MaskVideo

MAX_PLACEMENT_ATTEMPTS = 2000
MAX_MOVE_ATTEMPTS = 10


@dataclass(frozen=True)
class SimParams:
    height: int = 256
    width: int = 256
    frames: int = 81
    initial_count: int = 20
    division_prob: float = 0.0
    death_prob: float = 0.0
    motion_std: float = 1.0
    radius: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.height < 1 or self.width < 1:
            raise ValueError("field dimensions must be >= 1")
        if self.initial_count < 0:
            raise ValueError("initial_count must be >= 0")
        for name in ("division_prob", "death_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.motion_std < 0:
            raise ValueError("motion_std must be >= 0")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def min_separation(self) -> float:
        return 2.0 * self.radius + 2.0


@dataclass(frozen=True)
class CellRecord:
    id: int
    parent: Optional[int]
    start: int
    end: int
    fate: str  # "alive", "died" or "divided"
    trajectory: tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class GroundTruth:
    counts: tuple[int, ...]
    births: tuple[int, ...]
    deaths: tuple[int, ...]
    cells: tuple[CellRecord, ...]
    params: Optional[SimParams] = None

    def birth_frames(self) -> set[int]:
        return {t for t, b in enumerate(self.births) if b > 0}

    def check(self) -> None:
        """Raise if the ledger identity fails for any frame."""
        if len(self.births) != len(self.counts) - 1 or len(self.deaths) != len(self.counts) - 1:
            raise ValueError("ledger lengths do not match the frame count")
        for t in range(len(self.births)):
            if self.counts[t + 1] != self.counts[t] + self.births[t] - self.deaths[t]:
                raise ValueError(f"ledger identity broken between frames {t} and {t + 1}")


def _reflect(v: float, lo: float, hi: float) -> float:
    span = hi - lo
    if span <= 0:
        return lo
    m = (v - lo) % (2 * span)
    return lo + (m if m <= span else 2 * span - m)


class _Field:
    """Live cell positions with separation checks."""

    def __init__(self, params: SimParams):
        self.p = params
        r = params.radius
        self.lo = float(r)
        self.hi_y = float(params.height - 1 - r)
        self.hi_x = float(params.width - 1 - r)
        self.sep2 = params.min_separation ** 2

    def inside(self, y, x) -> tuple[float, float]:
        return _reflect(y, self.lo, self.hi_y), _reflect(x, self.lo, self.hi_x)

    def clear(self, pos: np.ndarray, y: float, x: float, skip=()) -> bool:
        if pos.shape[0] == 0:
            return True
        d2 = (pos[:, 0] - y) ** 2 + (pos[:, 1] - x) ** 2
        if skip:
            d2[list(skip)] = np.inf
        return bool(np.all(d2 >= self.sep2))


def _rasterize(frame: np.ndarray, ys: np.ndarray, xs: np.ndarray, radius: int, values) -> None:
    if ys.size == 0:
        return
    off = np.arange(-radius - 1, radius + 2)
    oy, ox = np.meshgrid(off, off, indexing="ij")
    oy, ox = oy.ravel(), ox.ravel()
    py = np.floor(ys).astype(np.int64)[:, None] + oy[None, :]
    px = np.floor(xs).astype(np.int64)[:, None] + ox[None, :]
    inside = (py - ys[:, None]) ** 2 + (px - xs[:, None]) ** 2 <= radius * radius
    vals = np.broadcast_to(np.asarray(values)[:, None], py.shape)
    frame[py[inside], px[inside]] = vals[inside]


def simulate(params: SimParams, kind: str = "binary") -> tuple[MaskVideo, GroundTruth]:
    """Run one simulation.

    Args:
        params: simulation parameters including the seed.
        kind: ``"binary"`` for 0/1 masks, ``"labels"`` to paint each cell
            with ``id + 1``.

    Raises:
        ValueError: if the initial cells cannot be placed without overlap.
    """
    p = params
    if kind not in ("binary", "labels"):
        raise ValueError("kind must be 'binary' or 'labels'")
    if p.initial_count and (p.height < 2 * p.radius + 1 or p.width < 2 * p.radius + 1):
        raise ValueError("field is smaller than one nucleus")
    rng = np.random.default_rng(p.seed)
    field = _Field(p)

    ids: list[int] = []
    pos = np.empty((0, 2))
    for _ in range(p.initial_count):
        for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
            y = rng.uniform(field.lo, field.hi_y) if field.hi_y > field.lo else field.lo
            x = rng.uniform(field.lo, field.hi_x) if field.hi_x > field.lo else field.lo
            if field.clear(pos, y, x):
                break
        else:
            raise ValueError(
                f"could not place {p.initial_count} non-overlapping nuclei of radius "
                f"{p.radius} in a {p.height}x{p.width} field"
            )
        ids.append(len(ids))
        pos = np.vstack((pos, [[y, x]]))

    parent: dict[int, Optional[int]] = {i: None for i in ids}
    start: dict[int, int] = {i: 0 for i in ids}
    end: dict[int, int] = {}
    fate: dict[int, str] = {}
    traj: dict[int, list] = {i: [] for i in ids}
    next_id = len(ids)

    dtype = np.uint8 if kind == "binary" else np.uint16
    video = np.zeros((p.frames, p.height, p.width), dtype=dtype)
    counts, births, deaths = [], [], []

    def record(t):
        for cid, (y, x) in zip(ids, pos):
            traj[cid].append((t, float(y), float(x)))
        values = 1 if kind == "binary" else np.asarray(ids) + 1
        _rasterize(video[t], pos[:, 0], pos[:, 1], p.radius, np.broadcast_to(values, (len(ids),)))
        counts.append(len(ids))

    record(0)
    for t in range(p.frames - 1):
        died = rng.random(len(ids)) < p.death_prob
        for cid in np.asarray(ids)[died].tolist():
            end[cid], fate[cid] = t, "died"
        ids = [c for c, d in zip(ids, died) if not d]
        pos = pos[~died]
        n_div = 0
        new_ids: list[int] = []
        new_pos: list[tuple[float, float]] = []
        for k in range(len(ids)):
            y, x = pos[k]
            divides = rng.random() < p.division_prob
            if divides:
                angle = rng.uniform(0.0, np.pi)
                dy = (p.radius + 1) * np.sin(angle)
                dx = (p.radius + 1) * np.cos(angle)
                a = field.inside(y + dy, x + dx)
                b = field.inside(y - dy, x - dx)
                others = np.vstack((pos, np.asarray(new_pos).reshape(-1, 2)))
                ok = (
                    (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 >= field.sep2
                    and field.clear(others, *a, skip=(k,))
                    and field.clear(others, *b, skip=(k,))
                )
                if ok:
                    cid = ids[k]
                    end[cid], fate[cid] = t, "divided"
                    for d in (a, b):
                        parent[next_id], start[next_id] = cid, t + 1
                        traj[next_id] = []
                        new_ids.append(next_id)
                        new_pos.append(d)
                        next_id += 1
                    ids[k] = -1
                    pos[k] = np.inf  # vacated
                    n_div += 1
                    continue
            if p.motion_std > 0:
                others = np.vstack((pos, np.asarray(new_pos).reshape(-1, 2)))
                for _attempt in range(MAX_MOVE_ATTEMPTS):
                    step = rng.normal(0.0, p.motion_std, 2)
                    ny, nx = field.inside(y + step[0], x + step[1])
                    if field.clear(others, ny, nx, skip=(k,)):
                        pos[k] = (ny, nx)
                        break
        keep = [k for k, c in enumerate(ids) if c >= 0]
        ids = [ids[k] for k in keep] + new_ids
        pos = np.vstack((pos[keep], np.asarray(new_pos).reshape(-1, 2)))
        births.append(n_div)
        deaths.append(int(died.sum()))
        record(t + 1)

    last = p.frames - 1
    for cid in ids:
        end[cid], fate[cid] = last, "alive"
    cells = tuple(
        CellRecord(cid, parent[cid], start[cid], end[cid], fate[cid], tuple(traj[cid]))
        for cid in sorted(traj)
    )
    gt = GroundTruth(tuple(counts), tuple(births), tuple(deaths), cells, params)
    video.flags.writeable = False
    return MaskVideo(video, kind=kind), gt


def ground_truth_to_dict(gt: GroundTruth) -> dict:
    return {
        "params": asdict(gt.params) if gt.params else None,
        "counts": list(gt.counts),
        "births": list(gt.births),
        "deaths": list(gt.deaths),
        "cells": [
            {
                "id": c.id,
                "parent": c.parent,
                "start": c.start,
                "end": c.end,
                "fate": c.fate,
                "trajectory": [list(o) for o in c.trajectory],
            }
            for c in gt.cells
        ],
    }


def ground_truth_from_dict(data: dict) -> GroundTruth:
    cells = tuple(
        CellRecord(
            c["id"], c["parent"], c["start"], c["end"], c["fate"],
            tuple((int(f), float(y), float(x)) for f, y, x in c["trajectory"]),
        )
        for c in data["cells"]
    )
    params = SimParams(**data["params"]) if data.get("params") else None
    return GroundTruth(tuple(data["counts"]), tuple(data["births"]), tuple(data["deaths"]), cells, params)


def export_ground_truth(gt: GroundTruth, path) -> None:
    Path(path).write_text(json.dumps(ground_truth_to_dict(gt), indent=1) + "\n")


def load_ground_truth(path) -> GroundTruth:
    return ground_truth_from_dict(json.loads(Path(path).read_text()))
