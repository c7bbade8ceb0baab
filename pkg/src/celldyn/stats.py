"""Exact one-dimensional Wasserstein-1 distance and real-vs-generated reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .tables import csv_text, json_text, markdown_text, to_float

METRIC_NAMES = {
    "area": "Area",
    "eccentricity": "Eccentricity",
    "solidity": "Solidity",
    "perimeter": "Perimeter",
    "initial_count": "Initial Cell Count",
    "final_count": "Final Cell Count",
    "growth_ratio": "Growth Ratio",
    "growth_absolute": "Growth (Absolute)",
    "division_count": "Division Events",
    "avg_division_interval": "Avg Division Interval",
    "total_distance": "Total Distance",
    "net_displacement": "Net Displacement",
    "avg_speed": "Average Speed",
    "directness": "Directness",
}

CONDITION_ORDER = ("HIGH", "LOW", "MED")
POOLING_MODES = ("pooled", "video-mean")


def _samples(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("empirical distribution needs at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return arr


def wasserstein1(f, g) -> float:
    """Exact W1 between two empirical distributions.

    Integrates ``|F^-1(u) - G^-1(u)|`` over ``u`` in [0, 1]. Both quantile
    functions are step functions with jumps at multiples of 1/n and 1/m, so
    working in units of 1/(n*m) makes every breakpoint an integer and the
    integral a finite sum.
    """
    f = np.sort(_samples(f))
    g = np.sort(_samples(g))
    n, m = f.size, g.size
    bp = np.union1d(np.arange(n + 1, dtype=np.int64) * m, np.arange(m + 1, dtype=np.int64) * n)
    lo, hi = bp[:-1], bp[1:]
    fi = (hi - 1) // m
    gi = (hi - 1) // n
    return float(np.sum(np.abs(f[fi] - g[gi]) * (hi - lo)) / (n * m))


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    sd: float

    def as_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "sd": self.sd}


def summarize(values) -> Summary:
    """Mean and population standard deviation (divisor n)."""
    arr = _samples(values)
    return Summary(int(arr.size), float(arr.mean()), float(arr.std()))


def _fmt(value: float, digits: int) -> str:
    if value != 0 and abs(value) >= 10 ** digits:
        return f"{value:.0f}"
    return f"{value:.{digits}g}"


def format_mean_sd(summary: Summary) -> str:
    """Render as ``412.6 ± 165``: four significant digits for the mean, three for the SD."""
    return f"{_fmt(summary.mean, 4)} ± {_fmt(summary.sd, 3)}"


@dataclass(frozen=True)
class ReportRow:
    metric: str  # column name in the metric tables
    condition: str
    w1: Optional[float]
    real: Optional[Summary]
    generated: Optional[Summary]
    flag: Optional[str] = None  # set when W1 could not be computed

    @property
    def display_name(self) -> str:
        return METRIC_NAMES.get(self.metric, self.metric)


CSV_COLUMNS = (
    "metric", "column", "condition", "w1",
    "real_n", "real_mean", "real_sd", "gen_n", "gen_mean", "gen_sd", "flag",
)


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    pooling: str = "pooled"
    group_by: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "pooling": self.pooling,
            "group_by": self.group_by,
            "rows": [
                {
                    "metric": r.display_name,
                    "column": r.metric,
                    "condition": r.condition,
                    "w1": r.w1,
                    "real": r.real.as_dict() if r.real else None,
                    "generated": r.generated.as_dict() if r.generated else None,
                    "flag": r.flag,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json_text(self.to_dict())

    def to_csv(self) -> str:
        flat = []
        for r in self.rows:
            flat.append({
                "metric": r.display_name,
                "column": r.metric,
                "condition": r.condition,
                "w1": r.w1,
                "real_n": r.real.n if r.real else None,
                "real_mean": r.real.mean if r.real else None,
                "real_sd": r.real.sd if r.real else None,
                "gen_n": r.generated.n if r.generated else None,
                "gen_mean": r.generated.mean if r.generated else None,
                "gen_sd": r.generated.sd if r.generated else None,
                "flag": r.flag,
            })
        return csv_text(CSV_COLUMNS, flat)

    def to_markdown(self) -> str:
        """W1 laid out metric by condition, followed by per-row summaries."""
        metrics = list(dict.fromkeys(r.metric for r in self.rows))
        conditions = list(dict.fromkeys(r.condition for r in self.rows))
        lookup = {(r.metric, r.condition): r for r in self.rows}
        header = [""]
        values = ["W1"]
        for m in metrics:
            for c in conditions:
                if (m, c) in lookup:
                    r = lookup[(m, c)]
                    header.append(f"{r.display_name} ({c})")
                    values.append("n/a" if r.w1 is None else f"{r.w1:.4g}")
        out = [f"Pooling: {self.pooling}\n", markdown_text(header, [values]), ""]
        detail = []
        for r in self.rows:
            detail.append([
                r.display_name,
                r.condition,
                "n/a" if r.w1 is None else f"{r.w1:.4g}",
                format_mean_sd(r.real) if r.real else "n/a",
                format_mean_sd(r.generated) if r.generated else "n/a",
                str(r.real.n if r.real else 0),
                str(r.generated.n if r.generated else 0),
                r.flag or "",
            ])
        out.append(markdown_text(
            ["Metric", "Condition", "W1", "Real (mean ± SD)", "Generated (mean ± SD)", "n real", "n gen", "Flag"],
            detail,
        ))
        return "\n".join(out)


def _condition_key(c: str):
    return (CONDITION_ORDER.index(c), "") if c in CONDITION_ORDER else (len(CONDITION_ORDER), c)


def _grouped_values(table, metric, group_by, pooling) -> dict[str, list[float]]:
    groups: dict[str, dict] = {}
    for k, row in enumerate(table):
        value = to_float(row.get(metric))
        cond = str(row.get(group_by, "")) if group_by else "ALL"
        if group_by and cond == "":
            continue
        bucket = groups.setdefault(cond, {})
        if value is None or not math.isfinite(value):
            continue
        vid = row.get("video_id", k) if pooling == "video-mean" else k
        bucket.setdefault(vid, []).append(value)
    return {
        cond: [float(np.mean(v)) for v in per_video.values()] if pooling == "video-mean"
        else [x for v in per_video.values() for x in v]
        for cond, per_video in groups.items()
    }


def build_report(
    real: Sequence[Mapping],
    generated: Sequence[Mapping],
    metrics: Sequence[str],
    group_by: Optional[str] = None,
    pooling: str = "pooled",
) -> ComparisonReport:
    """Compare real and generated metric tables, one row per (metric, condition).

    Args:
        real, generated: rows of metric values; each row may carry a
            ``video_id`` and the ``group_by`` condition column.
        metrics: metric columns to compare, in output order.
        group_by: condition column; ``None`` pools everything under ``ALL``.
        pooling: ``"pooled"`` treats every row as a sample, ``"video-mean"``
            first averages rows sharing a ``video_id``.

    A condition with no usable samples on one side yields a flagged row
    without W1.
    """
    if pooling not in POOLING_MODES:
        raise ValueError(f"pooling must be one of {POOLING_MODES}")
    rows = []
    for metric in metrics:
        rg = _grouped_values(real, metric, group_by, pooling)
        gg = _grouped_values(generated, metric, group_by, pooling)
        for cond in sorted(set(rg) | set(gg), key=_condition_key):
            rv, gv = rg.get(cond, []), gg.get(cond, [])
            rs = summarize(rv) if rv else None
            gs = summarize(gv) if gv else None
            if rv and gv:
                rows.append(ReportRow(metric, cond, wasserstein1(rv, gv), rs, gs))
            else:
                flag = "missing-real" if not rv and gv else "missing-generated" if rv else "empty"
                rows.append(ReportRow(metric, cond, None, rs, gs, flag))
    return ComparisonReport(tuple(rows), pooling=pooling, group_by=group_by)
