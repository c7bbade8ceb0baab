"""Percentile labeling of phenotype scores, extreme filtering and prompts.

Scores cover four axes: initial cell count, proliferation, migration and
cell death. Each axis is labeled LOW below its 10th percentile, HIGH above
its 90th and MED otherwise (values exactly on a threshold are MED).

Captions are assembled from fixed phrase tables in the order count,
proliferation, migration, death, so identical labels always give
byte-identical prompts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

AXES = ("cell_count", "proliferation", "migration", "death")
EXTREME_AXES = ("death", "migration", "proliferation")
LOW_PERCENTILE = 10.0
HIGH_PERCENTILE = 90.0


class Label(str, Enum):
    HIGH = "HIGH"
    LOW = "LOW"
    MED = "MED"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PhenotypeScores:
    cell_count: float
    proliferation: float
    migration: float
    death: float

    def __post_init__(self):
        for axis in AXES:
            v = float(getattr(self, axis))
            if not np.isfinite(v):
                raise ValueError(f"{axis} score must be finite, got {v}")
            object.__setattr__(self, axis, v)

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, a) for a in AXES], dtype=np.float64)


@dataclass(frozen=True)
class PhenotypeLabels:
    cell_count: Label
    proliferation: Label
    migration: Label
    death: Label

    def __post_init__(self):
        for axis in AXES:
            object.__setattr__(self, axis, Label(getattr(self, axis)))

    def as_dict(self) -> dict[str, str]:
        return {a: getattr(self, a).value for a in AXES}


@dataclass(frozen=True)
class ThresholdSet:
    low: Mapping[str, float]
    high: Mapping[str, float]

    def __post_init__(self):
        for axis in AXES:
            if self.low[axis] > self.high[axis]:
                raise ValueError(f"{axis}: low threshold exceeds high threshold")

    def as_dict(self) -> dict:
        return {a: {"p10": float(self.low[a]), "p90": float(self.high[a])} for a in AXES}


def _percentile(values: np.ndarray, q: float) -> float:
    """Linear interpolation between order statistics at rank (n - 1) * q / 100."""
    return float(np.percentile(values, q, method="linear"))


def compute_thresholds(dataset_scores: Sequence[PhenotypeScores]) -> ThresholdSet:
    if len(dataset_scores) < 2:
        raise ValueError("at least two samples are needed to compute percentiles")
    mat = np.array([s.as_vector() for s in dataset_scores])
    low = {a: _percentile(mat[:, i], LOW_PERCENTILE) for i, a in enumerate(AXES)}
    high = {a: _percentile(mat[:, i], HIGH_PERCENTILE) for i, a in enumerate(AXES)}
    return ThresholdSet(low, high)


def _label_value(value: float, low: float, high: float) -> Label:
    if value < low:
        return Label.LOW
    if value > high:
        return Label.HIGH
    return Label.MED


def label_scores(scores: PhenotypeScores, thresholds: ThresholdSet) -> PhenotypeLabels:
    return PhenotypeLabels(**{
        a: _label_value(getattr(scores, a), thresholds.low[a], thresholds.high[a]) for a in AXES
    })


def is_extreme(labels: PhenotypeLabels) -> bool:
    """True when at least two of death, migration and proliferation are HIGH or LOW."""
    return sum(getattr(labels, a) is not Label.MED for a in EXTREME_AXES) >= 2


def filter_extreme(items: Sequence, labels: Sequence[PhenotypeLabels]) -> list:
    return [item for item, lab in zip(items, labels) if is_extreme(lab)]


COUNT_PHRASES = {Label.LOW: "a few cells", Label.MED: "cells", Label.HIGH: "many cells"}
PROLIFERATION_PHRASES = {
    Label.LOW: "rarely divide",
    Label.MED: "divide occasionally",
    Label.HIGH: "undergo frequent divisions",
}
MIGRATION_PHRASES = {
    Label.LOW: "barely move",
    Label.MED: "move at a moderate pace",
    Label.HIGH: "move rapidly",
}
DEATH_PHRASES = {
    Label.LOW: "rarely disappear",
    Label.MED: "occasionally disappear due to cell death",
    Label.HIGH: "frequently disappear due to cell death",
}
BASE_PROMPT = "Time-lapse microscopy video of cells"


def build_prompt(labels: PhenotypeLabels) -> str:
    """Caption describing the labeled behaviours in a fixed clause order."""
    return (
        f"Time-lapse microscopy video of {COUNT_PHRASES[labels.cell_count]}. "
        f"The cells {PROLIFERATION_PHRASES[labels.proliferation]}, "
        f"{MIGRATION_PHRASES[labels.migration]}, "
        f"and {DEATH_PHRASES[labels.death]}."
    )


def min_max_ranges(dataset_scores: Sequence[PhenotypeScores]) -> dict[str, dict[str, float]]:
    """Per-axis ``{"min", "max"}`` of a dataset, the normalization state to persist."""
    if not dataset_scores:
        raise ValueError("need at least one sample")
    mat = np.array([s.as_vector() for s in dataset_scores])
    return {a: {"min": float(mat[:, i].min()), "max": float(mat[:, i].max())} for i, a in enumerate(AXES)}


def normalize_phenotypes(scores: PhenotypeScores, dataset_min_max: Mapping[str, Mapping[str, float]]) -> np.ndarray:
    """Min-max scale each axis to [0, 1]; a degenerate axis (min == max) maps to 0.5."""
    out = np.empty(len(AXES))
    for i, a in enumerate(AXES):
        lo = float(dataset_min_max[a]["min"])
        hi = float(dataset_min_max[a]["max"])
        v = getattr(scores, a)
        out[i] = 0.5 if not hi > lo else min(1.0, max(0.0, (v - lo) / (hi - lo)))
    return out
