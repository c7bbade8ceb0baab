"""Quantify nucleus dynamics in time-lapse segmentation-mask videos."""

__version__ = "0.1.0"

from .conditioning import MlpWeights, embed_phenotype, load_weights, prepend_token, random_weights, save_weights
from .core import Centroid, MaskFormatError, MaskVideo, VideoMetadata, read_mask_video, truncate_video, write_mask_video
from .morphology import RegionDescriptor, label_components, measure_labels, morphology_metrics, region_descriptors
from .movement import MovementMetrics, Track, extract_centroids, link_tracks, movement_metrics
from .phenotype import (
    Label,
    PhenotypeLabels,
    PhenotypeScores,
    ThresholdSet,
    build_prompt,
    compute_thresholds,
    filter_extreme,
    is_extreme,
    label_scores,
    normalize_phenotypes,
)
from .population import PopulationStats, counts_per_frame, population_stats
from .simulator import GroundTruth, SimParams, export_ground_truth, load_ground_truth, simulate
from .stats import ComparisonReport, build_report, format_mean_sd, summarize, wasserstein1

__all__ = [
    "MlpWeights",
    "embed_phenotype",
    "load_weights",
    "prepend_token",
    "random_weights",
    "save_weights",
    "Centroid",
    "MaskFormatError",
    "MaskVideo",
    "VideoMetadata",
    "read_mask_video",
    "truncate_video",
    "write_mask_video",
    "RegionDescriptor",
    "label_components",
    "measure_labels",
    "morphology_metrics",
    "region_descriptors",
    "MovementMetrics",
    "Track",
    "extract_centroids",
    "link_tracks",
    "movement_metrics",
    "Label",
    "PhenotypeLabels",
    "PhenotypeScores",
    "ThresholdSet",
    "build_prompt",
    "compute_thresholds",
    "filter_extreme",
    "is_extreme",
    "label_scores",
    "normalize_phenotypes",
    "PopulationStats",
    "counts_per_frame",
    "population_stats",
    "GroundTruth",
    "SimParams",
    "export_ground_truth",
    "load_ground_truth",
    "simulate",
    "ComparisonReport",
    "build_report",
    "format_mean_sd",
    "summarize",
    "wasserstein1",
]
