import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from celldyn.core import MaskVideo
from celldyn.morphology import (
    SINGLE_PIXEL_PERIMETER,
    label_components,
    measure_labels,
    morphology_metrics,
    region_descriptors,
)
from celldyn.simulator import SimParams, simulate
from oracles import corner_hull_area, flood_fill_labels, moment_eccentricity, moore_perimeter

small_masks = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.integers(0, 1))


def one(mask):
    labels, n = label_components(np.asarray(mask, np.uint8))
    assert n == 1
    return region_descriptors(labels)[0]


def test_empty_frame():
    labels, n = label_components(np.zeros((4, 5), np.uint8))
    assert n == 0 and not labels.any()
    assert region_descriptors(labels) == []


def test_diagonal_pixels_join():
    m = np.array([[1, 0], [0, 1]], np.uint8)
    labels, n = label_components(m)
    assert n == 1
    assert np.array_equal(labels, flood_fill_labels(m)[0])


def test_separated_pixels():
    m = np.array([[1], [0], [1]], np.uint8)
    labels, n = label_components(m)
    assert n == 2
    assert labels[0, 0] == 1 and labels[2, 0] == 2


def test_random_masks_match_flood_fill():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m = (rng.random((16, 16)) < rng.uniform(0.2, 0.7)).astype(np.uint8)
        labels, n = label_components(m)
        ref, k = flood_fill_labels(m)
        assert n == k
        assert np.array_equal(labels, ref)


def test_single_pixel():
    d = one([[1]])
    assert (d.area, d.eccentricity, d.solidity) == (1, 0.0, 1.0)
    assert d.perimeter == SINGLE_PIXEL_PERIMETER > 0


@pytest.mark.parametrize("k", [1, 2, 5, 20])
def test_squares(k):
    d = one(np.ones((k, k)))
    assert d.area == k * k
    assert d.eccentricity <= 1e-9
    assert abs(d.solidity - 1.0) <= 1e-9
    if k > 1:
        assert d.perimeter == pytest.approx(4 * (k - 1))


def test_horizontal_line():
    d = one(np.ones((1, 5)))
    assert d.eccentricity == pytest.approx(1.0)
    assert d.solidity == 1.0
    # the contour walks right 4 steps and back 4 steps
    assert d.perimeter == pytest.approx(8.0)
    assert d.perimeter == pytest.approx(moore_perimeter(np.ones((1, 5))))


def test_diagonal_line():
    m = np.eye(4, dtype=np.uint8)
    d = one(m)
    assert d.perimeter == pytest.approx(6 * math.sqrt(2))
    assert d.eccentricity == pytest.approx(1.0)
    assert d.solidity == pytest.approx(4 / corner_hull_area(m))


def test_ring_perimeter_ignores_hole():
    m = np.ones((5, 5), np.uint8)
    m[2, 2] = 0
    d = one(m)
    assert d.area == 24
    assert d.perimeter == pytest.approx(16.0)
    assert d.solidity == pytest.approx(24 / 25)


def test_l_shape():
    m = np.array([[1, 0], [1, 1]], np.uint8)
    d = one(m)
    assert d.solidity == pytest.approx(3 / 3.5)
    assert d.perimeter == pytest.approx(moore_perimeter(m))


@given(small_masks)
@settings(max_examples=300, deadline=None)
def test_descriptors_match_oracles(m):
    labels, n = label_components(m)
    regions = region_descriptors(labels)
    assert len(regions) == n
    for d in regions:
        comp = labels == d.label
        assert d.area == comp.sum()
        assert d.perimeter == pytest.approx(max(moore_perimeter(comp), SINGLE_PIXEL_PERIMETER), abs=1e-9)
        assert d.solidity == pytest.approx(d.area / corner_hull_area(comp), abs=1e-12)
        assert d.eccentricity == pytest.approx(moment_eccentricity(comp), abs=1e-6)
        ys, xs = np.nonzero(comp)
        assert d.centroid.y == pytest.approx(ys.mean())
        assert d.centroid.x == pytest.approx(xs.mean())


@given(small_masks)
@settings(max_examples=200, deadline=None)
def test_descriptor_ranges(m):
    for d in region_descriptors(label_components(m)[0]):
        assert d.area >= 1
        assert 0.0 <= d.eccentricity <= 1.0
        assert 0.0 < d.solidity <= 1.0 + 1e-12
        assert d.perimeter > 0


@given(small_masks)
@settings(max_examples=100, deadline=None)
def test_area_sum_is_foreground(m):
    regions = measure_labels(label_components(m)[0])
    assert int(regions.area.sum()) == int(m.sum())


def test_labeled_input_keeps_ids():
    frame = np.zeros((6, 6), np.uint16)
    frame[0:2, 0:2] = 40
    frame[4:6, 3:6] = 7
    regions = region_descriptors(frame)
    assert [d.label for d in regions] == [7, 40]
    assert [d.area for d in regions] == [6, 4]


def test_video_repetition():
    frames = np.zeros((3, 4, 4), np.uint8)
    frames[:, 1:3, 1:3] = 1
    ms = morphology_metrics(MaskVideo(frames))
    assert len(ms) == 3
    assert [d.area for d in ms] == [4, 4, 4]
    assert [d.frame for d in ms] == [0, 1, 2]


def test_empty_video():
    assert len(morphology_metrics(MaskVideo(np.zeros((3, 4, 4), np.uint8)))) == 0


@pytest.mark.parametrize("radius", [3, 5, 8])
def test_simulated_disk_area(radius):
    v, gt = simulate(SimParams(height=200, width=200, frames=3, initial_count=12, radius=radius, seed=radius))
    ms = morphology_metrics(v)
    assert len(ms) == sum(gt.counts)
    areas = ms.column("area")
    assert abs(areas.mean() - math.pi * radius**2) <= 0.1 * math.pi * radius**2
    for t in range(v.n_frames):
        assert int(ms.frames[t].area.sum()) == int(v.frames[t].sum())
