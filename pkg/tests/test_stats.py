import json

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from celldyn.stats import Summary, build_report, format_mean_sd, summarize, wasserstein1
from oracles import cdf_w1

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30)


def test_identity_is_zero():
    assert wasserstein1([1.0, 2.0, 7.0], [7.0, 1.0, 2.0]) == 0.0


def test_point_masses():
    assert wasserstein1([3.0], [-1.5]) == 4.5


def test_two_point_example():
    assert wasserstein1([0, 1], [0, 2]) == 0.5


def test_random_pairs_match_cdf_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n, m = rng.integers(1, 40, size=2)
        if n == m:
            m += 1
        f = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), n)
        g = rng.exponential(rng.uniform(0.5, 4), m)
        assert abs(wasserstein1(f, g) - cdf_w1(f, g)) <= 1e-9
        assert wasserstein1(f, g) == pytest.approx(scipy.stats.wasserstein_distance(f, g), abs=1e-9)


@given(samples, samples)
@settings(max_examples=200, deadline=None)
def test_symmetry(f, g):
    assert abs(wasserstein1(f, g) - wasserstein1(g, f)) <= 1e-9


@given(samples, samples, st.floats(0.01, 100))
@settings(max_examples=200, deadline=None)
def test_scale_equivariance(f, g, a):
    lhs = wasserstein1([a * v for v in f], [a * v for v in g])
    assert abs(lhs - a * wasserstein1(f, g)) <= 1e-9 * max(1.0, lhs)


@given(samples, samples, samples)
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(f, g, h):
    assert wasserstein1(f, h) <= wasserstein1(f, g) + wasserstein1(g, h) + 1e-9


@given(samples, st.floats(-100, 100))
@settings(max_examples=100, deadline=None)
def test_shift(f, c):
    assert wasserstein1(f, [v + c for v in f]) == pytest.approx(abs(c), abs=1e-9)


def test_rejects_empty_and_nan():
    with pytest.raises(ValueError):
        wasserstein1([], [1.0])
    with pytest.raises(ValueError):
        wasserstein1([float("nan")], [1.0])


def test_summary_population_sd():
    s = summarize([1.0, 3.0])
    assert (s.n, s.mean, s.sd) == (2, 2.0, 1.0)


@pytest.mark.parametrize(
    "mean, sd, text",
    [(412.6, 165.0, "412.6 ± 165"), (0.958, 0.017, "0.958 ± 0.017"), (2.0, 0.0, "2 ± 0")],
)
def test_format(mean, sd, text):
    assert format_mean_sd(Summary(10, mean, sd)) == text


def rows(values, conds=None, vids=None):
    out = []
    for k, v in enumerate(values):
        r = {"x": v, "video_id": vids[k] if vids else f"v{k}"}
        if conds:
            r["label_migration"] = conds[k]
        out.append(r)
    return out


def test_report_identical_inputs_zero():
    real = rows([1, 2, 3, 4], ["HIGH", "LOW", "HIGH", "MED"])
    rep = build_report(real, real, ["x"], group_by="label_migration")
    assert [r.condition for r in rep.rows] == ["HIGH", "LOW", "MED"]
    assert all(r.w1 == 0.0 for r in rep.rows)


def test_report_ungrouped():
    rep = build_report(rows([0, 1]), rows([0, 2]), ["x"])
    assert len(rep.rows) == 1 and rep.rows[0].condition == "ALL" and rep.rows[0].w1 == 0.5


def test_report_flags_missing_condition():
    real = rows([1, 2], ["HIGH", "LOW"])
    gen = rows([1], ["HIGH"])
    rep = build_report(real, gen, ["x"], group_by="label_migration")
    low = [r for r in rep.rows if r.condition == "LOW"][0]
    assert low.w1 is None and low.flag == "missing-generated"
    assert low.real.n == 1 and low.generated is None


def test_report_skips_blank_values():
    real = rows([1.0, "", None])
    rep = build_report(real, rows([1.0]), ["x"])
    assert rep.rows[0].real.n == 1 and rep.rows[0].w1 == 0.0


def test_video_mean_pooling():
    real = rows([1.0, 3.0, 10.0], vids=["a", "a", "b"])
    gen = rows([2.0, 10.0], vids=["c", "d"])
    assert build_report(real, gen, ["x"], pooling="video-mean").rows[0].w1 == 0.0
    assert build_report(real, gen, ["x"], pooling="pooled").rows[0].w1 > 0.0
    with pytest.raises(ValueError):
        build_report(real, gen, ["x"], pooling="median")


def test_report_renderings():
    real = rows([1, 2, 3], ["HIGH", "LOW", "HIGH"])
    gen = rows([1, 5, 3], ["HIGH", "LOW", "HIGH"])
    rep = build_report(real, gen, ["x"], group_by="label_migration")
    data = json.loads(rep.to_json())
    assert data["pooling"] == "pooled"
    assert set(data["rows"][0]) >= {"metric", "condition", "w1", "real", "generated"}
    assert set(data["rows"][0]["real"]) == {"n", "mean", "sd"}
    csv_lines = rep.to_csv().splitlines()
    assert csv_lines[0].startswith("metric,column,condition,w1")
    assert len(csv_lines) == 3
    md = rep.to_markdown()
    assert "x (HIGH)" in md and "x (LOW)" in md
