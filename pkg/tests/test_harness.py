import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regulus.errors import ParameterError
from regulus.harness import (
    CHECK_IDS,
    CHECKS,
    SCHEMA,
    CheckCase,
    RegularityReport,
    Sampling,
    SurfaceSpec,
    judge,
    midpoint_convexity,
    radius_ratio,
    run_suite,
    verify_case,
    verify_theorem_ratios,
    worker_count,
)
from regulus.radius import RadiusEstimate

FAST = Sampling(rays=12, radial=8)
FLAT = SurfaceSpec("flat")
SPHERE = SurfaceSpec("sphere", (1.0,))


def test_check_table():
    assert CHECK_IDS == ("delta-diam", "eps14", "lemma-curv", "convexity", "prop24", "thm31", "prop36",
                         "thm-ratios", "comparison-laplacian")
    assert all(isinstance(CHECKS[c], str) and CHECKS[c] for c in CHECK_IDS)


@pytest.mark.parametrize("m,b,s,slack,want", [
    ([0.5], [1.0], ["<="], 0.0, "pass"), ([1.0], [1.0], ["<"], 0.0, "fail"),
    ([1.0 + 1e-7], [1.0], ["<="], 1e-6, "pass"), ([0.9], [1.0], [">="], 0.0, "fail"),
    ([math.inf], [0.0], ["finite"], 0.0, "fail"), ([None, 0.1], [0.0, 0.0], [">", ">"], 0.0, "pass"),
    ([math.nan], [1.0], ["<="], 0.0, "fail"),
])
def test_judge(m, b, s, slack, want):
    assert judge(m, b, s, slack) == want


def test_case_serialisation():
    c = CheckCase("thm31", "sphere(1)", (1.0,), (0.0, 0.0), 0.5, 1.2, status="skipped", note="out of hypothesis")
    d = c.as_dict()
    assert d["pass"] is None and d["status"] == "skipped"
    c = CheckCase("prop24", "x", (), (0.0, 0.0), 0.5, 0.1, [math.inf, math.nan], [1.0, 1.0], ["<=", "<="])
    assert c.as_dict()["measured"] == ["inf", None]


def test_delta_diam_flat_example():
    c = verify_case("delta-diam", FLAT, 0.5, delta=1.0, sampling=FAST)
    assert c.status == "pass" and c.measured[0] == pytest.approx(0.5, abs=1e-9)


def test_distortion_check_passes_and_skips_out_of_range():
    c = verify_case("thm31", SPHERE, 0.5, delta=0.3, sampling=FAST)
    assert c.status == "pass"
    assert c.measured[0] <= 0.72
    skipped = verify_case("thm31", SPHERE, 0.5, delta=1.2, sampling=FAST)
    assert skipped.status == "skipped" and skipped.note


def test_certified_perturbed_flat_balls_have_small_curvature():
    c = verify_case("lemma-curv", SurfaceSpec("perturbed-flat", (0.005, 1.0)), 0.5, delta=0.02, sampling=FAST)
    assert c.status == "pass" and c.measured[0] < 0.1


def test_unknown_check():
    with pytest.raises(ParameterError):
        verify_case("thm99", FLAT, 0.5)


def test_midpoint_convexity():
    th = 2 * np.pi * np.arange(64) / 64
    circle = np.stack([np.cos(th), np.sin(th)], 1)
    assert midpoint_convexity(circle) <= 1e-12
    r = 1 + 0.5 * np.cos(5 * th)
    star = np.stack([r * np.cos(th), r * np.sin(th)], 1)
    assert midpoint_convexity(star) > 0.1
    with pytest.raises(ParameterError):
        midpoint_convexity(circle[:2])


@given(st.floats(0.1, 10), st.floats(0.2, 5), st.integers(3, 40))
def test_regular_polygons_are_convex(a, b, n):
    th = 2 * np.pi * np.arange(n) / n
    assert midpoint_convexity(np.stack([a * np.cos(th), b * np.sin(th)], 1)) <= 1e-9 * max(a, b)


def test_ratio_conventions():
    capped = RadiusEstimate(50.0, True, "capped")
    one = RadiusEstimate(1.0, False, "x")
    assert radius_ratio(capped, capped) == 1.0
    assert radius_ratio(capped, one) == "unbounded"
    assert radius_ratio(one, RadiusEstimate(0.5, False, "x")) == 2.0


def test_flat_ratio_report():
    rep = verify_theorem_ratios([FLAT], 0.5, Sampling(rays=8, radial=4))
    assert rep.ratios[0].int_over_ext == 1.0 and rep.ratios[0].ext_over_int == 1.0
    assert rep.min_ratio == 1.0 and not rep.failed
    with pytest.raises(ParameterError):
        verify_theorem_ratios([FLAT], 1.0)


def test_report_formats():
    rep = run_suite("delta-diam", [FLAT, SPHERE], 0.5, FAST)
    assert isinstance(rep, RegularityReport)
    doc = json.loads(rep.to_json())
    assert doc["schema"] == SCHEMA and doc["summary"]["fail"] == 0
    assert [c["surface"] for c in doc["cases"]] == ["flat", "sphere(1)"]
    assert rep.to_json() == run_suite("delta-diam", [FLAT, SPHERE], 0.5, FAST).to_json()
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0][:4] == ["check_id", "surface", "alpha", "delta"] and rows[0][-1] == "pass"
    assert rows[1][0] == "delta-diam" and rows[1][-1] == "true"


def test_suite_rejects_unknown():
    with pytest.raises(ParameterError):
        run_suite("nope", [FLAT])


def test_worker_count(monkeypatch):
    monkeypatch.setenv("REGULUS_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("REGULUS_THREADS", "zero")
    with pytest.raises(ParameterError):
        worker_count()
