import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brute import brute_count, random_polyline, supersampled_count
from fracdim.boxcount import (EpsilonLadder, band_verdict, count_boxes, count_table,
                              estimate_box_dim, fit_table, minkowski_band, neighborhood_area,
                              BoxCountTable)
from fracdim.curves import Polyline
from fracdim.errors import (InsufficientResolutionError, PrecisionError, ResourceLimitError,
                            SchemaError)


def segment(p, q, n=2):
    w = np.linspace(0.0, 1.0, n)[:, None]
    return Polyline(np.asarray(p) + w * (np.asarray(q) - np.asarray(p)))


def circle(n=1024, radius=1.0):
    t = np.linspace(0.0, 2 * math.pi, n + 1)
    return Polyline.from_xy(radius * np.cos(t), radius * np.sin(t))


# ladders

def test_ladder_rejects_bad_ratios_and_values():
    with pytest.raises(SchemaError):
        EpsilonLadder((1.0, 0.9), (0.0, 0.0))
    with pytest.raises(SchemaError):
        EpsilonLadder((1.0, 0.2), (0.0, 0.0))
    with pytest.raises(SchemaError):
        EpsilonLadder((1.0, -0.5), (0.0, 0.0))
    with pytest.raises(SchemaError):
        EpsilonLadder((0.5, 1.0), (0.0, 0.0))


def test_dyadic_ladder_anchored_at_bbox_corner():
    c = segment((0.25, -0.5), (1.0, 0.5))
    lad = EpsilonLadder.for_curve(c, 6)
    assert lad.origin == (0.25, -0.5)
    assert lad.eps_values[0] == 1.0
    assert lad.eps_values[-1] == 2.0**-6


# counting

def test_unit_segment_generic_position_covers_five_cells():
    c = segment((0.1, 0.1), (1.1, 0.1))
    assert count_boxes(c, 0.25, origin=(0.0, 0.0)) == 5


def test_unit_segment_endpoints_on_grid_lines_counts_both_sides():
    c = segment((0.0, 0.1), (1.0, 0.1))
    # columns -1..4 meet the closed segment
    assert count_boxes(c, 0.25, origin=(0.0, 0.0)) == 6


def test_segment_on_horizontal_grid_line_doubles_rows():
    c = segment((0.1, 0.0), (1.1, 0.0))
    assert count_boxes(c, 0.25, origin=(0.0, 0.0)) == 10


def test_large_eps_gives_at_most_four_cells():
    c = circle(256, 0.1)
    for eps in (1.0, 3.0, 10.0):
        assert 1 <= count_boxes(c, eps, origin=(0.0, 0.0)) <= 4


def test_circle_matches_supersampled_rasterization():
    c = circle(1024)
    origin = (0.013, 0.029)
    assert count_boxes(c, 0.5, origin) == supersampled_count(c.points, 0.5, origin, 64)


def test_count_independent_of_sampling_density():
    coarse = segment((0.03, 0.07), (0.91, 0.66), 2)
    fine = segment((0.03, 0.07), (0.91, 0.66), 1000)
    for eps in (0.25, 0.1, 0.03):
        assert count_boxes(coarse, eps, (0.0, 0.0)) == count_boxes(fine, eps, (0.0, 0.0))


def test_brute_force_equivalence_small_sample():
    rng = np.random.default_rng(7)
    for trial in range(20):
        pts = random_polyline(rng, 16, dyadic=trial % 2 == 0)
        c = Polyline(pts)
        for eps in (0.5, 0.25, 0.125):
            assert count_boxes(c, eps, (0.0, 0.0)) == brute_count(pts, eps, (0.0, 0.0))


def test_key_path_agrees_with_bitmap_path(monkeypatch):
    import fracdim.boxcount as bc
    c = circle(4096)
    want = count_boxes(c, 1e-3, (0.0, 0.0))
    monkeypatch.setattr(bc, "BITMAP_CELLS", 16)
    assert count_boxes(c, 1e-3, (0.0, 0.0)) == want


def test_precision_floor():
    c = segment((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(PrecisionError):
        count_boxes(c, 1e-14)
    with pytest.raises(SchemaError):
        count_boxes(c, 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 8))
def test_count_monotone_on_nested_dyadic_grids(seed, k):
    c = Polyline(random_polyline(np.random.default_rng(seed), 32))
    fine, coarse = 2.0**-(k + 1), 2.0**-k
    assert count_boxes(c, fine, (0.0, 0.0)) >= count_boxes(c, coarse, (0.0, 0.0))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), power=st.integers(-6, 6), k=st.integers(1, 7))
def test_scaling_covariance(seed, power, k):
    pts = random_polyline(np.random.default_rng(seed), 32)
    lam = 2.0**power
    eps = 2.0**-k
    a = count_boxes(Polyline(pts), eps, (0.0, 0.0))
    b = count_boxes(Polyline(pts * lam), eps * lam, (0.0, 0.0))
    assert a == b


def test_count_table_is_schedule_independent():
    c = circle(2048)
    lad = EpsilonLadder.dyadic(1, 10, (0.0, 0.0))
    assert count_table(c, lad, threads=1) == count_table(c, lad, threads=4)


# neighborhood area

def test_stadium_area_of_unit_segment():
    c = segment((0.2, 0.3), (1.2, 0.3))
    eps = 0.01
    want = 2 * eps + math.pi * eps**2
    assert neighborhood_area(c, eps) == pytest.approx(want, rel=0.02)


def test_micro_segment_area_is_a_disc():
    c = segment((0.0, 0.0), (1e-9, 0.0))
    assert neighborhood_area(c, 0.1, 32) == pytest.approx(math.pi * 0.01, rel=0.02)


def test_annulus_area_of_unit_circle():
    c = circle(4096)
    want = math.pi * (1.1**2 - 0.9**2)
    assert neighborhood_area(c, 0.1) == pytest.approx(want, rel=0.03)


def test_area_error_shrinks_with_resolution():
    c = circle(4096)
    want = math.pi * (1.1**2 - 0.9**2)
    errs = [abs(neighborhood_area(c, 0.1, f) - want) for f in (4, 16, 64)]
    assert errs[2] < errs[0]


def test_area_matches_center_in_disc_brute_force():
    rng = np.random.default_rng(3)
    pts = random_polyline(rng, 12)
    c = Polyline(pts)
    eps, f = 0.2, 8
    h = eps / f
    (x0, y0), (x1, y1) = c.bbox
    ox, oy = x0, y0
    i = np.arange(math.floor((x0 - eps - ox) / h) - 2, math.ceil((x1 + eps - ox) / h) + 2)
    j = np.arange(math.floor((y0 - eps - oy) / h) - 2, math.ceil((y1 + eps - oy) / h) + 2)
    cx, cy = np.meshgrid(ox + (i + 0.5) * h, oy + (j + 0.5) * h, indexing="ij")
    p = np.column_stack([cx.ravel(), cy.ravel()])
    best = np.full(p.shape[0], np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        t = np.clip(((p - a) @ d) / (d @ d), 0.0, 1.0)
        best = np.minimum(best, np.hypot(*(p - (a + t[:, None] * d)).T))
    want = np.count_nonzero(best < eps) * h * h
    assert neighborhood_area(c, eps, f, origin=(ox, oy)) == pytest.approx(want, rel=1e-9)


def test_area_cell_cap():
    c = segment((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(ResourceLimitError):
        neighborhood_area(c, 1e-4, 64, max_cells=1e6)


# fitting

def test_segment_dimension_is_one():
    c = segment((0.1, 0.2), (0.9, 0.7), 4096)
    est = estimate_box_dim(c, EpsilonLadder.dyadic(3, 12, (0.0, 0.0)))
    assert abs(est.dimension - 1.0) <= 0.02
    assert abs(est.raw_slope - 1.0) <= 0.02
    assert 0.9 <= est.raw_slope <= 2.1


def test_grid_shift_stability():
    c = circle(8192, 0.5)
    lad = EpsilonLadder.dyadic(2, 11, (0.0, 0.0))
    e = lad.eps_values[-1]
    shifted = EpsilonLadder(lad.eps_values, (e / 3, e / 7))
    a = estimate_box_dim(c, lad).dimension
    b = estimate_box_dim(c, shifted).dimension
    assert abs(a - b) < 0.02


def test_saturated_rungs_are_refused():
    c = segment((0.0, 0.0), (1.0, 1.0), 5)
    with pytest.raises(InsufficientResolutionError) as info:
        estimate_box_dim(c, EpsilonLadder.dyadic(0, 9, (0.0, 0.0)))
    assert "saturated" in info.value.diagnostics


def test_short_ladder_rejected():
    c = segment((0.0, 0.0), (1.0, 1.0), 50)
    with pytest.raises(SchemaError):
        estimate_box_dim(c, EpsilonLadder.dyadic(0, 4, (0.0, 0.0)))


def test_fit_flags_out_of_range_slope():
    eps = tuple(2.0**-k for k in range(8))
    counts = tuple(int(round(10 * 2 ** (2.5 * k))) for k in range(8))
    est = fit_table(BoxCountTable(eps, counts), [True] * 8)
    assert est.dimension == 2.0
    assert "raw_slope_out_of_range" in est.flags
    assert est.raw_slope == pytest.approx(2.5, abs=1e-3)


def test_fit_prefers_best_r2_window():
    eps = tuple(2.0**-k for k in range(12))
    k = np.arange(12)
    # slope 1.3 on the last 7 rungs, 0.5 before
    ln = (np.where(k >= 5, 1.3 * k, 1.3 * 5 + 0.5 * (k - 5)) + 8.0) * math.log(2)
    counts = tuple(np.exp(ln).round().astype(int).tolist())
    est = fit_table(BoxCountTable(eps, counts), [True] * 12)
    assert est.window[0] >= 4
    assert est.raw_slope == pytest.approx(1.3, abs=0.02)


# Minkowski bands

def test_segment_minkowski_one_content():
    c = segment((0.1, 0.1), (1.1, 0.1))
    lad = EpsilonLadder.dyadic(4, 10, (0.0, 0.0))
    mk = minkowski_band(c, 1.0, lad)
    assert not mk.degenerate_flag
    assert mk.band[0] == pytest.approx(2.0, rel=0.02)
    assert mk.band[1] == pytest.approx(2.0, rel=0.1)


def test_segment_wrong_exponent_is_degenerate():
    c = segment((0.1, 0.1), (1.1, 0.1))
    mk = minkowski_band(c, 1.5, EpsilonLadder.dyadic(4, 10, (0.0, 0.0)))
    assert mk.degenerate_flag


def test_band_verdict_rules():
    eps = np.array([2.0**-k for k in range(10)])
    assert band_verdict(np.ones(10), eps)[0] is False
    assert band_verdict(np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 20.0]), eps)[0] is True
    drift = eps**-0.2
    flag, slope, reasons = band_verdict(drift, eps)
    assert flag and "monotone_drift" in reasons and slope == pytest.approx(-0.2)
    assert band_verdict(np.array([1.0, 0.0] * 5), eps)[0] is True
