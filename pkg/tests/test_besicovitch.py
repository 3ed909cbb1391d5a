"""Tests for the rectangle families, 3D boxes and measure estimators."""

import numpy as np
import pytest

from conekit import besicovitch as bs


class TestRectangleFamilies:
    def test_k1_two_rectangles(self):
        fam = bs.build_perron_rectangles(1)
        assert fam.n_rects == 2
        assert bs.translates_disjoint(fam)
        assert fam.total_area() == 1.0

    def test_total_area_is_exactly_one(self):
        for k in range(1, 7):
            fam = bs.build_perron_rectangles(k)
            assert fam.total_area() == 1.0
            translates = fam.translates()
            assert sum(r.length * r.width for r in translates) == 1.0

    def test_directions_distinct_and_unit(self):
        fam = bs.build_perron_rectangles(5)
        dirs = np.array([r.direction for r in fam.rects])
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
        angles = np.arctan2(dirs[:, 0], dirs[:, 1])
        assert np.all(np.diff(np.sort(angles)) > 0)

    def test_family_inside_ball(self):
        fam = bs.build_perron_rectangles(6)
        verts = np.concatenate(
            [r.vertices() for r in fam.rects]
            + [r.vertices() for r in fam.translates()]
        )
        assert np.max(np.linalg.norm(verts, axis=1)) <= 10.0

    def test_union_shrinks_from_k3_to_k6(self):
        m3, e3 = bs.union_measure(bs.build_perron_rectangles(3), 2**-12)
        m6, e6 = bs.union_measure(bs.build_perron_rectangles(6), 2**-12)
        assert m6 + e6 < m3 - e3

    def test_deterministic_construction(self):
        a = bs.build_perron_rectangles(4)
        b = bs.build_perron_rectangles(4)
        for ra, rb in zip(a.rects, b.rects):
            assert np.array_equal(ra.center, rb.center)
            assert np.array_equal(ra.direction, rb.direction)

    def test_invalid_level_rejected(self):
        with pytest.raises(ValueError):
            bs.build_perron_rectangles(0)
        with pytest.raises(ValueError):
            bs.build_perron_rectangles(13)


class TestIntersectionPredicates:
    def test_identical_rectangles_overlap(self):
        r = bs.Rect2(center=[0.0, 0.0], direction=[0.0, 1.0], length=1.0, width=0.25)
        assert bs.rects_intersect(r, r)

    def test_separated_rectangles_do_not(self):
        r1 = bs.Rect2(center=[0.0, 0.0], direction=[0.0, 1.0], length=1.0, width=0.25)
        r2 = bs.Rect2(center=[1.0, 0.0], direction=[0.0, 1.0], length=1.0, width=0.25)
        assert not bs.rects_intersect(r1, r2)

    def test_touching_edges_count_as_disjoint_interiors(self):
        r1 = bs.Rect2(center=[0.0, 0.0], direction=[0.0, 1.0], length=1.0, width=0.5)
        r2 = bs.Rect2(center=[0.5, 0.0], direction=[0.0, 1.0], length=1.0, width=0.5)
        assert not bs.rects_intersect(r1, r2)

    def test_rotated_pair_against_area_oracle(self):
        # Monte-Carlo area of the intersection as an independent oracle.
        rng = np.random.default_rng(61)
        for _ in range(40):
            c1, c2 = rng.uniform(-0.5, 0.5, size=(2, 2))
            t1, t2 = rng.uniform(0, np.pi, size=2)
            r1 = bs.Rect2(center=c1, direction=[np.sin(t1), np.cos(t1)],
                          length=1.0, width=0.3)
            r2 = bs.Rect2(center=c2, direction=[np.sin(t2), np.cos(t2)],
                          length=1.0, width=0.3)
            pts = rng.uniform(-1.5, 1.5, size=(4000, 2))
            in1 = r1.contains(pts) if hasattr(r1, "contains") else None
            d1 = pts - r1.center
            in1 = (np.abs(d1 @ r1.direction) < r1.length / 2) & (
                np.abs(d1 @ r1.normal) < r1.width / 2
            )
            d2 = pts - r2.center
            in2 = (np.abs(d2 @ r2.direction) < r2.length / 2) & (
                np.abs(d2 @ r2.normal) < r2.width / 2
            )
            frac = np.mean(in1 & in2)
            if frac > 0.002:
                assert bs.rects_intersect(r1, r2)
            if not bs.rects_intersect(r1, r2):
                assert frac == 0.0

    def test_k8_translates_disjoint(self):
        fam = bs.build_perron_rectangles(8)
        assert bs.translates_disjoint(fam)

    def test_boxes_sat_agrees_with_vertex_oracle(self):
        rng = np.random.default_rng(67)
        fam = bs.build_perron_rectangles(2)
        boxes = bs.build_boxes(fam)
        b = boxes.boxes_f[0]
        # a displaced copy overlaps until the displacement passes the extent
        for s in np.linspace(0.0, 3.0, 13)[1:]:
            shifted = b.translated(s * b.axes[0])
            expected = s < 2 * b.half_extents[0]
            assert bs.boxes_intersect(b, shifted) == expected


class TestUnionMeasure:
    def test_unit_square(self):
        sq = [bs.Rect2(center=[0.5, 0.5], direction=[0.0, 1.0],
                       length=1.0, width=1.0)]
        m, err = bs.union_measure(sq, 2**-10)
        assert err == pytest.approx(2**-7)
        assert abs(m - 1.0) <= err

    def test_disjoint_translates_measure_one(self):
        fam = bs.build_perron_rectangles(2)
        m, err = bs.union_measure(list(fam.translates()), 2**-12)
        assert abs(m - 1.0) <= err

    def test_k8_union_small(self):
        fam = bs.build_perron_rectangles(8)
        m, err = bs.union_measure(fam, 2**-17)
        assert m + err < 0.35

    def test_monte_carlo_cross_check(self):
        for k in (3, 6):
            fam = bs.build_perron_rectangles(k)
            m, err = bs.union_measure(fam, 2**-13)
            est, stderr = bs.mc_union_measure(fam, 200_000, seed=k)
            assert abs(m - est) <= err + 3 * stderr

    def test_two_overlapping_squares_oracle(self):
        # two unit squares overlapping in a 0.5 x 1 strip: union = 1.5
        a = bs.Rect2(center=[0.5, 0.5], direction=[0.0, 1.0], length=1.0, width=1.0)
        b = bs.Rect2(center=[1.0, 0.5], direction=[0.0, 1.0], length=1.0, width=1.0)
        m, err = bs.union_measure([a, b], 2**-11)
        assert abs(m - 1.5) <= err

    def test_invalid_resolution(self):
        fam = bs.build_perron_rectangles(1)
        with pytest.raises(ValueError):
            bs.union_measure(fam, 0.0)


@pytest.fixture(scope="module")
def boxes_k3():
    return bs.build_boxes(bs.build_perron_rectangles(3))


class TestBoxFamilies:

    def test_volumes(self, boxes_k3):
        n = boxes_k3.n_boxes
        for e_box, f_box in zip(boxes_k3.boxes_e, boxes_k3.boxes_f):
            assert e_box.volume() == pytest.approx(1.0 / n, abs=1e-15)
            assert f_box.volume() == pytest.approx(1.0 / (2 * n), abs=1e-15)
        total = sum(b.volume() for b in boxes_k3.boxes_f_shifted)
        assert total == pytest.approx(0.5, abs=1e-12)

    def test_axes_orthonormal(self, boxes_k3):
        for f_box in boxes_k3.boxes_f:
            gram = f_box.axes @ f_box.axes.T
            assert np.max(np.abs(gram - np.eye(3))) <= 1e-12

    def test_f_side_along_light_ray(self, boxes_k3):
        for f_box, ntilde in zip(boxes_k3.boxes_f, boxes_k3.normals):
            unit = ntilde / np.sqrt(2.0)
            assert abs(abs(f_box.axes[0] @ unit) - 1.0) <= 1e-12

    def test_f_inside_e(self, boxes_k3):
        for e_box, f_box in zip(boxes_k3.boxes_e, boxes_k3.boxes_f):
            assert np.all(e_box.contains(f_box.vertices(), slack=1e-12))

    def test_geometry_check_passes(self, boxes_k3):
        report = bs.box_geometry_check(boxes_k3)
        assert report["all_passed"], report

    def test_geometry_check_k1_and_k8(self):
        for k in (1, 8):
            boxes = bs.build_boxes(bs.build_perron_rectangles(k))
            report = bs.box_geometry_check(boxes)
            assert report["all_passed"], (k, report)
            assert report["max_vertex_norm"] <= 20.0

    def test_box_disjointness_matches_rect_disjointness(self, boxes_k3):
        fam = bs.build_perron_rectangles(3)
        assert bs.translates_disjoint(fam) == bs.translates_disjoint(boxes_k3)


class TestSerialization:
    def test_json_round_trip(self):
        fam = bs.build_perron_rectangles(3)
        text = bs.family_to_json(fam)
        back = bs.family_from_json(text)
        assert back.k == fam.k and back.n_rects == fam.n_rects
        for ra, rb in zip(fam.rects, back.rects):
            assert np.array_equal(ra.center, rb.center)
            assert np.array_equal(ra.direction, rb.direction)

    def test_json_is_deterministic(self):
        fam = bs.build_perron_rectangles(2)
        assert bs.family_to_json(fam) == bs.family_to_json(fam)

    def test_svg_smoke(self):
        fam = bs.build_perron_rectangles(2)
        svg = bs.family_to_svg(fam)
        assert svg.startswith("<svg") and svg.count("<polygon") == 8


class TestBoxSerialization:
    def test_box_family_json_round_trip(self):
        boxes = bs.build_boxes(bs.build_perron_rectangles(2))
        text = bs.boxes_to_json(boxes)
        back = bs.boxes_from_json(text)
        assert back.k == boxes.k and back.n_boxes == boxes.n_boxes
        for a, b in zip(boxes.boxes_f, back.boxes_f):
            assert np.array_equal(a.center, b.center)
            assert np.array_equal(a.axes, b.axes)
            assert np.array_equal(a.half_extents, b.half_extents)
        assert np.array_equal(boxes.normals, back.normals)
        report = bs.box_geometry_check(back)
        assert report["all_passed"]

    def test_union_measure_accepts_box_family(self):
        family = bs.build_perron_rectangles(3)
        boxes = bs.build_boxes(family)
        m_rects, err_rects = bs.union_measure(family, 2**-12)
        m_boxes, err_boxes = bs.union_measure(boxes, 2**-12)
        assert m_boxes == pytest.approx(m_rects, abs=err_rects + err_boxes)
