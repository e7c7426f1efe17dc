import numpy as np
import pytest
from scipy.stats import qmc

from engine.errors import DegenerateCell, NonConvexDomain
from engine.geom2d import (
    BOUNDARY_LABEL,
    ConvexPolygon,
    HalfPlane,
    clip_halfplane,
    polygon_moments,
    regular_polygon,
    square,
)


def random_convex_polygon(rng, k=8):
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=k))
    radii = rng.uniform(0.5, 1.5)
    points = np.column_stack([np.cos(angles), np.sin(angles)]) * radii
    return ConvexPolygon.from_points(points + rng.uniform(-1.0, 1.0, size=2))


def test_clip_axis_aligned_cut(unit_square):
    half = clip_halfplane(unit_square, HalfPlane((1.0, 0.0), 0.5))
    assert half.area == pytest.approx(0.5)
    assert half.bounding_box == pytest.approx((0.0, 0.0, 0.5, 1.0))


def test_clip_keeps_polygon_inside_halfplane(unit_square):
    same = clip_halfplane(unit_square, HalfPlane((1.0, 0.0), 10.0))
    np.testing.assert_array_equal(same.vertices, unit_square.vertices)


def test_clip_diagonal_cut_gives_triangle(unit_square):
    triangle = clip_halfplane(unit_square, HalfPlane.from_vector((1.0, 1.0), 0.5))
    assert len(triangle) == 3
    assert triangle.area == pytest.approx(0.125, rel=1e-12)
    expected = {(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)}
    got = {tuple(np.round(v, 12)) for v in triangle.vertices}
    assert got == expected


def test_clip_labels_cut_edge(unit_square):
    half = clip_halfplane(unit_square, HalfPlane((1.0, 0.0), 0.5, label=7))
    assert list(half.labels).count(7) == 1
    assert np.sum(half.labels == BOUNDARY_LABEL) == 3
    cut = half.edge_lengths()[half.labels == 7]
    assert cut == pytest.approx([1.0])


def test_clip_empty_input_and_output(unit_square):
    assert clip_halfplane(ConvexPolygon.empty(), HalfPlane((1.0, 0.0), 0.5)).is_empty
    assert clip_halfplane(unit_square, HalfPlane((1.0, 0.0), -1.0)).is_empty


def test_clip_is_idempotent(rng):
    for _ in range(20):
        poly = random_convex_polygon(rng)
        h = HalfPlane.from_vector(rng.normal(size=2), rng.normal())
        once = clip_halfplane(poly, h)
        twice = clip_halfplane(once, h)
        assert twice.area == pytest.approx(once.area, rel=1e-12, abs=1e-15)
        for v in twice.vertices:
            assert np.linalg.norm(once.vertices - v, axis=1).min() < 1e-12


def test_clip_and_complement_partition_area(rng):
    for _ in range(20):
        poly = random_convex_polygon(rng)
        h = HalfPlane.from_vector(rng.normal(size=2), rng.normal() * 0.3)
        total = clip_halfplane(poly, h).area + clip_halfplane(poly, h.complement()).area
        assert total == pytest.approx(poly.area, rel=1e-10)


def test_moments_of_unit_square(unit_square):
    moments = polygon_moments(unit_square, (0.5, 0.5))
    assert moments.area == pytest.approx(1.0)
    np.testing.assert_allclose(moments.centroid, (0.5, 0.5))
    assert moments.second_moment == pytest.approx(1.0 / 6.0, rel=1e-14)


def test_moments_of_half_rectangle(unit_square):
    rectangle = clip_halfplane(unit_square, HalfPlane((1.0, 0.0), 0.5))
    moments = polygon_moments(rectangle, (0.25, 0.5))
    assert moments.area == pytest.approx(0.5)
    assert moments.second_moment == pytest.approx(0.5 * (0.25 + 1.0) / 12.0, rel=1e-12)


def test_parallel_axis_identity(rng):
    for _ in range(20):
        poly = random_convex_polygon(rng)
        ref = rng.normal(size=2)
        about_ref = polygon_moments(poly, ref)
        about_centroid = polygon_moments(poly, about_ref.centroid)
        shift = about_ref.area * np.sum((ref - about_ref.centroid) ** 2)
        assert about_ref.second_moment == pytest.approx(
            about_centroid.second_moment + shift, rel=1e-10
        )


def test_moments_match_monte_carlo(rng):
    # scrambled Sobol points: the iid standard error bounds the QMC error from above
    for _ in range(20):
        poly = random_convex_polygon(rng)
        xmin, ymin, xmax, ymax = poly.bounding_box
        box_area = (xmax - xmin) * (ymax - ymin)
        unit = qmc.Sobol(d=2, scramble=True, seed=rng).random_base2(m=20)
        samples = qmc.scale(unit, (xmin, ymin), (xmax, ymax))
        inside = poly.contains(samples)
        p = inside.mean()
        area_se = box_area * np.sqrt(p * (1 - p) / len(samples))
        moments = polygon_moments(poly, poly.vertices[0])
        assert abs(moments.area - box_area * p) < 3 * area_se
        centroid_se = samples[inside].std(axis=0) / np.sqrt(inside.sum())
        assert np.all(np.abs(moments.centroid - samples[inside].mean(axis=0)) < 3 * centroid_se)


def test_moments_of_empty_polygon_raise():
    with pytest.raises(DegenerateCell):
        polygon_moments(ConvexPolygon.empty(), (0.0, 0.0))


def test_halfplane_rejects_non_unit_normal():
    with pytest.raises(ValueError):
        HalfPlane((1.0, 1.0), 0.0)


def test_from_points_reorders_clockwise_input():
    poly = ConvexPolygon.from_points([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert poly.area == pytest.approx(1.0)


def test_from_points_rejects_non_convex_loop():
    with pytest.raises(NonConvexDomain):
        ConvexPolygon.from_points([(0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)])


def test_from_points_drops_duplicate_vertices():
    poly = ConvexPolygon.from_points([(0, 0), (1, 0), (1, 0), (1, 1), (0, 1)])
    assert len(poly) == 4


def test_regular_polygon_has_exact_area():
    disk = regular_polygon(256, 1.0)
    assert disk.area == pytest.approx(1.0, rel=1e-13)
    np.testing.assert_allclose(disk.centroid, (0.0, 0.0), atol=1e-14)


def test_square_helpers():
    domain = square(-1.0, 1.0)
    assert domain.area == pytest.approx(4.0)
    assert domain.diameter == pytest.approx(2.0 * np.sqrt(2.0))
    assert domain.inscribed_radius((0.0, 0.0)) == pytest.approx(1.0)


def test_contains_and_project(unit_square):
    inside = unit_square.contains([(0.5, 0.5), (1.5, 0.5), (1.0, 1.0)])
    assert list(inside) == [True, False, True]
    np.testing.assert_allclose(unit_square.project((2.0, 0.5)), (1.0, 0.5))
    np.testing.assert_allclose(unit_square.project((-1.0, -1.0)), (0.0, 0.0))
    np.testing.assert_allclose(unit_square.project((0.3, 0.4)), (0.3, 0.4))
