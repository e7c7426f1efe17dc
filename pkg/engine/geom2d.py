"""
Convex polygon primitives: half-plane clipping and exact polygon moments.

Polygons are counter-clockwise vertex loops stored as (k, 2) float arrays.
Every edge carries an integer label (the label of the edge leaving vertex k);
boundary edges of the physical domain are labelled -1 and edges created by a
clip inherit the label of the clipping half-plane. Laguerre adjacency is read
off these labels.
"""

from dataclasses import dataclass, field
from functools import cached_property
from logging import getLogger
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config import settings
from engine.errors import DegenerateCell, NonConvexDomain

logger = getLogger(__name__)

Point2 = NDArray[np.float64]

BOUNDARY_LABEL = -1


class PolygonMoments(NamedTuple):
    area: float
    centroid: Point2
    second_moment: float


@dataclass(frozen=True, eq=False)
class HalfPlane:
    """The closed half-plane {p : normal . p <= offset}."""

    normal: Point2
    offset: float
    label: int = BOUNDARY_LABEL

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float)
        if abs(np.hypot(normal[0], normal[1]) - 1.0) > 1e-12:
            raise ValueError(f"HalfPlane normal must be a unit vector, got {normal}")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_vector(cls, normal: ArrayLike, offset: float, label: int = BOUNDARY_LABEL):
        """Build {p : normal . p <= offset} from a non-unit normal."""
        normal = np.asarray(normal, dtype=float)
        length = float(np.hypot(normal[0], normal[1]))
        if length == 0.0:
            raise ValueError("HalfPlane normal must be non-zero")
        return cls(normal / length, offset / length, label)

    def signed_distance(self, points: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(points, dtype=float) @ self.normal - self.offset

    def complement(self) -> "HalfPlane":
        return HalfPlane(-self.normal, -self.offset, self.label)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Counter-clockwise convex polygon, possibly empty, with labelled edges."""

    vertices: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 2)))
    labels: NDArray[np.int64] = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @classmethod
    def empty(cls) -> "ConvexPolygon":
        return cls()

    @classmethod
    def from_points(
        cls, points: ArrayLike, labels: Optional[ArrayLike] = None
    ) -> "ConvexPolygon":
        """
        Validate a vertex loop and return it as a counter-clockwise polygon.

        Clockwise input is reversed. Consecutive duplicate vertices are
        dropped.

        Raises:
            NonConvexDomain: if the loop is not convex or has no area.
        """
        vertices = np.asarray(points, dtype=float).reshape(-1, 2)
        if labels is None:
            labels = np.full(len(vertices), BOUNDARY_LABEL, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if len(vertices) < 3:
            raise NonConvexDomain(f"A polygon needs at least 3 vertices, got {len(vertices)}")

        scale = _bbox_diagonal(vertices)
        vertices, labels = _drop_short_edges(vertices, labels, settings.VERTEX_TOL * scale)
        if len(vertices) < 3:
            raise NonConvexDomain("Polygon collapses after removing duplicate vertices")

        if _signed_area(vertices) < 0:
            # labels belong to the edge leaving each vertex, so rotate after reversing
            vertices = vertices[::-1].copy()
            labels = np.roll(labels[::-1], -1).copy()

        edges = np.roll(vertices, -1, axis=0) - vertices
        turns = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
        if np.any(turns < -1e-12 * scale**2) or _signed_area(vertices) <= 0:
            raise NonConvexDomain("Vertex loop is not convex")
        return cls(vertices, labels)

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def area(self) -> float:
        if self.is_empty:
            return 0.0
        return float(_signed_area(self.vertices))

    @cached_property
    def centroid(self) -> Point2:
        return polygon_moments(self, self.vertices[0]).centroid

    @cached_property
    def bounding_box(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @cached_property
    def diameter(self) -> float:
        if self.is_empty:
            return 0.0
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diff**2).sum(axis=-1).max()))

    def edge_lengths(self) -> NDArray[np.float64]:
        return np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)

    def contains(self, points: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        """Vectorised closed-membership test for an (n, 2) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty:
            return np.zeros(len(points), dtype=bool)
        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        rel = points[:, None, :] - self.vertices[None, :, :]
        cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        return np.all(cross >= -tol * lengths[None, :], axis=1)

    def project(self, point: ArrayLike) -> Point2:
        """Nearest point of the closed polygon to `point`."""
        point = np.asarray(point, dtype=float)
        if self.contains(point)[0]:
            return point.copy()
        start = self.vertices
        edges = np.roll(self.vertices, -1, axis=0) - start
        t = np.einsum("ij,ij->i", point - start, edges) / np.einsum("ij,ij->i", edges, edges)
        foot = start + np.clip(t, 0.0, 1.0)[:, None] * edges
        return foot[np.argmin(np.linalg.norm(foot - point, axis=1))]

    def inscribed_radius(self, center: ArrayLike) -> float:
        """Distance from an interior point to the nearest edge line."""
        center = np.asarray(center, dtype=float)
        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        rel = center - self.vertices
        cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
        return float(np.min(cross / np.hypot(edges[:, 0], edges[:, 1])))


def square(a: float, b: float) -> ConvexPolygon:
    """The axis-aligned square [a, b]^2."""
    return ConvexPolygon.from_points([(a, a), (b, a), (b, b), (a, b)])


def regular_polygon(sides: int, area: float, center: ArrayLike = (0.0, 0.0)) -> ConvexPolygon:
    """Regular polygon with the given number of sides and exact area."""
    if sides < 3:
        raise ValueError(f"A regular polygon needs at least 3 sides, got {sides}")
    radius = np.sqrt(2.0 * area / (sides * np.sin(2.0 * np.pi / sides)))
    angles = 2.0 * np.pi * np.arange(sides) / sides
    vertices = np.column_stack([np.cos(angles), np.sin(angles)]) * radius
    return ConvexPolygon.from_points(vertices + np.asarray(center, dtype=float))


def clip_halfplane(
    poly: ConvexPolygon, h: HalfPlane, vertex_tol: Optional[float] = None
) -> ConvexPolygon:
    """
    Intersect a convex polygon with a closed half-plane.

    Crossing points are found by linear interpolation along the crossed
    edges; the new edge on the cut line carries `h.label`.

    Args:
        poly: Convex polygon, possibly empty.
        h: Half-plane to keep.
        vertex_tol: Vertices closer than this are merged. Defaults to
            1e-12 times the bounding-box diagonal of `poly`.

    Returns:
        The clipped polygon (empty if nothing survives).
    """
    if poly.is_empty:
        return poly
    vertices = poly.vertices
    dist = vertices @ h.normal - h.offset
    inside = dist <= 0.0
    if inside.all():
        return poly
    if not inside.any():
        return ConvexPolygon.empty()

    out_v = []
    out_l = []
    k = len(vertices)
    for a in range(k):
        b = a + 1 if a + 1 < k else 0
        if inside[a]:
            out_v.append(vertices[a])
            out_l.append(poly.labels[a])
            if not inside[b]:
                out_v.append(_crossing(vertices[a], vertices[b], dist[a], dist[b]))
                out_l.append(h.label)
        elif inside[b]:
            out_v.append(_crossing(vertices[a], vertices[b], dist[a], dist[b]))
            out_l.append(poly.labels[a])

    new_vertices = np.array(out_v)
    new_labels = np.array(out_l, dtype=np.int64)
    if vertex_tol is None:
        vertex_tol = settings.VERTEX_TOL * _bbox_diagonal(vertices)
    new_vertices, new_labels = _drop_short_edges(new_vertices, new_labels, vertex_tol)
    if len(new_vertices) < 3:
        return ConvexPolygon.empty()
    return ConvexPolygon(new_vertices, new_labels)


def polygon_moments(poly: ConvexPolygon, ref: ArrayLike) -> PolygonMoments:
    """
    Area, centroid and second moment about `ref` of a polygon.

    All three integrals are evaluated exactly edge by edge (Green's theorem)
    in coordinates relative to `ref`.

    Raises:
        DegenerateCell: if the polygon is empty or has no positive area.
    """
    if poly.is_empty:
        raise DegenerateCell("Cannot take moments of an empty polygon")
    ref = np.asarray(ref, dtype=float)
    rel = poly.vertices - ref
    x, y = rel[:, 0], rel[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y

    area = 0.5 * cross.sum()
    if area <= 0.0:
        raise DegenerateCell(f"Polygon has non-positive area {area:.3e}")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    second = (cross * (x * x + x * xn + xn * xn + y * y + y * yn + yn * yn)).sum() / 12.0
    return PolygonMoments(float(area), ref + np.array([cx, cy]), float(second))


def _crossing(p: Point2, q: Point2, dp: float, dq: float) -> Point2:
    t = dp / (dp - dq)
    return p + t * (q - p)


def _signed_area(vertices: NDArray[np.float64]) -> float:
    rel = vertices - vertices[0]
    x, y = rel[:, 0], rel[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _bbox_diagonal(vertices: NDArray[np.float64]) -> float:
    if len(vertices) == 0:
        return 0.0
    return float(np.hypot(*(vertices.max(axis=0) - vertices.min(axis=0))))


def _drop_short_edges(vertices, labels, tol):
    # a zero-length edge k means vertex k duplicates vertex k+1; keep the later one
    if len(vertices) == 0:
        return vertices, labels
    lengths = np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1)
    keep = lengths > tol
    return vertices[keep], labels[keep]
