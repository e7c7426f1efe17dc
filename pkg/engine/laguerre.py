"""
Laguerre (power) diagrams of a weighted point cloud, clipped to a convex domain.

Cell i is the domain clipped by the power half-planes

    2 x . (z_j - z_i) <= |z_j|^2 - |z_i|^2 + w_i - w_j      for j != i.

Candidate seeds are visited nearest-first through a KD-tree and the scan for
a cell stops at the first seed that provably cannot cut it (security radius).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from logging import getLogger
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import KDTree

from config import settings
from engine.errors import CoincidentSeeds, IndexOutOfRange
from engine.geom2d import ConvexPolygon, HalfPlane, clip_halfplane, polygon_moments

logger = getLogger(__name__)

WeightVector = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """The measure sum_i m_i delta_{z_i}: seeds (N, 2) and positive masses (N,)."""

    seeds: NDArray[np.float64]
    masses: NDArray[np.float64]

    def __post_init__(self):
        seeds = np.array(self.seeds, dtype=float).reshape(-1, 2)
        masses = np.array(self.masses, dtype=float).reshape(-1)
        if len(seeds) < 1:
            raise ValueError("A discrete measure needs at least one seed")
        if len(masses) != len(seeds):
            raise ValueError(f"Got {len(seeds)} seeds but {len(masses)} masses")
        if not np.all(np.isfinite(seeds)):
            raise ValueError("Seed coordinates must be finite")
        if np.any(masses <= 0.0):
            raise ValueError("All masses must be positive")
        seeds.flags.writeable = False
        masses.flags.writeable = False
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "masses", masses)

    @property
    def n(self) -> int:
        return len(self.seeds)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def with_seeds(self, seeds: ArrayLike) -> "DiscreteMeasure":
        return DiscreteMeasure(seeds, self.masses)

    def check_balance(self, domain: ConvexPolygon, rtol: float = 1e-10) -> None:
        """Raise ValueError unless the masses add up to the domain area."""
        if abs(self.total_mass - domain.area) > rtol * domain.area:
            raise ValueError(
                f"Total mass {self.total_mass:.15g} differs from domain area {domain.area:.15g}"
            )


class DualEdge(NamedTuple):
    i: int
    j: int
    interface_length: float
    seed_distance: float


@dataclass(frozen=True, eq=False)
class LaguerreDiagram:
    """
    Cells with their moments and the weighted dual graph.

    Empty cells have an empty polygon, zero area, zero second moment and a
    NaN centroid. Edges are stored once with i < j.
    """

    cells: list
    areas: NDArray[np.float64]
    centroids: NDArray[np.float64]
    second_moments: NDArray[np.float64]
    edges: NDArray[np.int64]
    interface_lengths: NDArray[np.float64]
    seed_distances: NDArray[np.float64]

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def adjacency(self) -> list[DualEdge]:
        return [
            DualEdge(int(i), int(j), float(length), float(dist))
            for (i, j), length, dist in zip(
                self.edges, self.interface_lengths, self.seed_distances
            )
        ]

    @property
    def empty_cells(self) -> NDArray[np.bool_]:
        return self.areas <= 0.0

    @cached_property
    def _interfaces(self) -> dict:
        return {
            (int(i), int(j)): float(length)
            for (i, j), length in zip(self.edges, self.interface_lengths)
        }

    def interface(self, i: int, j: int) -> Optional[float]:
        return cell_boundary_with(self, i, j)


def normalize_weights(w: ArrayLike) -> WeightVector:
    """Shift weights so that the last entry is zero; cells are unchanged."""
    w = np.asarray(w, dtype=float)
    return w - w[-1]


def power_halfplane(z_i, z_j, w_i: float, w_j: float, label: int) -> HalfPlane:
    """Half-plane of points whose power distance to z_i does not exceed that to z_j."""
    normal = z_j - z_i
    offset = float(z_i @ normal) + 0.5 * (float(normal @ normal) + w_i - w_j)
    return HalfPlane.from_vector(normal, offset, label)


def check_distinct(seeds: NDArray[np.float64], tol: float) -> None:
    """
    Raises:
        CoincidentSeeds: if two seeds are closer than `tol`.
    """
    if len(seeds) < 2:
        return
    dist, idx = KDTree(seeds).query(seeds, k=2)
    i = int(np.argmin(dist[:, 1]))
    if dist[i, 1] < tol:
        raise CoincidentSeeds(i, int(idx[i, 1]), float(dist[i, 1]))


def min_separation(seeds: NDArray[np.float64]) -> float:
    """Smallest pairwise seed distance (inf for a single seed)."""
    if len(seeds) < 2:
        return float("inf")
    dist, _ = KDTree(seeds).query(seeds, k=2)
    return float(dist[:, 1].min())


def build_diagram(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    w: ArrayLike,
    workers: Optional[int] = None,
) -> LaguerreDiagram:
    """
    Build the Laguerre diagram of (seeds, w) restricted to `domain`.

    Args:
        domain: Convex physical domain.
        measure: Seeds (only positions are used here).
        w: Weight vector of length N.
        workers: Threads used for the per-cell clipping. Output order does
            not depend on it.

    Raises:
        CoincidentSeeds: if two seeds are closer than 1e-12 * diameter(domain).
    """
    seeds = measure.seeds
    weights = np.asarray(w, dtype=float)
    n = len(seeds)
    if weights.shape != (n,):
        raise ValueError(f"Weight vector has shape {weights.shape}, expected ({n},)")

    scale = domain.diameter
    check_distinct(seeds, settings.COINCIDENT_TOL * scale)
    vertex_tol = settings.VERTEX_TOL * scale
    sliver = settings.SLIVER_AREA_TOL * domain.area

    tree = KDTree(seeds) if n > 1 else None
    w_max = float(weights.max())

    def build(i: int) -> ConvexPolygon:
        return _laguerre_cell(i, domain, seeds, weights, tree, w_max, vertex_tol)

    workers = workers or settings.DIAGRAM_WORKERS
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(build, range(n)))
    else:
        cells = [build(i) for i in range(n)]

    areas = np.zeros(n)
    centroids = np.full((n, 2), np.nan)
    second = np.zeros(n)
    for i, cell in enumerate(cells):
        if cell.is_empty or cell.area < sliver:
            cells[i] = ConvexPolygon.empty()
            continue
        moments = polygon_moments(cell, seeds[i])
        areas[i] = moments.area
        centroids[i] = moments.centroid
        second[i] = moments.second_moment

    edges, lengths, dists = _dual_graph(cells, seeds, settings.INTERFACE_TOL * scale)
    return LaguerreDiagram(cells, areas, centroids, second, edges, lengths, dists)


def cell_boundary_with(diagram: LaguerreDiagram, i: int, j: int) -> Optional[float]:
    """
    Length of the interface between cells i and j, or None if they do not touch.

    Raises:
        IndexOutOfRange: for i == j or an index outside the diagram.
    """
    n = diagram.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"Cell pair ({i}, {j}) outside diagram of {n} cells")
    if i == j:
        raise IndexOutOfRange(f"A cell has no interface with itself (index {i})")
    return diagram._interfaces.get((min(i, j), max(i, j)))


def locate(points: ArrayLike, measure: DiscreteMeasure, w: ArrayLike) -> NDArray[np.int64]:
    """Index of the seed with minimal power distance |x - z_i|^2 - w_i for each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(w, dtype=float)
    out = np.empty(len(points), dtype=np.int64)
    chunk = 4096
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        power = ((block[:, None, :] - measure.seeds[None, :, :]) ** 2).sum(axis=-1) - weights
        out[start : start + chunk] = np.argmin(power, axis=1)
    return out


def _laguerre_cell(i, domain, seeds, weights, tree, w_max, vertex_tol) -> ConvexPolygon:
    z = seeds[i]
    w_i = weights[i]
    cell = domain
    n = len(seeds)
    if n == 1:
        return cell

    k = min(n, settings.NEIGHBOUR_BATCH)
    start = 0
    while True:
        dists, idxs = tree.query(z, k=k)
        for d, j in zip(dists[start:], idxs[start:]):
            if j == i:
                continue
            if cell.is_empty:
                return cell
            radius = float(np.sqrt(((cell.vertices - z) ** 2).sum(axis=1).max()))
            # every farther seed is also certified, the bound grows with d
            if d > radius and (d - radius) ** 2 - w_max >= radius**2 - w_i:
                return cell
            cell = clip_halfplane(
                cell, power_halfplane(z, seeds[j], w_i, weights[j], int(j)), vertex_tol
            )
        if k >= n:
            return cell
        start = k
        k = min(n, 2 * k)


def _dual_graph(cells, seeds, tol):
    sides: dict = {}
    for i, cell in enumerate(cells):
        if cell.is_empty:
            continue
        lengths = cell.edge_lengths()
        for label, length in zip(cell.labels, lengths):
            j = int(label)
            if j < 0 or cells[j].is_empty:
                continue
            per_side = sides.setdefault((min(i, j), max(i, j)), {})
            per_side[i] = per_side.get(i, 0.0) + float(length)

    pairs = []
    lengths = []
    for pair in sorted(sides):
        # both cells see the same segment; average the two measurements
        length = float(np.mean(list(sides[pair].values())))
        if length > tol:
            pairs.append(pair)
            lengths.append(length)

    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    dists = np.linalg.norm(seeds[edges[:, 0]] - seeds[edges[:, 1]], axis=1)
    return edges, np.array(lengths, dtype=float), dists
