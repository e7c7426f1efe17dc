"""
Quantization of a density into a discrete measure.

Lloyd's algorithm moves every seed to the density-weighted centroid of its
Voronoi cell (clipped to the support). Cell integrals are exact for the
uniform density and use a degree-6 symmetric triangle rule otherwise.
"""

from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator

from config import settings
from engine.errors import EmptyCell
from engine.geom2d import ConvexPolygon, Point2, polygon_moments
from engine.laguerre import DiscreteMeasure, build_diagram

logger = getLogger(__name__)

UNIFORM = "uniform"
GAUSSIAN = "gaussian"
GRID = "grid"

# Dunavant's 12-point rule, exact for polynomials of degree 6:
# (weight, barycentric orbit representative, orbit size)
_RULE_ORBITS = [
    (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
    (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
    (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
]


def _expand_rule():
    weights = []
    points = []
    for weight, (a, b, c) in _RULE_ORBITS:
        orbit = {(a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)}
        for bary in sorted(orbit):
            weights.append(weight)
            points.append(bary)
    return np.array(weights), np.array(points)


RULE_WEIGHTS, RULE_POINTS = _expand_rule()


class CellMass(NamedTuple):
    mass: float
    weighted_centroid: Point2


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """
    A non-negative density restricted to a convex support.

    gaussian: rho(x) = exp(-|x - center|^2 / (2 sigma^2)), unnormalised.
    grid: bilinear interpolation of lattice samples, zero off the lattice.
    """

    kind: str
    support: ConvexPolygon
    center: Point2 = field(default_factory=lambda: np.zeros(2))
    sigma: float = 1.0
    grid: Optional[RegularGridInterpolator] = None

    def __post_init__(self):
        if self.kind not in (UNIFORM, GAUSSIAN, GRID):
            raise ValueError(f"Unknown density kind '{self.kind}'")
        if self.kind == GAUSSIAN and self.sigma <= 0:
            raise ValueError(f"Gaussian sigma must be positive, got {self.sigma}")
        if self.kind == GRID and self.grid is None:
            raise ValueError("A grid density needs an interpolator")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @classmethod
    def uniform(cls, support: ConvexPolygon) -> "DensitySpec":
        return cls(UNIFORM, support)

    @classmethod
    def gaussian(cls, support: ConvexPolygon, center: ArrayLike, sigma: float) -> "DensitySpec":
        return cls(GAUSSIAN, support, np.asarray(center, dtype=float), float(sigma))

    @classmethod
    def from_grid(cls, support, xs, ys, values) -> "DensitySpec":
        """values[a, b] is the density at (xs[a], ys[b])."""
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("Grid density has negative samples")
        interpolator = RegularGridInterpolator(
            (np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)),
            values,
            method="linear",
            bounds_error=False,
            fill_value=0.0,
        )
        return cls(GRID, support, grid=interpolator)

    @classmethod
    def from_grid_csv(cls, path, support: ConvexPolygon) -> "DensitySpec":
        """Load (x, y, value) rows on a rectangular lattice; a header row is optional."""
        path = Path(path)
        with open(path, "r") as f:
            first = f.readline()
        skip = 0 if _is_numeric_row(first) else 1
        rows = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        xs = np.unique(rows[:, 0])
        ys = np.unique(rows[:, 1])
        if len(rows) != len(xs) * len(ys):
            raise ValueError(
                f"{path}: {len(rows)} rows do not form a {len(xs)} x {len(ys)} lattice"
            )
        values = np.full((len(xs), len(ys)), np.nan)
        values[np.searchsorted(xs, rows[:, 0]), np.searchsorted(ys, rows[:, 1])] = rows[:, 2]
        if np.any(np.isnan(values)):
            raise ValueError(f"{path}: lattice has missing samples")
        logger.info(f"Loaded {len(xs)} x {len(ys)} density grid from {path}")
        return cls.from_grid(support, xs, ys, values)

    @property
    def is_uniform(self) -> bool:
        return self.kind == UNIFORM

    def evaluate(self, points: ArrayLike) -> NDArray[np.float64]:
        """Density at an (n, 2) array of points; zero outside the support."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self._raw(points) * self.support.contains(points, tol=1e-12)

    def max_value(self) -> float:
        if self.kind == GRID:
            return float(np.max(self.grid.values))
        return 1.0

    def _raw(self, points):
        if self.kind == UNIFORM:
            return np.ones(len(points))
        if self.kind == GAUSSIAN:
            r2 = ((points - self.center) ** 2).sum(axis=-1)
            return np.exp(-r2 / (2.0 * self.sigma**2))
        return self.grid(points)


@dataclass
class LloydResult:
    measure: DiscreteMeasure
    energies: list = field(default_factory=list)
    displacement: float = float("inf")
    iterations: int = 0
    reseeded: int = 0


def density_cell_moments(density: DensitySpec, cell: ConvexPolygon) -> CellMass:
    """
    Mass and density-weighted centroid of a cell.

    Uniform densities use the exact polygon moments; other densities use the
    degree-6 rule on a fan triangulation. An empty cell has mass 0 and a NaN
    centroid.
    """
    if cell.is_empty:
        return CellMass(0.0, np.full(2, np.nan))
    if density.is_uniform:
        moments = polygon_moments(cell, cell.vertices[0])
        return CellMass(moments.area, moments.centroid)

    points, weights = _cell_quadrature(cell)
    rho = density.evaluate(points) * weights
    mass = float(rho.sum())
    if mass <= 0.0:
        return CellMass(0.0, np.full(2, np.nan))
    return CellMass(mass, (rho @ points) / mass)


def density_cell_energy(density: DensitySpec, cell: ConvexPolygon, ref: ArrayLike) -> float:
    """int_cell rho(x) |x - ref|^2 dx"""
    if cell.is_empty:
        return 0.0
    ref = np.asarray(ref, dtype=float)
    if density.is_uniform:
        return polygon_moments(cell, ref).second_moment
    points, weights = _cell_quadrature(cell)
    rho = density.evaluate(points) * weights
    return float(rho @ ((points - ref) ** 2).sum(axis=1))


def sample_density(density: DensitySpec, n: int, rng: np.random.Generator) -> NDArray:
    """Draw n points from the density by rejection from the support's bounding box."""
    xmin, ymin, xmax, ymax = density.support.bounding_box
    bound = density.max_value()
    if bound <= 0:
        raise ValueError("Density vanishes identically")
    out = []
    have = 0
    while have < n:
        batch = max(64, 2 * (n - have))
        candidates = rng.uniform((xmin, ymin), (xmax, ymax), size=(batch, 2))
        accept = rng.uniform(0.0, bound, size=batch) < density.evaluate(candidates)
        out.append(candidates[accept])
        have += int(accept.sum())
    return np.concatenate(out)[:n]


def lloyd_relax(
    density: DensitySpec,
    n: int,
    iterations: int,
    rng_seed: int,
    tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> LloydResult:
    """
    Run Lloyd's algorithm and return the measure with its energy history.

    Args:
        density: Density to quantize; its support is the clipping domain.
        n: Number of seeds.
        iterations: Maximum number of Lloyd iterations.
        rng_seed: Seed of the generator used for initialisation and reseeding.
        tol: Stop early once an iteration moves no seed farther than this.
        workers: Threads for the diagram construction.
    """
    if n < 1:
        raise ValueError(f"Need at least one seed, got n={n}")
    support = density.support
    init_stream, reseed_stream = np.random.SeedSequence(rng_seed).spawn(2)
    reseed_rng = np.random.default_rng(reseed_stream)
    seeds = sample_density(density, n, np.random.default_rng(init_stream))
    result = LloydResult(measure=None)
    zeros = np.zeros(n)

    for iteration in range(iterations):
        diagram = build_diagram(support, DiscreteMeasure(seeds, np.ones(n)), zeros, workers)
        energy = 0.0
        centroids = np.empty_like(seeds)
        for i, cell in enumerate(diagram.cells):
            energy += density_cell_energy(density, cell, seeds[i])
            cell_mass = density_cell_moments(density, cell)
            if cell_mass.mass > 0:
                centroids[i] = cell_mass.weighted_centroid
            else:
                centroids[i] = sample_density(density, 1, reseed_rng)[0]
                result.reseeded += 1
                logger.warning(f"Lloyd iteration {iteration}: cell {i} has no mass, reseeded")
        result.energies.append(energy)
        result.displacement = float(np.linalg.norm(centroids - seeds, axis=1).max())
        seeds = centroids
        result.iterations = iteration + 1
        logger.debug(
            f"Lloyd iteration {result.iterations}: energy {energy:.12e}, "
            f"displacement {result.displacement:.3e}"
        )
        if tol is not None and result.displacement < tol:
            break

    masses = _cell_masses(density, seeds, workers)
    if np.any(masses <= 0):
        raise EmptyCell(f"{int(np.sum(masses <= 0))} final cells carry no density mass")
    masses *= support.area / masses.sum()
    result.measure = DiscreteMeasure(seeds, masses)
    logger.info(
        f"Lloyd quantization: {n} seeds, {result.iterations} iterations, "
        f"final displacement {result.displacement:.3e}"
    )
    return result


def lloyd_quantize(
    density: DensitySpec,
    n: int,
    iterations: int,
    rng_seed: int,
    tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> DiscreteMeasure:
    """Lloyd quantization; masses are the cell masses rescaled to the support area."""
    return lloyd_relax(density, n, iterations, rng_seed, tol, workers).measure


def well_prepare(measure: DiscreteMeasure, axis: int = 1, scale: float = 1e-3) -> DiscreteMeasure:
    """
    Make the seed coordinates along `axis` pairwise distinct.

    Seeds whose coordinates already differ are left alone; each group of
    (near-)equal coordinates is spread by distinct offsets smaller than
    min(scale, 1/N). Masses are untouched.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    n = measure.n
    coords = measure.seeds[:, axis]
    gap = 1e-12 * max(1.0, float(np.abs(coords).max()))
    groups = _coincident_groups(coords, gap)
    if not groups:
        return measure

    bound = min(scale, 1.0 / n)
    step = bound / (n + 1)
    for _ in range(64):
        shifted = coords.copy()
        for group in groups:
            shifted[group] = coords[group] + step * np.arange(len(group))
        if not _coincident_groups(shifted, gap):
            break
        step *= 0.5
    seeds = measure.seeds.copy()
    seeds[:, axis] = shifted
    logger.info(f"Well-prepared {sum(len(g) for g in groups)} seeds along axis {axis}")
    return DiscreteMeasure(seeds, measure.masses)


def _coincident_groups(coords, gap):
    order = np.argsort(coords, kind="stable")
    close = np.diff(coords[order]) < gap
    groups = []
    run = [order[0]]
    for k, is_close in enumerate(close):
        if is_close:
            run.append(order[k + 1])
        else:
            if len(run) > 1:
                groups.append(np.array(run))
            run = [order[k + 1]]
    if len(run) > 1:
        groups.append(np.array(run))
    return groups


def _cell_masses(density, seeds, workers):
    n = len(seeds)
    diagram = build_diagram(
        density.support, DiscreteMeasure(seeds, np.ones(n)), np.zeros(n), workers
    )
    return np.array([density_cell_moments(density, cell).mass for cell in diagram.cells])


def _cell_quadrature(cell: ConvexPolygon, level: Optional[int] = None):
    """Quadrature nodes (m, 2) and weights (m,) over a fan triangulation of the cell."""
    level = settings.QUADRATURE_LEVEL if level is None else level
    v = cell.vertices
    triangles = np.stack(
        [np.repeat(v[:1], len(v) - 2, axis=0), v[1:-1], v[2:]], axis=1
    )  # (t, 3, 2)
    for _ in range(level):
        a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        triangles = np.concatenate(
            [
                np.stack([a, ab, ca], axis=1),
                np.stack([ab, b, bc], axis=1),
                np.stack([ca, bc, c], axis=1),
                np.stack([ab, bc, ca], axis=1),
            ]
        )
    e1 = triangles[:, 1] - triangles[:, 0]
    e2 = triangles[:, 2] - triangles[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    points = np.einsum("qk,tkd->tqd", RULE_POINTS, triangles).reshape(-1, 2)
    weights = (areas[:, None] * RULE_WEIGHTS[None, :]).reshape(-1)
    return points, weights


def _is_numeric_row(line: str) -> bool:
    try:
        [float(part) for part in line.strip().split(",")]
        return True
    except ValueError:
        return False
