"""
Semi-discrete optimal transport between the uniform measure on a convex
domain and a discrete measure.

The Kantorovich functional

    g(w) = sum_i int_{C_i} |x - z_i|^2 dx + sum_i (m_i - |C_i|) w_i

is concave with gradient m - |C(w)|. Its negative Hessian is the Laplacian of
the dual graph with edge weights |C_i n C_j| / (2 |z_i - z_j|); the solver
works with that Laplacian directly.
"""

from dataclasses import dataclass, field
from logging import getLogger
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg
from sksparse.cholmod import CholmodNotPositiveDefiniteError, cholesky

from config import settings
from engine.errors import NonConvergence, SingularHessian
from engine.geom2d import ConvexPolygon
from engine.laguerre import (
    DiscreteMeasure,
    LaguerreDiagram,
    WeightVector,
    build_diagram,
    normalize_weights,
)

logger = getLogger(__name__)

NEWTON = "newton"
QUASI_NEWTON = "quasi-newton"


@dataclass(frozen=True, eq=False)
class KantorovichState:
    g_value: float
    gradient: NDArray[np.float64]
    hessian: sp.csr_matrix
    diagram: LaguerreDiagram


@dataclass
class SolveReport:
    iterations: int = 0
    final_area_error: float = float("inf")
    converged: bool = False
    damping_backtracks: int = 0
    method: str = NEWTON
    history: list = field(default_factory=list)


class OptimalTransport(NamedTuple):
    weights: WeightVector
    report: SolveReport
    diagram: LaguerreDiagram


def laplacian(diagram: LaguerreDiagram) -> sp.csr_matrix:
    """Dual-graph Laplacian with edge weights interface_length / (2 seed_distance)."""
    n = diagram.n
    i, j = diagram.edges[:, 0], diagram.edges[:, 1]
    weight = diagram.interface_lengths / (2.0 * diagram.seed_distances)
    degree = np.bincount(i, weight, minlength=n) + np.bincount(j, weight, minlength=n)
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    data = np.concatenate([-weight, -weight, degree])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def kantorovich_eval(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    w: ArrayLike,
    workers: Optional[int] = None,
) -> KantorovichState:
    """Value, gradient and (negated) Hessian of g at w."""
    w = np.asarray(w, dtype=float)
    diagram = build_diagram(domain, measure, w, workers)
    gradient = measure.masses - diagram.areas
    g_value = float(diagram.second_moments.sum() + gradient @ w)
    return KantorovichState(g_value, gradient, laplacian(diagram), diagram)


def solve_diagram(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    w0: Optional[ArrayLike] = None,
    tol: float = 1e-3,
    max_iter: Optional[int] = None,
    max_backtracks: Optional[int] = None,
    method: str = NEWTON,
    workers: Optional[int] = None,
) -> OptimalTransport:
    """
    Solve for the optimal weights and return them with the optimal diagram.

    The returned weights have a zero last entry and every cell area is within
    tol * min(m) of its mass.

    Raises:
        NonConvergence: iteration or backtracking budget exhausted.
        SingularHessian: the dual graph became disconnected.
        CoincidentSeeds: propagated from the diagram construction.
    """
    max_iter = settings.DEFAULT_MAX_NEWTON_ITER if max_iter is None else max_iter
    if max_backtracks is None:
        max_backtracks = settings.DEFAULT_MAX_BACKTRACKS
    if tol <= 0:
        raise ValueError(f"Solver tolerance must be positive, got {tol}")

    masses = measure.masses
    threshold = tol * masses.min()
    w = np.zeros(measure.n) if w0 is None else normalize_weights(w0)
    if len(w) != measure.n:
        raise ValueError(f"Warm start has {len(w)} weights for {measure.n} seeds")

    if measure.n == 1:
        diagram = build_diagram(domain, measure, np.zeros(1), workers)
        error = float(abs(masses[0] - diagram.areas[0]))
        report = SolveReport(0, error, error < threshold, 0, method, [error])
        return OptimalTransport(np.zeros(1), report, diagram)

    diagram = build_diagram(domain, measure, w, workers)
    if np.any(diagram.empty_cells):
        w = feasible_start(domain, measure, workers)
        diagram = build_diagram(domain, measure, w, workers)

    if method == QUASI_NEWTON:
        return _solve_quasi_newton(domain, measure, w, threshold, max_iter, workers)
    if method != NEWTON:
        raise ValueError(f"Unknown solver method '{method}'")
    return _solve_newton(
        domain, measure, w, diagram, threshold, max_iter, max_backtracks, workers
    )


def solve_weights(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    w0: Optional[ArrayLike] = None,
    tol: float = 1e-3,
    **kwargs,
) -> tuple[WeightVector, SolveReport]:
    """Optimal weight vector (last entry zero) and the solver report."""
    solution = solve_diagram(domain, measure, w0, tol, **kwargs)
    return solution.weights, solution.report


def optimal_centroids(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    warm: Optional[ArrayLike] = None,
    tol: float = 1e-3,
    **kwargs,
) -> tuple[NDArray[np.float64], WeightVector]:
    """Centroids of the optimal Laguerre cells, and the solved weights for reuse."""
    solution = solve_diagram(domain, measure, warm, tol, **kwargs)
    return solution.diagram.centroids, solution.weights


def transport_cost(diagram: LaguerreDiagram, measure: DiscreteMeasure) -> float:
    """Squared Wasserstein distance; valid when the diagram is optimal for `measure`."""
    return float(diagram.second_moments.sum())


def discrete_energy(diagram: LaguerreDiagram, measure: DiscreteMeasure) -> float:
    """Planar geostrophic energy, half the transport cost."""
    return 0.5 * transport_cost(diagram, measure)


def feasible_start(
    domain: ConvexPolygon, measure: DiscreteMeasure, workers: Optional[int] = None
) -> WeightVector:
    """
    Weights for which every Laguerre cell is nonempty.

    First tries w_i = dist(z_i, domain)^2. If some cell is still empty, falls
    back to the contraction start: with y_i = c + s (z_i - c) inside the
    domain, w_i = |z_i|^2 - |y_i|^2 / s makes cell i the Voronoi cell of y_i,
    which contains y_i.
    """
    seeds = measure.seeds
    projected = np.array([domain.project(z) for z in seeds])
    w = ((seeds - projected) ** 2).sum(axis=1)
    if not np.any(build_diagram(domain, measure, w, workers).empty_cells):
        logger.warning("Empty cells at the warm start; re-inflated with projection weights")
        return normalize_weights(w)

    center = domain.centroid
    spread = float(np.linalg.norm(seeds - center, axis=1).max())
    s = 0.5 * domain.inscribed_radius(center) / spread
    contracted = center + s * (seeds - center)
    w = (seeds**2).sum(axis=1) - (contracted**2).sum(axis=1) / s
    logger.warning(f"Empty cells at the warm start; using contraction start (s={s:.3e})")
    return normalize_weights(w)


def _solve_newton(domain, measure, w, diagram, threshold, max_iter, max_backtracks, workers):
    masses = measure.masses
    report = SolveReport(method=NEWTON)
    # damping floor fixed by the first feasible iterate
    floor = 0.5 * min(masses.min(), diagram.areas.min())
    residual = masses - diagram.areas
    error = float(np.abs(residual).max())
    report.history.append(error)

    while error >= threshold:
        if report.iterations >= max_iter:
            report.final_area_error = error
            raise NonConvergence(
                f"Newton solver did not converge in {max_iter} iterations "
                f"(area error {error:.3e}, threshold {threshold:.3e})",
                report,
            )
        delta = np.append(_newton_direction(diagram, residual), 0.0)
        norm = float(np.linalg.norm(residual))
        step = 1.0
        for attempt in range(max_backtracks + 1):
            trial = w + step * delta
            candidate = build_diagram(domain, measure, trial, workers)
            trial_residual = masses - candidate.areas
            if (
                candidate.areas.min() >= floor
                and np.linalg.norm(trial_residual) <= (1.0 - 0.5 * step) * norm
            ):
                break
            if attempt == max_backtracks:
                report.final_area_error = error
                raise NonConvergence(
                    f"Line search exceeded {max_backtracks} backtracks "
                    f"at iteration {report.iterations}",
                    report,
                )
            step *= 0.5
            report.damping_backtracks += 1

        w, diagram, residual = trial, candidate, trial_residual
        error = float(np.abs(residual).max())
        report.iterations += 1
        report.history.append(error)
        logger.debug(
            f"Newton iteration {report.iterations}: area error {error:.3e}, step {step:g}"
        )

    report.final_area_error = error
    report.converged = True
    return OptimalTransport(normalize_weights(w), report, diagram)


def _newton_direction(diagram: LaguerreDiagram, residual: NDArray[np.float64]):
    """Solve the reduced Laplacian system L' d = (m - |C|)' with w_N held fixed."""
    full = laplacian(diagram)
    n_components, _ = connected_components(full, directed=False)
    if n_components > 1 or np.any(diagram.empty_cells):
        raise SingularHessian(f"Dual graph has {n_components} components; Laplacian is singular")
    reduced = full[:-1, :-1].tocsc()
    rhs = residual[:-1]

    if reduced.shape[0] <= settings.CG_THRESHOLD:
        try:
            factor = cholesky(reduced)
        except CholmodNotPositiveDefiniteError as e:
            raise SingularHessian(f"Cholesky factorisation failed: {e}") from e
        return factor(rhs)

    jacobi = sp.diags(1.0 / reduced.diagonal())
    delta, info = cg(reduced, rhs, rtol=settings.CG_RTOL, M=jacobi, maxiter=10 * len(rhs))
    if info < 0:
        raise SingularHessian(f"Conjugate gradient breakdown (info={info})")
    if info > 0:
        logger.warning(f"Conjugate gradient stopped after {info} iterations without converging")
    return delta


def _solve_quasi_newton(domain, measure, w, threshold, max_iter, workers):
    masses = measure.masses
    report = SolveReport(method=QUASI_NEWTON)

    def negative_g(reduced):
        full = np.append(reduced, 0.0)
        diagram = build_diagram(domain, measure, full, workers)
        gradient = masses - diagram.areas
        report.history.append(float(np.abs(gradient).max()))
        return -(diagram.second_moments.sum() + gradient @ full), -gradient[:-1]

    # w_N is pinned to 0; BFGS only sees the first N - 1 weights
    result = minimize(
        negative_g,
        w[:-1],
        jac=True,
        method="BFGS",
        options={"gtol": threshold / measure.n, "maxiter": max_iter, "norm": np.inf},
    )
    weights = np.append(result.x, 0.0)
    diagram = build_diagram(domain, measure, weights, workers)
    report.iterations = int(result.nit)
    report.final_area_error = float(np.abs(masses - diagram.areas).max())
    report.converged = report.final_area_error < threshold
    if not report.converged:
        raise NonConvergence(
            f"Quasi-Newton solver stopped ({result.message}) with area error "
            f"{report.final_area_error:.3e}",
            report,
        )
    return OptimalTransport(weights, report, diagram)
