"""
Semi-geostrophic seed dynamics in geostrophic coordinates.

Seeds move with W(z)_i = J (z_i - x_i(z)), where x_i(z) is the centroid of
the i-th cell of the optimal (area-constrained) Laguerre tessellation and J
is the planar rotation by a quarter turn. Time stepping is classical RK4
with each stage warm-starting the weight solve from the previous stage.
"""

from dataclasses import dataclass, field, replace
from logging import getLogger
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config import settings
from engine.errors import SeparationLoss, SGFlowError
from engine.geom2d import ConvexPolygon
from engine.laguerre import DiscreteMeasure, WeightVector, min_separation
from engine.sdot import NEWTON, OptimalTransport, discrete_energy, solve_diagram, transport_cost

logger = getLogger(__name__)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotate(vectors: ArrayLike) -> NDArray[np.float64]:
    """Apply J to each row of an (n, 2) array."""
    return np.asarray(vectors, dtype=float) @ J.T


@dataclass(frozen=True)
class Diagnostics:
    transport_cost: float
    energy: float
    min_separation: float
    max_area_error: float


@dataclass(frozen=True, eq=False)
class SimulationState:
    t: float
    measure: DiscreteMeasure
    warm_weights: WeightVector
    diagnostics: Diagnostics
    velocities: Optional[NDArray[np.float64]] = None
    failure: Optional[str] = None


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    times: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def final(self) -> SimulationState:
        return self.states[-1]

    def record(self, state: SimulationState) -> None:
        self.times.append(state.t)
        self.diagnostics.append(state.diagnostics)

    def transport_costs(self) -> NDArray[np.float64]:
        return np.array([d.transport_cost for d in self.diagnostics])


class GeostrophicFlow:
    """
    The SG vector field on a fixed domain together with its integrator.

    Args:
        domain: Convex physical domain.
        tol: Relative area accuracy eps; every solve enforces
            |m_i - |C_i|| < 1e-2 * eps * min(m).
        sep_floor: Minimum admissible seed separation. Defaults to
            1e-8 * diameter(domain).
        method: Weight solver ("newton" or "quasi-newton").
        workers: Threads for diagram construction.
    """

    def __init__(
        self,
        domain: ConvexPolygon,
        tol: float = 0.1,
        sep_floor: Optional[float] = None,
        method: str = NEWTON,
        workers: Optional[int] = None,
        max_iter: Optional[int] = None,
    ):
        self.domain = domain
        self.tol = tol
        if sep_floor is None:
            sep_floor = settings.SEPARATION_FLOOR * domain.diameter
        self.sep_floor = sep_floor
        self.method = method
        self.workers = workers
        self.max_iter = max_iter

    @property
    def solver_tol(self) -> float:
        return 1e-2 * self.tol

    def solve(self, measure: DiscreteMeasure, warm: Optional[ArrayLike]) -> OptimalTransport:
        separation = min_separation(measure.seeds)
        if separation < self.sep_floor:
            raise SeparationLoss(separation, self.sep_floor)
        return solve_diagram(
            self.domain,
            measure,
            warm,
            self.solver_tol,
            max_iter=self.max_iter,
            method=self.method,
            workers=self.workers,
        )

    def vector_field(
        self, measure: DiscreteMeasure, warm: Optional[ArrayLike] = None
    ) -> tuple[NDArray[np.float64], WeightVector]:
        """Velocities J (z_i - x_i(z)) and the solved weights."""
        solution = self.solve(measure, warm)
        return rotate(measure.seeds - solution.diagram.centroids), solution.weights

    def state_at(
        self, t: float, measure: DiscreteMeasure, warm: Optional[ArrayLike] = None
    ) -> SimulationState:
        """Solve at `measure` and package the diagnostics and velocities."""
        solution = self.solve(measure, warm)
        diagnostics = self._diagnostics(measure, solution)
        velocities = rotate(measure.seeds - solution.diagram.centroids)
        return SimulationState(t, measure, solution.weights, diagnostics, velocities)

    def diagnostics(
        self, measure: DiscreteMeasure, warm: Optional[ArrayLike] = None
    ) -> Diagnostics:
        return self._diagnostics(measure, self.solve(measure, warm))

    def rk4_step(self, state: SimulationState, h: float) -> SimulationState:
        """
        One classical RK4 step of length h.

        The step is atomic: if any stage fails, the input state is returned
        with `failure` set.
        """
        if h <= 0:
            raise ValueError(f"Time step must be positive, got {h}")
        measure = state.measure
        z = measure.seeds
        try:
            if state.velocities is not None:
                k1, w = state.velocities, state.warm_weights
            else:
                k1, w = self.vector_field(measure, state.warm_weights)
            k2, w = self.vector_field(measure.with_seeds(z + 0.5 * h * k1), w)
            k3, w = self.vector_field(measure.with_seeds(z + 0.5 * h * k2), w)
            k4, w = self.vector_field(measure.with_seeds(z + h * k3), w)
            z_new = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            return self.state_at(state.t + h, measure.with_seeds(z_new), w)
        except SGFlowError as e:
            logger.error(f"RK4 step from t={state.t:.6g} failed: {e}", exc_info=True)
            return replace(state, failure=str(e))

    def _diagnostics(self, measure: DiscreteMeasure, solution: OptimalTransport) -> Diagnostics:
        return Diagnostics(
            transport_cost=transport_cost(solution.diagram, measure),
            energy=discrete_energy(solution.diagram, measure),
            min_separation=min_separation(measure.seeds),
            max_area_error=solution.report.final_area_error,
        )


def vector_field(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    warm: Optional[ArrayLike] = None,
    tol: float = 0.1,
    **options,
) -> tuple[NDArray[np.float64], WeightVector]:
    return GeostrophicFlow(domain, tol, **options).vector_field(measure, warm)


def conserved_diagnostics(
    domain: ConvexPolygon,
    measure: DiscreteMeasure,
    warm: Optional[ArrayLike] = None,
    tol: float = 0.1,
    **options,
) -> Diagnostics:
    """Transport cost, energy, minimum separation and area error at optimal weights."""
    return GeostrophicFlow(domain, tol, **options).diagnostics(measure, warm)


def simulate(
    domain: ConvexPolygon,
    initial: DiscreteMeasure,
    T: float,
    h: float,
    tol: float = 0.1,
    snapshot_every: int = 1,
    snapshot_times: Optional[list] = None,
    sep_floor: Optional[float] = None,
    method: str = NEWTON,
    workers: Optional[int] = None,
    max_iter: Optional[int] = None,
    on_snapshot: Optional[Callable[[SimulationState], None]] = None,
    config: Optional[dict] = None,
) -> Trajectory:
    """
    Integrate the seed ODE from t = 0 to T with fixed-step RK4.

    Diagnostics are kept for every step; states are kept every
    `snapshot_every` steps, at each requested snapshot time (within h/2)
    and at the end. On failure the partial trajectory is returned with
    `error` set.
    """
    if T <= 0 or h <= 0 or h > T:
        raise ValueError(f"Need T > 0 and 0 < h <= T, got T={T}, h={h}")
    if snapshot_every < 1:
        raise ValueError(f"snapshot_every must be at least 1, got {snapshot_every}")
    initial.check_balance(domain)

    flow = GeostrophicFlow(domain, tol, sep_floor, method, workers, max_iter)
    trajectory = Trajectory(config=dict(config or {}))
    pending = sorted(snapshot_times or [])
    n_steps = int(np.ceil(T / h - 1e-9))

    def keep(state: SimulationState) -> None:
        trajectory.states.append(state)
        if on_snapshot is not None:
            on_snapshot(state)

    try:
        state = flow.state_at(0.0, initial)
    except SGFlowError as e:
        logger.error(f"Could not solve the initial transport problem: {e}", exc_info=True)
        trajectory.error = str(e)
        return trajectory
    trajectory.record(state)
    keep(state)
    pending = [t for t in pending if t > 0.5 * h]

    logger.info(f"Simulating {initial.n} seeds to T={T} with h={h} ({n_steps} steps)")
    for k in range(1, n_steps + 1):
        step = h if k < n_steps else T - (n_steps - 1) * h
        candidate = flow.rk4_step(state, step)
        if candidate.failure is not None:
            trajectory.error = candidate.failure
            if trajectory.states[-1] is not state:
                keep(state)
            logger.error(f"Simulation aborted at t={state.t:.6g}: {candidate.failure}")
            return trajectory
        state = replace(candidate, t=k * h if k < n_steps else T)
        trajectory.record(state)

        due = [t for t in pending if abs(t - state.t) <= 0.5 * h]
        pending = [t for t in pending if t not in due]
        if k % snapshot_every == 0 or k == n_steps or due:
            keep(state)
        logger.debug(
            f"t={state.t:.4f} cost={state.diagnostics.transport_cost:.12e} "
            f"area_error={state.diagnostics.max_area_error:.2e}"
        )

    logger.info(f"Simulation finished at t={state.t:.6g}")
    return trajectory


def transport_cost_deviation(trajectory: Trajectory) -> float:
    """max_n |W2^2(t_n) - mean W2^2| over all recorded steps."""
    costs = trajectory.transport_costs()
    return float(np.abs(costs - costs.mean()).max())


def transport_cost_drift(trajectory: Trajectory) -> float:
    """Deviation of the transport cost relative to its mean over the run."""
    costs = trajectory.transport_costs()
    mean = float(costs.mean())
    if mean == 0.0:
        return 0.0
    return transport_cost_deviation(trajectory) / abs(mean)
