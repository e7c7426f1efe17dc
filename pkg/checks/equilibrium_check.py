import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from .instances import unit_square
from engine.dynamics import GeostrophicFlow
from engine.quantize import DensitySpec, lloyd_relax

logger = getLogger(__name__)

N_SEEDS = 50
LLOYD_TOL = 1e-10
VELOCITY_TOL = 1e-8
MOVE_TOL = 1e-6
STEPS = 100
STEP = 0.01
SOLVE_TOL = 1e-6


class EquilibriumCheck(BaseCheck):
    """A converged centroidal configuration has zero velocity and does not move."""

    name = "equilibrium"

    def run(self, options: VerifyOptions) -> CheckResult:
        domain = unit_square()
        lloyd = lloyd_relax(
            DensitySpec.uniform(domain),
            N_SEEDS,
            options.equilibrium_iterations,
            options.rng_seed,
            tol=LLOYD_TOL,
        )
        measure = lloyd.measure
        flow = GeostrophicFlow(domain, tol=SOLVE_TOL)
        state = flow.state_at(0.0, measure)
        speed = float(np.abs(state.velocities).max())

        for _ in range(STEPS):
            state = flow.rk4_step(state, STEP)
            if state.failure is not None:
                return CheckResult(self.name, False, float("inf"), VELOCITY_TOL, state.failure)
        moved = float(np.linalg.norm(state.measure.seeds - measure.seeds, axis=1).max())

        logger.info(
            f"Equilibrium check: Lloyd displacement {lloyd.displacement:.2e} after "
            f"{lloyd.iterations} iterations, |W| {speed:.2e}, moved {moved:.2e}"
        )
        failures = []
        if lloyd.displacement >= LLOYD_TOL:
            failures.append(
                f"Lloyd did not converge: displacement {lloyd.displacement:.2e} "
                f">= {LLOYD_TOL:g} after {lloyd.iterations} iterations"
            )
        if speed >= VELOCITY_TOL:
            failures.append(f"initial speed {speed:.2e} >= {VELOCITY_TOL:g}")
        if moved >= MOVE_TOL:
            failures.append(f"seeds moved {moved:.2e} >= {MOVE_TOL:g} over {STEPS} steps")
        details = "; ".join(failures) or (
            f"Lloyd displacement {lloyd.displacement:.2e} ({lloyd.iterations} iterations); "
            f"max seed motion over {STEPS} steps {moved:.2e} (limit {MOVE_TOL:g})"
        )
        return CheckResult(self.name, not failures, speed, VELOCITY_TOL, details)
