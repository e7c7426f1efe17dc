import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from .instances import random_measure, unit_square
from engine.errors import SGFlowError
from engine.sdot import solve_weights

logger = getLogger(__name__)

# area accuracy 0.1%, as in the Gaussian protocol
SOLVER_TOL = 1e-2 * 0.1
MAX_SEEDS = 200
MAX_ITERATIONS = 100


class SolverCheck(BaseCheck):
    """Random instances must reach the area tolerance within the iteration budget."""

    name = "solver"

    def run(self, options: VerifyOptions) -> CheckResult:
        domain = unit_square()
        rng = np.random.default_rng(options.rng_seed + 2)
        worst = 0.0
        failures = []
        iterations = []

        for k in range(options.solver_instances):
            n = int(rng.integers(2, MAX_SEEDS + 1))
            measure = random_measure(rng, n, domain)
            try:
                _, report = solve_weights(domain, measure, tol=SOLVER_TOL, max_iter=MAX_ITERATIONS)
            except SGFlowError as e:
                failures.append(f"instance {k} (N={n}): {e}")
                continue
            iterations.append(report.iterations)
            worst = max(worst, report.final_area_error / (SOLVER_TOL * measure.masses.min()))

        logger.info(
            f"Solver check: {len(iterations)}/{options.solver_instances} converged, "
            f"max {max(iterations, default=0)} iterations"
        )
        details = f"max iterations {max(iterations, default=0)}"
        if failures:
            details += "; " + "; ".join(failures)
        # measured is the area error in units of the allowed error
        return CheckResult(self.name, not failures and worst < 1.0, worst, 1.0, details)
