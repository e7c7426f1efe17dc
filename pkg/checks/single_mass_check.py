import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from engine.dynamics import simulate
from engine.geom2d import square
from engine.laguerre import DiscreteMeasure
from engine.oracles import single_mass_solution

logger = getLogger(__name__)

THRESHOLD = 1e-8
ORDER_RATIO = (12.0, 20.0)
START = (1.0, 0.0)


def single_mass_error(T: float, h: float, sup: bool = True) -> float:
    """
    Error of the simulated single seed on [-1, 1]^2 against the exact rotation:
    the sup over all steps, or the error at T.
    """
    domain = square(-1.0, 1.0)
    initial = DiscreteMeasure([START], [domain.area])
    trajectory = simulate(domain, initial, T, h)
    if trajectory.error is not None:
        raise RuntimeError(f"single-seed run failed: {trajectory.error}")
    states = trajectory.states if sup else trajectory.states[-1:]
    errors = [
        np.linalg.norm(s.measure.seeds[0] - single_mass_solution(domain, START, s.t))
        for s in states
    ]
    return float(max(errors))


class SingleMassCheck(BaseCheck):
    """Sup-norm trajectory error of RK4 against exp(tJ)(z0 - c) + c."""

    name = "single_mass"

    def run(self, options: VerifyOptions) -> CheckResult:
        error = single_mass_error(options.single_mass_T, options.single_mass_h)
        logger.info(f"Single-mass check: sup error {error:.3e} at h={options.single_mass_h}")
        return CheckResult(
            self.name,
            error < THRESHOLD,
            error,
            THRESHOLD,
            f"T={options.single_mass_T}, h={options.single_mass_h}",
        )


class ConvergenceOrderCheck(BaseCheck):
    """
    Halving h must shrink the final error by a factor close to 16.
    Uses coarse steps; below h ~ 1e-2 the error sits at the round-off floor.
    """

    name = "rk4_order"

    def run(self, options: VerifyOptions) -> CheckResult:
        h = options.order_h
        coarse = single_mass_error(options.single_mass_T, h, sup=False)
        fine = single_mass_error(options.single_mass_T, 0.5 * h, sup=False)
        ratio = coarse / fine if fine > 0 else float("inf")
        low, high = ORDER_RATIO
        logger.info(f"RK4 order check: error ratio {ratio:.3f} (order {np.log2(ratio):.3f})")
        return CheckResult(
            self.name,
            low <= ratio <= high,
            ratio,
            high,
            f"errors {coarse:.3e} (h={h}) and {fine:.3e} (h={0.5 * h}); "
            f"observed order {np.log2(ratio):.3f}; ratio must lie in [{low}, {high}]",
        )
