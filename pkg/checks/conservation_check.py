import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from .constants import GAUSSIAN_SIGMA
from engine.dynamics import simulate, transport_cost_deviation, transport_cost_drift
from engine.geom2d import square
from engine.quantize import DensitySpec, lloyd_quantize

logger = getLogger(__name__)

N_SEEDS = 200
LLOYD_ITERATIONS = 200
T = 5.0
STEP = 0.01
TOL = 0.1
DEVIATION_TOL = 1e-5
REFINEMENT_TOL = 1e-3


def gaussian_run(rng_seed: int, h: float, tol: float):
    domain = square(-1.0, 1.0)
    density = DensitySpec.gaussian(domain, (0.0, 0.0), GAUSSIAN_SIGMA)
    initial = lloyd_quantize(density, N_SEEDS, LLOYD_ITERATIONS, rng_seed)
    return simulate(domain, initial, T, h, tol=tol, snapshot_every=10**9)


class ConservationCheck(BaseCheck):
    """Desk-scale Gaussian run: the transport cost stays within 1e-5 of its mean."""

    name = "conservation"
    slow = True

    def run(self, options: VerifyOptions) -> CheckResult:
        trajectory = gaussian_run(options.rng_seed, STEP, TOL)
        if trajectory.error is not None:
            return CheckResult(self.name, False, float("inf"), DEVIATION_TOL, trajectory.error)
        deviation = transport_cost_deviation(trajectory)
        logger.info(f"Conservation check: max transport cost deviation {deviation:.3e}")
        return CheckResult(
            self.name,
            deviation < DEVIATION_TOL,
            deviation,
            DEVIATION_TOL,
            f"N={N_SEEDS}, T={T}, h={STEP}, tol={TOL}",
        )


class RefinementCheck(BaseCheck):
    """
    Halving both h and tol leaves the final seeds within 1e-3 per coordinate
    and lowers the relative transport cost drift.
    """

    name = "refinement"
    slow = True

    def run(self, options: VerifyOptions) -> CheckResult:
        coarse = gaussian_run(options.rng_seed, STEP, TOL)
        fine = gaussian_run(options.rng_seed, 0.5 * STEP, 0.5 * TOL)
        for trajectory in (coarse, fine):
            if trajectory.error is not None:
                return CheckResult(self.name, False, float("inf"), REFINEMENT_TOL, trajectory.error)
        gap = float(np.abs(coarse.final.measure.seeds - fine.final.measure.seeds).max())
        coarse_drift = transport_cost_drift(coarse)
        fine_drift = transport_cost_drift(fine)
        logger.info(
            f"Refinement check: final seeds differ by {gap:.3e}, "
            f"relative drift {coarse_drift:.3e} -> {fine_drift:.3e}"
        )
        failures = []
        if gap >= REFINEMENT_TOL:
            failures.append(f"final seeds differ by {gap:.3e} >= {REFINEMENT_TOL:g}")
        if fine_drift >= coarse_drift:
            failures.append(f"drift did not shrink: {fine_drift:.3e} >= {coarse_drift:.3e}")
        details = "; ".join(failures) or (
            f"h={STEP} vs {0.5 * STEP}, tol={TOL} vs {0.5 * TOL}; "
            f"relative drift {coarse_drift:.3e} -> {fine_drift:.3e}"
        )
        return CheckResult(self.name, not failures, gap, REFINEMENT_TOL, details)
