import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from engine.dynamics import simulate
from engine.geom2d import regular_polygon
from engine.laguerre import DiscreteMeasure
from engine.oracles import two_mass_params

logger = getLogger(__name__)

MASS = 0.5
OFFSET = 0.3
SIDES = 256
FREQUENCY_RTOL = 1e-3
DRIFT_TOL = 1e-6
SOLVE_TOL = 1e-6


class TwoMassCheck(BaseCheck):
    """
    Two equal masses at (+-0.3, 0) in the unit-area disk (a 256-gon). Over one
    period the separation vector must turn at omega = 1 - q / |Z(0)| with
    constant length.
    """

    name = "two_mass"

    def run(self, options: VerifyOptions) -> CheckResult:
        domain = regular_polygon(SIDES, 1.0)
        z1, z2 = np.array([OFFSET, 0.0]), np.array([-OFFSET, 0.0])
        params = two_mass_params(z1, z2, MASS)
        period = 2.0 * np.pi / abs(params.omega)

        initial = DiscreteMeasure([z1, z2], [MASS, 1.0 - MASS])
        trajectory = simulate(domain, initial, period, options.two_mass_h, tol=SOLVE_TOL)
        if trajectory.error is not None:
            return CheckResult(self.name, False, float("inf"), FREQUENCY_RTOL, trajectory.error)

        times = np.array([s.t for s in trajectory.states])
        separation = np.array([s.measure.seeds[0] - s.measure.seeds[1] for s in trajectory.states])
        angle = np.unwrap(np.arctan2(separation[:, 1], separation[:, 0]))
        omega = float(np.polyfit(times, angle, 1)[0])
        frequency_error = abs(omega - params.omega) / abs(params.omega)
        lengths = np.linalg.norm(separation, axis=1)
        drift = float(np.abs(lengths - lengths[0]).max())

        logger.info(
            f"Two-mass check: omega {omega:.8f} vs {params.omega:.8f}, |Z| drift {drift:.3e}"
        )
        return CheckResult(
            self.name,
            frequency_error < FREQUENCY_RTOL and drift < DRIFT_TOL,
            frequency_error,
            FREQUENCY_RTOL,
            f"omega {omega:.8f} (exact {params.omega:.8f}); |Z| drift {drift:.3e} "
            f"(limit {DRIFT_TOL:g}); T={period:.4f}, h={options.two_mass_h}",
        )
