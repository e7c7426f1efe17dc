import numpy as np
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from .instances import random_measure, random_weights, unit_square
from engine.sdot import kantorovich_eval

logger = getLogger(__name__)

N_SEEDS = 10
THRESHOLD = 1e-6


class GradientCheck(BaseCheck):
    """Central differences of g in each weight against m - |C|."""

    name = "gradient"

    def run(self, options: VerifyOptions) -> CheckResult:
        domain = unit_square()
        rng = np.random.default_rng(options.rng_seed)
        step = options.fd_step * domain.diameter**2
        worst = 0.0

        for _ in range(options.fd_configs):
            measure = random_measure(rng, N_SEEDS, domain)
            w = random_weights(rng, N_SEEDS, 0.01)
            analytic = kantorovich_eval(domain, measure, w).gradient
            numeric = np.empty(N_SEEDS)
            for i in range(N_SEEDS):
                e = np.zeros(N_SEEDS)
                e[i] = step
                plus = kantorovich_eval(domain, measure, w + e).g_value
                minus = kantorovich_eval(domain, measure, w - e).g_value
                numeric[i] = (plus - minus) / (2.0 * step)
            error = np.abs(numeric - analytic).max() / np.abs(analytic).max()
            worst = max(worst, float(error))

        logger.info(f"Gradient check: worst relative error {worst:.3e} (step {step:.1e})")
        return CheckResult(
            self.name,
            worst < THRESHOLD,
            worst,
            THRESHOLD,
            f"{options.fd_configs} configurations, N={N_SEEDS}, step {step:.1e}",
        )
