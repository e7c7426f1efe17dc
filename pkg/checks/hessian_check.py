import numpy as np
import scipy.linalg
from logging import getLogger

from .base_check import BaseCheck, CheckResult, VerifyOptions
from .instances import random_measure, random_weights, unit_square
from engine.sdot import kantorovich_eval

logger = getLogger(__name__)

N_SEEDS = 10
THRESHOLD = 1e-4
STRUCTURE_TOL = 1e-12


class HessianCheck(BaseCheck):
    """
    Finite differences of the gradient against minus the dual-graph Laplacian,
    plus the structural properties of the Laplacian.
    """

    name = "hessian"

    def run(self, options: VerifyOptions) -> CheckResult:
        domain = unit_square()
        rng = np.random.default_rng(options.rng_seed + 1)
        step = options.fd_step * domain.diameter**2
        worst = 0.0
        problems = []

        for k in range(options.fd_configs):
            measure = random_measure(rng, N_SEEDS, domain)
            w = random_weights(rng, N_SEEDS, 0.01)
            laplacian = kantorovich_eval(domain, measure, w).hessian.toarray()
            problems.extend(f"config {k}: {p}" for p in _structure_problems(laplacian))

            numeric = np.empty((N_SEEDS, N_SEEDS))
            for j in range(N_SEEDS):
                e = np.zeros(N_SEEDS)
                e[j] = step
                plus = kantorovich_eval(domain, measure, w + e).gradient
                minus = kantorovich_eval(domain, measure, w - e).gradient
                numeric[:, j] = -(plus - minus) / (2.0 * step)

            scale = np.abs(laplacian).max()
            nonzero = np.abs(laplacian) > 1e-8 * scale
            error = np.abs(numeric - laplacian)[nonzero] / np.abs(laplacian)[nonzero]
            worst = max(worst, float(error.max()))

        logger.info(f"Hessian check: worst relative entry error {worst:.3e}")
        details = f"{options.fd_configs} configurations, N={N_SEEDS}"
        if problems:
            details += "; " + "; ".join(problems)
        return CheckResult(self.name, worst < THRESHOLD and not problems, worst, THRESHOLD, details)


def _structure_problems(laplacian: np.ndarray) -> list[str]:
    """Symmetry, zero row sums, non-positive off-diagonal and kernel span{1}."""
    scale = np.abs(laplacian).max()
    problems = []
    if np.abs(laplacian - laplacian.T).max() > STRUCTURE_TOL * scale:
        problems.append("not symmetric")
    if np.abs(laplacian.sum(axis=1)).max() > STRUCTURE_TOL * scale * len(laplacian):
        problems.append("row sums are not zero")
    off_diagonal = laplacian - np.diag(np.diag(laplacian))
    if off_diagonal.max() > 0.0:
        problems.append("positive off-diagonal entry")
    eigenvalues = scipy.linalg.eigvalsh(laplacian)
    if abs(eigenvalues[0]) > 1e-10 * scale or eigenvalues[1] <= 1e-10 * scale:
        problems.append(f"kernel is not span{{1}} (eigenvalues {eigenvalues[:2]})")
    if scipy.linalg.eigvalsh(laplacian[:-1, :-1])[0] <= 0.0:
        problems.append("reduced system is not positive definite")
    return problems
