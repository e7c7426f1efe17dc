from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt


class VerifyOptions(BaseModel):
    """Knobs of the oracle suite; the defaults are the acceptance settings."""

    model_config = ConfigDict(extra="forbid")

    single_mass_h: PositiveFloat = 1e-3
    single_mass_T: PositiveFloat = 5.0
    order_h: PositiveFloat = 0.1
    two_mass_h: PositiveFloat = 0.05
    fd_step: PositiveFloat = 1e-6
    fd_configs: PositiveInt = 20
    solver_instances: PositiveInt = 50
    equilibrium_iterations: PositiveInt = 5000
    rng_seed: int = 0
    include_slow: bool = False
    only: Optional[list[str]] = None


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    details: str = ""
    elapsed: float = 0.0


class BaseCheck(ABC):
    """
    Abstract base class for all oracle checks.
    Each check must set `name` (a key of CHECK_TYPES) and implement run.
    """

    name: str = ""
    slow: bool = False

    @abstractmethod
    def run(self, options: VerifyOptions) -> CheckResult:
        """
        Run the check with the given options.

        Returns:
            A CheckResult with the measured error and the threshold it was
            compared against.
        """
        pass
