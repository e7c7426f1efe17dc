"""
Exceptions raised by the engine.

Library code raises these; the CLI layer catches them at the boundary,
logs them and turns them into a failed run status.
"""


class SGFlowError(Exception):
    """Base class for every engine error."""


class DegenerateCell(SGFlowError):
    """A polygon has no area (empty or a sliver below the area floor)."""


class NonConvexDomain(SGFlowError):
    """The physical domain is not a convex polygon."""


class CoincidentSeeds(SGFlowError):
    """Two seeds are closer than the coincidence tolerance."""

    def __init__(self, i: int, j: int, distance: float):
        super().__init__(f"Seeds {i} and {j} coincide (distance {distance:.3e})")
        self.i = i
        self.j = j
        self.distance = distance


class IndexOutOfRange(SGFlowError, IndexError):
    """A cell index is outside the diagram or a forbidden pair was requested."""


class NonConvergence(SGFlowError):
    """The weight solver ran out of iterations or backtracks."""

    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report


class SingularHessian(SGFlowError):
    """The reduced Laplacian could not be factorised."""


class EmptyCell(SGFlowError):
    """A Lloyd cell carries no density mass."""


class SeparationLoss(SGFlowError):
    """Two seeds came closer than the configured separation floor."""

    def __init__(self, min_separation: float, floor: float):
        super().__init__(
            f"Minimum seed separation {min_separation:.3e} fell below floor {floor:.3e}"
        )
        self.min_separation = min_separation
        self.floor = floor


class DegenerateMass(SGFlowError):
    """A two-mass oracle was asked for a mass outside (0, 1/2]."""


class ConfigError(SGFlowError):
    """The run configuration could not be parsed or validated."""
