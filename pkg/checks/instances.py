import numpy as np

from checks.constants import UNIT_SQUARE
from engine.geom2d import ConvexPolygon, square
from engine.laguerre import DiscreteMeasure


def unit_square() -> ConvexPolygon:
    return square(*UNIT_SQUARE)


def random_measure(rng: np.random.Generator, n: int, domain: ConvexPolygon) -> DiscreteMeasure:
    """Uniform seeds in the bounding box, positive masses summing to the domain area."""
    xmin, ymin, xmax, ymax = domain.bounding_box
    seeds = rng.uniform((xmin, ymin), (xmax, ymax), size=(n, 2))
    masses = rng.uniform(0.5, 1.5, size=n)
    return DiscreteMeasure(seeds, masses * domain.area / masses.sum())


def random_weights(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    w = rng.uniform(-scale, scale, size=n)
    return w - w[-1]
