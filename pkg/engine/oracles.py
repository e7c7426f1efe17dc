"""
Closed-form solutions of the seed dynamics, used as test oracles.

- a single seed rotates rigidly about the centroid of the domain;
- two seeds in the unit-area disk: the separation vector rotates with
  constant angular frequency omega = 1 - q / |Z(0)|, and each seed follows
  a Duhamel superposition of two rotations.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import bisect

from engine.errors import DegenerateMass
from engine.geom2d import ConvexPolygon


def rotation(theta: ArrayLike) -> NDArray[np.float64]:
    """exp(theta J): rotation matrices, shape (..., 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def single_mass_solution(domain: ConvexPolygon, z0: ArrayLike, t: ArrayLike) -> NDArray:
    """z(t) = exp(tJ)(z0 - x_domain) + x_domain for scalar or array t."""
    center = domain.centroid
    rel = np.asarray(z0, dtype=float) - center
    return rotation(t) @ rel + center


def segment_offset(m: float, area: float = 1.0) -> float:
    """
    Distance from the centre of the disk of the given area to the centroid
    of its circular segment of area m * area.
    """
    if not 0.0 < m <= 0.5:
        raise DegenerateMass(f"Segment mass must lie in (0, 1/2], got {m}")
    radius = np.sqrt(area / np.pi)
    target = m * area

    def excess(d):
        return radius**2 * np.arccos(d / radius) - d * np.sqrt(radius**2 - d**2) - target

    d = 0.0 if m == 0.5 else bisect(excess, 0.0, radius, xtol=1e-12)
    half_chord = np.sqrt(radius**2 - d**2)
    return float(2.0 * half_chord**3 / (3.0 * target))


@dataclass(frozen=True)
class OracleParams:
    r_of_m: float
    q_of_m: float
    omega: float


def two_mass_params(z1: ArrayLike, z2: ArrayLike, m: float) -> OracleParams:
    separation = float(np.linalg.norm(np.asarray(z1, dtype=float) - np.asarray(z2, dtype=float)))
    if separation == 0.0:
        raise ValueError("Initial seeds must be distinct")
    r = segment_offset(m)
    q = r / (1.0 - m)
    return OracleParams(r, q, 1.0 - q / separation)


def two_mass_oracle(
    domain: ConvexPolygon,
    z1: ArrayLike,
    z2: ArrayLike,
    m: float,
    t: ArrayLike,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Exact positions of two seeds with masses (m, 1 - m) in the unit-area disk
    centred at the origin.

    Raises:
        DegenerateMass: if m is outside (0, 1/2].
        ValueError: if `domain` is not (close to) that disk.
    """
    if abs(domain.area - 1.0) > 1e-6 or np.linalg.norm(domain.centroid) > 1e-9:
        raise ValueError("Two-mass oracle needs the unit-area disk centred at the origin")
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    params = two_mass_params(z1, z2, m)
    axis = (z1 - z2) / np.linalg.norm(z1 - z2)
    r, omega = params.r_of_m, params.omega

    frame = rotation(t)
    spin = rotation(omega * np.asarray(t, dtype=float))
    drift = (spin - frame) @ axis / (omega - 1.0)
    first = frame @ z1 - r * drift
    second = frame @ z2 + (m * r / (1.0 - m)) * drift
    return first, second
