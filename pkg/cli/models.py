"""
Run configuration models.

A run is described by a JSON document validated against `RunConfig`.
A run manifest (which embeds the validated config under "config") is
accepted as well, so a finished run can be replayed from its manifest.
"""

import json
from logging import getLogger
from pathlib import Path
from typing import Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeFloat,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

from engine.errors import ConfigError
from engine.geom2d import ConvexPolygon, regular_polygon, square
from engine.quantize import DensitySpec

logger = getLogger(__name__)


class DomainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["polygon", "square", "disk"] = "square"
    vertices: Optional[list[tuple[float, float]]] = None
    a: float = 0.0
    b: float = 1.0
    area: PositiveFloat = 1.0
    sides: int = 256

    @model_validator(mode="after")
    def check_shape(self):
        if self.kind == "polygon" and not self.vertices:
            raise ValueError("a polygon domain needs 'vertices'")
        if self.kind == "square" and self.b <= self.a:
            raise ValueError(f"square domain needs a < b, got a={self.a}, b={self.b}")
        if self.kind == "disk" and self.sides < 3:
            raise ValueError(f"disk domain needs at least 3 sides, got {self.sides}")
        return self

    def build(self) -> ConvexPolygon:
        if self.kind == "square":
            return square(self.a, self.b)
        if self.kind == "disk":
            return regular_polygon(self.sides, self.area)
        return ConvexPolygon.from_points(self.vertices)


class DensityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["uniform", "gaussian", "grid"] = "uniform"
    center: tuple[float, float] = (0.0, 0.0)
    sigma: PositiveFloat = 1.0
    grid_csv: Optional[str] = None

    @model_validator(mode="after")
    def check_grid(self):
        if self.kind == "grid" and not self.grid_csv:
            raise ValueError("a grid density needs 'grid_csv'")
        return self

    def build(self, support: ConvexPolygon) -> DensitySpec:
        if self.kind == "gaussian":
            return DensitySpec.gaussian(support, self.center, self.sigma)
        if self.kind == "grid":
            return DensitySpec.from_grid_csv(self.grid_csv, support)
        return DensitySpec.uniform(support)


class InitialSpec(BaseModel):
    """Either a density to quantize, explicit seeds and masses, or a seeds CSV."""

    model_config = ConfigDict(extra="forbid")

    density: Optional[DensityConfig] = None
    n: Optional[PositiveInt] = None
    lloyd_iterations: NonNegativeInt = 100
    lloyd_tol: Optional[PositiveFloat] = None
    rng_seed: int = 0
    seeds: Optional[list[tuple[float, float]]] = None
    masses: Optional[list[PositiveFloat]] = None
    seeds_csv: Optional[str] = None

    @model_validator(mode="after")
    def check_source(self):
        sources = [
            self.density is not None,
            self.seeds is not None or self.masses is not None,
            self.seeds_csv is not None,
        ]
        if sum(sources) != 1:
            raise ValueError(
                "give exactly one of 'density' (+ 'n'), 'seeds' + 'masses', 'seeds_csv'"
            )
        if self.density is not None and self.n is None:
            raise ValueError("a density initial condition needs 'n'")
        if sources[1] and (self.seeds is None or self.masses is None):
            raise ValueError("explicit initial data needs both 'seeds' and 'masses'")
        if sources[1] and len(self.seeds) != len(self.masses):
            raise ValueError(f"got {len(self.seeds)} seeds but {len(self.masses)} masses")
        return self


class SolverSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["newton", "quasi-newton"] = "newton"
    max_iter: PositiveInt = 100
    workers: PositiveInt = 1


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainSpec
    initial: InitialSpec
    T: PositiveFloat
    h: PositiveFloat
    tol: PositiveFloat = 0.1
    snapshot_every: PositiveInt = 1
    snapshot_times: Optional[list[NonNegativeFloat]] = None
    sep_floor: Optional[PositiveFloat] = None
    solver: SolverSpec = SolverSpec()
    output_dir: str = "output"

    @model_validator(mode="after")
    def check_step(self):
        if self.h > self.T:
            raise ValueError(f"time step h={self.h} exceeds T={self.T}")
        return self


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Validate a JSON run configuration (or a run manifest embedding one).

    Raises:
        ConfigError: naming the offending field path or the JSON line/column.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    if isinstance(document, dict) and "config" in document and "status" in document:
        logger.info(f"{source} is a run manifest; replaying its config")
        document = document["config"]
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"{source}: {problems}")


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    return parse_run_config(text, str(path))
