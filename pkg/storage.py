import csv
import json
from datetime import datetime, timezone
from logging import getLogger
from pathlib import Path
from typing import Optional

import numpy as np
import pydantic
import scipy

from engine.dynamics import SimulationState, Trajectory
from engine.errors import ConfigError
from engine.laguerre import DiscreteMeasure, WeightVector

logger = getLogger(__name__)

SEED_COLUMNS = ["index", "x", "y", "mass", "weight"]
DIAGNOSTIC_COLUMNS = ["t", "transport_cost", "energy", "min_separation", "max_area_error"]
MANIFEST_NAME = "run_manifest.json"


def _fmt(value: float) -> str:
    # 17 significant digits round-trip every double
    return format(float(value), ".17g")


class TrajectoryStorage:
    """File-backed store for the artifacts of one simulation run."""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.snapshots: list[dict] = []
        self.manifest: dict = {}

    def prepare(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Writing run artifacts to {self.output_dir}")

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / MANIFEST_NAME

    def start_run(self, config: dict, rng_seed: Optional[int]) -> Path:
        """Write the manifest with status 'running'."""
        self.manifest = {
            "status": "running",
            "started_at": datetime.now(timezone.utc).isoformat(),
            "config": config,
            "rng_seed": rng_seed,
            "versions": {
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "pydantic": pydantic.VERSION,
            },
            "snapshots": self.snapshots,
        }
        return self._write_manifest()

    def store_snapshot(self, state: SimulationState, svg: Optional[str] = None) -> Path:
        """
        Write seeds_####.csv (and snapshot_####.svg when `svg` is given).

        Returns:
            Path of the seeds CSV.
        """
        index = len(self.snapshots)
        seeds_path = self.output_dir / f"seeds_{index:04d}.csv"
        write_seeds_csv(seeds_path, state.measure, state.warm_weights)
        entry = {"index": index, "t": state.t, "seeds": seeds_path.name}
        if svg is not None:
            svg_path = self.output_dir / f"snapshot_{index:04d}.svg"
            svg_path.write_text(svg, encoding="utf-8")
            entry["svg"] = svg_path.name
        self.snapshots.append(entry)
        logger.debug(f"Stored snapshot {index} at t={state.t:.6g}")
        return seeds_path

    def store_diagnostics(self, trajectory: Trajectory) -> Path:
        path = self.output_dir / "diagnostics.csv"
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(DIAGNOSTIC_COLUMNS)
            for t, d in zip(trajectory.times, trajectory.diagnostics):
                writer.writerow(
                    [
                        _fmt(t),
                        _fmt(d.transport_cost),
                        _fmt(d.energy),
                        _fmt(d.min_separation),
                        _fmt(d.max_area_error),
                    ]
                )
        logger.info(f"Stored {len(trajectory.times)} diagnostic rows in {path}")
        return path

    def complete_run(self, summary: dict) -> Optional[Path]:
        self.manifest.update(
            status="completed",
            finished_at=datetime.now(timezone.utc).isoformat(),
            summary=summary,
        )
        return self._write_manifest()

    def store_failed_run(
        self, error_message: str, summary: Optional[dict] = None
    ) -> Optional[Path]:
        """
        Mark the run as failed, keeping whatever snapshots were written.

        Returns:
            The manifest path, or None if the manifest itself could not be written.
        """
        logger.info(f"Recording failed run in {self.manifest_path}")
        self.manifest.update(
            status="failed",
            finished_at=datetime.now(timezone.utc).isoformat(),
            error_message=error_message,
        )
        if summary is not None:
            self.manifest["summary"] = summary
        try:
            return self._write_manifest()
        except OSError as e:
            logger.error(f"Failed to write failed-run manifest: {e}", exc_info=True)
            return None

    def _write_manifest(self) -> Path:
        path = self.manifest_path
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self.manifest, indent=2))
        tmp.replace(path)
        return path


def write_seeds_csv(path, measure: DiscreteMeasure, weights: WeightVector) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SEED_COLUMNS)
        for i, ((x, y), m, w) in enumerate(zip(measure.seeds, measure.masses, weights)):
            writer.writerow([i, _fmt(x), _fmt(y), _fmt(m), _fmt(w)])


def read_seeds_csv(path) -> tuple[DiscreteMeasure, WeightVector]:
    """
    Load a seeds CSV written by `write_seeds_csv`.

    Raises:
        ConfigError: if the file is missing or its columns are wrong.
    """
    path = Path(path)
    try:
        with open(path, "r", newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise ConfigError(f"Cannot read seeds file {path}: {e}")
    if not rows or set(SEED_COLUMNS) - set(rows[0]):
        raise ConfigError(f"{path}: expected columns {', '.join(SEED_COLUMNS)}")
    rows.sort(key=lambda row: int(row["index"]))
    try:
        seeds = np.array([[float(row["x"]), float(row["y"])] for row in rows])
        masses = np.array([float(row["mass"]) for row in rows])
        weights = np.array([float(row["weight"]) for row in rows])
        measure = DiscreteMeasure(seeds, masses)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}")
    return measure, weights
