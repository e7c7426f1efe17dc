import os
from logging import getLogger
from pathlib import Path
from typing import Optional

from cli.models import InitialSpec, RunConfig
from cli.render import render_svg
from config import settings
from engine.dynamics import SimulationState, simulate, transport_cost_deviation
from engine.errors import ConfigError, SGFlowError
from engine.geom2d import ConvexPolygon
from engine.laguerre import DiscreteMeasure, build_diagram
from engine.quantize import lloyd_relax
from storage import TrajectoryStorage, read_seeds_csv

logger = getLogger(__name__)


def output_dir_for(config: RunConfig) -> Path:
    """SGFLOW_OUTPUT_DIR overrides the directory named in the config."""
    return Path(os.getenv("SGFLOW_OUTPUT_DIR") or settings.OUTPUT_DIR or config.output_dir)


def build_initial(
    initial: InitialSpec, domain: ConvexPolygon, workers: Optional[int] = None
) -> DiscreteMeasure:
    """
    Initial measure from a density (Lloyd quantization), explicit data or a seeds CSV.

    Stored weights in a seeds CSV are ignored so a replay solves from the
    same starting weights as the original run.

    Raises:
        ConfigError: if explicit masses do not add up to the domain area.
    """
    if initial.density is not None:
        try:
            density = initial.density.build(domain)
        except (OSError, ValueError) as e:
            raise ConfigError(f"initial.density: {e}")
        result = lloyd_relax(
            density,
            initial.n,
            initial.lloyd_iterations,
            initial.rng_seed,
            tol=initial.lloyd_tol,
            workers=workers,
        )
        return result.measure

    if initial.seeds_csv is not None:
        measure, _ = read_seeds_csv(initial.seeds_csv)
    else:
        try:
            measure = DiscreteMeasure(initial.seeds, initial.masses)
        except ValueError as e:
            raise ConfigError(f"initial: {e}")
    try:
        measure.check_balance(domain)
    except ValueError as e:
        raise ConfigError(f"initial: {e}")
    return measure


def run(config: RunConfig) -> int:
    """
    Quantize, integrate and persist one run.

    Everything that can be rejected up front (domain, initial data) is
    checked before the output directory is touched. A solver failure during
    the integration flushes the snapshots reached so far and marks the
    manifest as failed.

    Returns:
        0 on success, 1 if the integration aborted.
    """
    try:
        domain = config.domain.build()
    except SGFlowError as e:
        raise ConfigError(f"domain: {e}")
    workers = config.solver.workers
    initial = build_initial(config.initial, domain, workers)

    storage = TrajectoryStorage(output_dir_for(config))
    storage.prepare()
    rng_seed = config.initial.rng_seed if config.initial.density is not None else None
    storage.start_run(config.model_dump(mode="json"), rng_seed)

    def on_snapshot(state: SimulationState) -> None:
        diagram = build_diagram(domain, state.measure, state.warm_weights, workers)
        storage.store_snapshot(state, render_svg(domain, diagram, state.measure))

    logger.info(f"Starting run with {initial.n} seeds, T={config.T}, h={config.h}")
    try:
        trajectory = simulate(
            domain,
            initial,
            config.T,
            config.h,
            tol=config.tol,
            snapshot_every=config.snapshot_every,
            snapshot_times=config.snapshot_times,
            sep_floor=config.sep_floor,
            method=config.solver.method,
            workers=workers,
            max_iter=config.solver.max_iter,
            on_snapshot=on_snapshot,
            config=config.model_dump(mode="json"),
        )
    except Exception as e:
        logger.error(f"Run aborted unexpectedly: {e}", exc_info=True)
        storage.store_failed_run(str(e))
        raise

    if trajectory.diagnostics:
        storage.store_diagnostics(trajectory)
    summary = {
        "seeds": initial.n,
        "steps": max(len(trajectory.times) - 1, 0),
        "final_t": trajectory.times[-1] if trajectory.times else None,
        "snapshots": len(storage.snapshots),
    }
    if trajectory.diagnostics:
        summary["transport_cost_deviation"] = transport_cost_deviation(trajectory)

    if trajectory.error is not None:
        storage.store_failed_run(trajectory.error, summary)
        logger.error(f"Run failed: {trajectory.error}")
        return 1

    storage.complete_run(summary)
    logger.info(f"Run completed: {summary}")
    return 0
