import numpy as np
import pytest

from checks.instances import random_measure
from engine.dynamics import (
    J,
    Diagnostics,
    GeostrophicFlow,
    Trajectory,
    conserved_diagnostics,
    rotate,
    simulate,
    transport_cost_deviation,
    transport_cost_drift,
    vector_field,
)
from engine.errors import SeparationLoss
from engine.geom2d import square
from engine.laguerre import DiscreteMeasure
from engine.oracles import single_mass_solution


def test_rotation_matrix_properties():
    np.testing.assert_array_equal(J, -J.T)
    np.testing.assert_array_equal(J @ J, -np.eye(2))
    v = np.array([[3.0, 4.0]])
    assert np.linalg.norm(rotate(v)) == pytest.approx(5.0)
    np.testing.assert_array_equal(rotate([[1.0, 0.0]]), [[0.0, 1.0]])


def test_single_seed_velocity():
    domain = square(-1.0, 1.0)
    velocities, weights = vector_field(domain, DiscreteMeasure([(1.0, 0.0)], [4.0]))
    np.testing.assert_allclose(velocities, [(0.0, 1.0)], atol=1e-15)
    np.testing.assert_array_equal(weights, [0.0])


def test_centroidal_grid_is_an_equilibrium(unit_square, grid_measure):
    velocities, _ = vector_field(unit_square, grid_measure(5))
    assert np.abs(velocities).max() < 1e-12


def test_symmetric_pair_is_an_equilibrium(unit_square):
    measure = DiscreteMeasure([(0.25, 0.5), (0.75, 0.5)], [0.5, 0.5])
    velocities, _ = vector_field(unit_square, measure)
    assert np.abs(velocities).max() < 1e-10


def test_equilibrium_step_leaves_seeds_in_place(unit_square, grid_measure):
    flow = GeostrophicFlow(unit_square, tol=1e-6)
    state = flow.state_at(0.0, grid_measure(4))
    after = flow.rk4_step(state, 0.1)
    assert after.failure is None
    assert after.t == pytest.approx(0.1)
    np.testing.assert_allclose(after.measure.seeds, state.measure.seeds, atol=1e-12)


def test_energy_mechanism_is_skew(unit_square, rng):
    measure = random_measure(rng, 30, unit_square)
    flow = GeostrophicFlow(unit_square, tol=1e-6)
    state = flow.state_at(0.0, measure)
    # W = J (z - x) gives z - x = -J W
    displacement = -rotate(state.velocities)
    power = float(np.sum(measure.masses[:, None] * displacement * state.velocities))
    assert abs(power) < 1e-10


def test_rk4_step_matches_single_mass_rotation():
    domain = square(-1.0, 1.0)
    flow = GeostrophicFlow(domain)
    state = flow.state_at(0.0, DiscreteMeasure([(1.0, 0.0)], [4.0]))
    for _ in range(10):
        state = flow.rk4_step(state, 0.01)
    exact = single_mass_solution(domain, (1.0, 0.0), state.t)
    np.testing.assert_allclose(state.measure.seeds[0], exact, atol=1e-9)


def test_rk4_step_is_atomic_on_failure(unit_square):
    measure = DiscreteMeasure([(0.5, 0.5), (0.5 + 1e-6, 0.5)], [0.5, 0.5])
    flow = GeostrophicFlow(unit_square, sep_floor=1e-9)
    state = flow.state_at(0.0, measure)
    strict = GeostrophicFlow(unit_square, sep_floor=1e-3)
    after = strict.rk4_step(state, 0.01)
    assert after.failure is not None
    assert after.t == state.t
    assert after.measure is state.measure


def test_separation_floor_raises(unit_square):
    measure = DiscreteMeasure([(0.5, 0.5), (0.5 + 1e-6, 0.5)], [0.5, 0.5])
    with pytest.raises(SeparationLoss):
        GeostrophicFlow(unit_square, sep_floor=1e-3).solve(measure, None)


def test_simulate_records_every_step_and_snapshots():
    domain = square(-1.0, 1.0)
    initial = DiscreteMeasure([(0.5, 0.0)], [4.0])
    trajectory = simulate(domain, initial, T=1.0, h=0.1, snapshot_every=4)
    assert trajectory.error is None
    assert len(trajectory.times) == 11
    assert trajectory.times[-1] == pytest.approx(1.0)
    assert [round(s.t, 10) for s in trajectory.states] == [0.0, 0.4, 0.8, 1.0]


def test_simulate_truncates_last_step():
    domain = square(-1.0, 1.0)
    trajectory = simulate(domain, DiscreteMeasure([(0.5, 0.0)], [4.0]), T=0.25, h=0.1)
    assert trajectory.times[-1] == 0.25
    assert len(trajectory.times) == 4


def test_simulate_honours_snapshot_times():
    domain = square(-1.0, 1.0)
    trajectory = simulate(
        domain,
        DiscreteMeasure([(0.5, 0.0)], [4.0]),
        T=1.0,
        h=0.05,
        snapshot_every=1000,
        snapshot_times=[0.0, 0.5, 0.75, 1.0],
    )
    assert [round(s.t, 10) for s in trajectory.states] == [0.0, 0.5, 0.75, 1.0]


def test_simulate_calls_snapshot_hook():
    seen = []
    domain = square(-1.0, 1.0)
    simulate(
        domain,
        DiscreteMeasure([(0.5, 0.0)], [4.0]),
        T=0.2,
        h=0.1,
        on_snapshot=lambda s: seen.append(s.t),
    )
    assert len(seen) == 3


def test_simulate_rejects_unbalanced_measure(unit_square):
    with pytest.raises(ValueError):
        simulate(unit_square, DiscreteMeasure([(0.5, 0.5)], [2.0]), T=1.0, h=0.1)


def test_simulate_rejects_bad_step(unit_square):
    with pytest.raises(ValueError):
        simulate(unit_square, DiscreteMeasure([(0.5, 0.5)], [1.0]), T=1.0, h=2.0)


def test_simulate_aborts_with_partial_trajectory(unit_square):
    measure = DiscreteMeasure([(0.25, 0.5), (0.75, 0.5)], [0.5, 0.5])
    trajectory = simulate(unit_square, measure, T=1.0, h=0.1, sep_floor=1.0)
    assert trajectory.error is not None
    assert "separation" in trajectory.error
    assert trajectory.states == []


def test_single_seed_conserves_transport_cost():
    domain = square(-1.0, 1.0)
    trajectory = simulate(domain, DiscreteMeasure([(1.0, 0.0)], [4.0]), T=1.0, h=0.01)
    assert transport_cost_deviation(trajectory) < 1e-9


def test_diagnostics_fields(unit_square):
    measure = DiscreteMeasure([(0.25, 0.5), (0.75, 0.5)], [0.5, 0.5])
    diagnostics = conserved_diagnostics(unit_square, measure)
    assert diagnostics.transport_cost == pytest.approx(2 * 0.5 * 1.25 / 12.0)
    assert diagnostics.energy == pytest.approx(0.5 * diagnostics.transport_cost)
    assert diagnostics.min_separation == pytest.approx(0.5)
    assert diagnostics.max_area_error < 1e-15


def test_random_flow_stays_within_a_priori_bound(unit_square, rng):
    measure = random_measure(rng, 20, unit_square)
    T = 0.5
    trajectory = simulate(unit_square, measure, T=T, h=0.05, tol=1e-3)
    assert trajectory.error is None
    radius = np.linalg.norm(unit_square.vertices, axis=1).max()
    start = np.linalg.norm(measure.seeds, axis=1)
    for state in trajectory.states:
        bound = start + radius * state.t + 1e-6
        assert np.all(np.linalg.norm(state.measure.seeds, axis=1) <= bound)


@pytest.mark.slow
def test_gaussian_desk_run_conserves_transport_cost():
    from checks.base_check import VerifyOptions
    from checks.conservation_check import ConservationCheck

    result = ConservationCheck().run(VerifyOptions())
    assert result.passed, result.details


def test_transport_cost_drift_is_relative_to_the_mean():
    trajectory = Trajectory(
        diagnostics=[Diagnostics(cost, 0.0, 1.0, 0.0) for cost in (2.0, 2.2, 1.8, 2.0)]
    )
    assert transport_cost_deviation(trajectory) == pytest.approx(0.2)
    assert transport_cost_drift(trajectory) == pytest.approx(0.1)
    still = Trajectory(diagnostics=[Diagnostics(0.0, 0.0, 1.0, 0.0)] * 2)
    assert transport_cost_drift(still) == 0.0


@pytest.mark.slow
def test_refining_step_and_tolerance_reduces_drift():
    from checks.base_check import VerifyOptions
    from checks.conservation_check import RefinementCheck

    result = RefinementCheck().run(VerifyOptions())
    assert result.passed, result.details
