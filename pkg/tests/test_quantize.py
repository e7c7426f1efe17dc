import numpy as np
import pytest
from scipy.special import erf

from engine.geom2d import ConvexPolygon, square
from engine.laguerre import DiscreteMeasure, build_diagram
from engine.quantize import (
    DensitySpec,
    density_cell_energy,
    density_cell_moments,
    lloyd_quantize,
    lloyd_relax,
    sample_density,
    well_prepare,
)

EXP_MINUS_R2 = 2.0**-0.5


def test_uniform_single_seed_goes_to_centroid(unit_square):
    measure = lloyd_quantize(DensitySpec.uniform(unit_square), 1, 3, rng_seed=7)
    np.testing.assert_allclose(measure.seeds, [(0.5, 0.5)], atol=1e-15)
    assert measure.masses[0] == pytest.approx(1.0)


def test_uniform_two_seeds_converge_to_symmetric_split(unit_square):
    result = lloyd_relax(DensitySpec.uniform(unit_square), 2, 2000, rng_seed=3, tol=1e-12)
    measure = result.measure
    np.testing.assert_allclose(measure.masses, [0.5, 0.5], atol=1e-8)
    np.testing.assert_allclose(measure.seeds.sum(axis=0), (1.0, 1.0), atol=1e-8)
    diagram = build_diagram(unit_square, measure, np.zeros(2))
    assert np.abs(diagram.centroids - measure.seeds).max() < 1e-8


def test_gaussian_mass_on_unit_square(unit_square):
    density = DensitySpec.gaussian(unit_square, (0.0, 0.0), EXP_MINUS_R2)
    expected = (np.sqrt(np.pi) / 2.0 * erf(1.0)) ** 2
    assert density_cell_moments(density, unit_square).mass == pytest.approx(expected, rel=1e-8)


def test_uniform_moments_are_exact(unit_square):
    cell = density_cell_moments(DensitySpec.uniform(unit_square), unit_square)
    assert cell.mass == pytest.approx(1.0)
    np.testing.assert_allclose(cell.weighted_centroid, (0.5, 0.5))


def test_empty_cell_has_zero_mass(unit_square):
    density = DensitySpec.gaussian(unit_square, (0.5, 0.5), 0.3)
    cell = density_cell_moments(density, ConvexPolygon.empty())
    assert cell.mass == 0.0
    assert density_cell_energy(density, ConvexPolygon.empty(), (0.0, 0.0)) == 0.0


def test_quadrature_is_exact_for_quadratics(unit_square):
    density = DensitySpec.gaussian(unit_square, (0.0, 0.0), 1e6)
    # rho is 1 up to 1e-12 here, so the energy is the polygon second moment
    energy = density_cell_energy(density, unit_square, (0.5, 0.5))
    assert energy == pytest.approx(1.0 / 6.0, rel=1e-10)


def test_lloyd_energy_is_non_increasing_uniform(unit_square):
    result = lloyd_relax(DensitySpec.uniform(unit_square), 30, 40, rng_seed=1)
    energies = np.array(result.energies)
    assert np.all(np.diff(energies) <= 1e-12 * energies[:-1])


def test_lloyd_energy_is_non_increasing_gaussian():
    domain = square(-1.0, 1.0)
    density = DensitySpec.gaussian(domain, (0.0, 0.0), EXP_MINUS_R2)
    result = lloyd_relax(density, 25, 30, rng_seed=2)
    energies = np.array(result.energies)
    assert np.all(np.diff(energies) <= 1e-8 * energies[:-1])


def test_masses_sum_to_support_area():
    domain = square(-1.0, 1.0)
    density = DensitySpec.gaussian(domain, (0.0, 0.0), EXP_MINUS_R2)
    measure = lloyd_quantize(density, 40, 10, rng_seed=5)
    assert measure.total_mass == pytest.approx(4.0, rel=1e-14)
    measure.check_balance(domain)


def test_same_seed_gives_identical_measure(unit_square):
    density = DensitySpec.uniform(unit_square)
    a = lloyd_quantize(density, 20, 5, rng_seed=11)
    b = lloyd_quantize(density, 20, 5, rng_seed=11)
    np.testing.assert_array_equal(a.seeds, b.seeds)
    np.testing.assert_array_equal(a.masses, b.masses)
    c = lloyd_quantize(density, 20, 5, rng_seed=12)
    assert not np.array_equal(a.seeds, c.seeds)


def test_early_stop_on_displacement(unit_square):
    result = lloyd_relax(DensitySpec.uniform(unit_square), 1, 50, rng_seed=0, tol=1e-9)
    assert result.iterations == 2
    assert result.displacement == pytest.approx(0.0, abs=1e-15)


def test_samples_lie_in_support(rng):
    disk_like = square(-1.0, 1.0)
    density = DensitySpec.gaussian(disk_like, (0.5, 0.5), 0.2)
    points = sample_density(density, 500, rng)
    assert points.shape == (500, 2)
    assert disk_like.contains(points).all()


def test_grid_density_from_csv(tmp_path, unit_square):
    xs = np.linspace(0.0, 1.0, 5)
    ys = np.linspace(0.0, 1.0, 3)
    path = tmp_path / "density.csv"
    rows = ["x,y,value"] + [f"{x},{y},{1.0 + x + 2.0 * y}" for x in xs for y in ys]
    path.write_text("\n".join(rows) + "\n")
    density = DensitySpec.from_grid_csv(path, unit_square)
    # bilinear interpolation reproduces a bilinear function
    values = density.evaluate([(0.3, 0.7), (0.9, 0.1)])
    np.testing.assert_allclose(values, [1.0 + 0.3 + 1.4, 1.0 + 0.9 + 0.2])
    assert density.evaluate([(2.0, 2.0)])[0] == 0.0
    assert density.max_value() == pytest.approx(4.0)


def test_grid_csv_must_be_a_lattice(tmp_path, unit_square):
    path = tmp_path / "broken.csv"
    path.write_text("0,0,1\n1,0,1\n0,1,1\n")
    with pytest.raises(ValueError):
        DensitySpec.from_grid_csv(path, unit_square)


def test_well_prepare_identity_when_distinct():
    measure = DiscreteMeasure([(0.1, 0.2), (0.3, 0.4)], [0.5, 0.5])
    assert well_prepare(measure) is measure


def test_well_prepare_separates_shared_coordinate():
    measure = DiscreteMeasure([(0.1, 0.5), (0.9, 0.5)], [0.5, 0.5])
    prepared = well_prepare(measure, axis=1, scale=0.01)
    assert prepared.seeds[0, 1] != prepared.seeds[1, 1]
    assert np.abs(prepared.seeds - measure.seeds).max() < 0.01
    np.testing.assert_array_equal(prepared.masses, measure.masses)


def test_well_prepare_spreads_a_line_of_seeds():
    seeds = np.column_stack([np.linspace(0.05, 0.95, 10), np.zeros(10)])
    measure = DiscreteMeasure(seeds, np.full(10, 0.1))
    prepared = well_prepare(measure)
    assert len(np.unique(prepared.seeds[:, 1])) == 10
    assert np.abs(prepared.seeds - seeds).max() < 0.1
    np.testing.assert_array_equal(prepared.seeds[:, 0], seeds[:, 0])


def test_density_validation(unit_square):
    with pytest.raises(ValueError):
        DensitySpec.gaussian(unit_square, (0.0, 0.0), -1.0)
    with pytest.raises(ValueError):
        DensitySpec("triangular", unit_square)
