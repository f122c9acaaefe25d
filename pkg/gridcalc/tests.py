import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ArgumentError, CatalogParseError, GradientRangeError, InputFileError
from core.grids import UniformGrid
from geometry.catalog import disc, hexagon, simplex, square
from gridcalc.catalog import bump, parse_field, radial_tent, tent
from gridcalc.coarea import (
    band_mask,
    chain_levels,
    default_band_width,
    inverse_gradient,
    level_integral,
    mu_prime_chain,
    nonvanishing,
)
from gridcalc.fields import GridFunction, constant_like, dirichlet_functional, gradient, truncate, truncate_below
from gridcalc.io import read_grid_csv, read_young_csv, write_grid_csv
from rearrangement.symmetrization import symmetral
from young.catalog import quadratic, radial
from young.functions import Young1D, as_sampled


def cone(resolution=161):
    grid = UniformGrid.box(1.6, resolution, 2)
    return GridFunction(grid, radial_tent(grid, [0.0, 0.0], 1.0, 1.0), boundary_value=0.0, label="cone")


class GridFunctionTests(SimpleTestCase):
    def test_rejects_mismatched_or_non_finite_values(self):
        grid = UniformGrid.box(1.0, 9, 2)
        with self.assertRaises(ArgumentError):
            GridFunction(grid, np.zeros((9, 8)))
        values = np.zeros(grid.shape)
        values[4, 4] = np.inf
        with self.assertRaises(ArgumentError):
            GridFunction(grid, values)

    def test_boundary_value_defaults_to_the_rim(self):
        u = tent(square(), UniformGrid.box(1.5, 31, 2))
        self.assertEqual(u.essinf, 0.0)
        self.assertEqual(u.esssup, 1.0)

    def test_gradient_of_a_linear_field_is_exact(self):
        grid = UniformGrid.box(1.0, 17, 2)
        u = GridFunction(grid, 2.0 * grid.coordinates[..., 0] - grid.coordinates[..., 1], boundary_value=0.0)
        field = gradient(u)
        self.assertEqual(field.shape, (17, 17, 2))
        np.testing.assert_allclose(field[..., 0], 2.0)
        np.testing.assert_allclose(field[..., 1], -1.0)

    def test_truncate_clamps_values_and_gradient(self):
        u = cone(65)
        clipped = truncate(u, 0.25, 0.75)
        self.assertAlmostEqual(float(np.min(clipped.values)), 0.25)
        self.assertAlmostEqual(float(np.max(clipped.values)), 0.75)
        self.assertEqual(clipped.essinf, 0.25)
        flat = (u.values <= 0.25) | (u.values >= 0.75)
        self.assertTrue(np.all(clipped.gradient()[flat] == 0.0))
        with self.assertRaises(ArgumentError):
            truncate(u, 0.5, 0.5)

    def test_truncate_below(self):
        truncated = truncate_below(cone(65), 0.5)
        self.assertEqual(truncated.essinf, 0.5)
        self.assertEqual(float(np.max(truncated.values)), 1.0)

    def test_difference_of_fields_keeps_chain_rule_gradient(self):
        u = cone(65)
        difference = u - truncate(u, 0.0, 0.5)
        np.testing.assert_allclose(difference.values, np.maximum(u.values - 0.5, 0.0))
        untouched = (u.values >= 0.5) | (u.values <= 0.0)
        np.testing.assert_allclose(difference.gradient(), u.gradient() * untouched[..., None])

    def test_dirichlet_functional_of_square_tent(self):
        u = tent(square(), UniformGrid.box(1.6, 161, 2))
        # |grad u| = 1 on the square of area 4
        self.assertAlmostEqual(dirichlet_functional(u, quadratic()), 2.0, delta=0.1)
        self.assertEqual(dirichlet_functional(constant_like(u.grid, 3.0), quadratic()), 0.0)

    def test_gradient_outside_the_young_box(self):
        u = tent(square(), UniformGrid.box(1.6, 65, 2))
        small = as_sampled(quadratic(), UniformGrid.box(0.5, 33, 2))
        with self.assertRaises(GradientRangeError):
            dirichlet_functional(u, small)
        self.assertTrue(np.isinf(dirichlet_functional(u, small, strict=False)))

    def test_tent_energy_is_pi(self):
        grid = UniformGrid.box(1.6, 256, 2)
        u = GridFunction(grid, radial_tent(grid, [0.0, 0.0], 1.0, 1.0), boundary_value=0.0)
        # |grad u| = 1 on the unit disc
        energy = dirichlet_functional(u, radial(Young1D.parse("power,2")))
        self.assertAlmostEqual(energy / np.pi, 1.0, delta=0.03)

    def test_dirichlet_functional_splits_at_a_level(self):
        u = cone(129)
        t = 0.437
        whole = dirichlet_functional(u, quadratic())
        below = dirichlet_functional(truncate(u, -1.0, t), quadratic())
        above = dirichlet_functional(truncate_below(u, t), quadratic())
        self.assertAlmostEqual(below + above, whole, delta=1e-9 * whole)
        self.assertGreater(below, 0.0)
        self.assertGreater(above, 0.0)

    def test_coarsen(self):
        u = cone(65)
        coarse = u.coarsen(2)
        self.assertEqual(coarse.grid.shape, (33, 33))
        np.testing.assert_allclose(coarse.values, u.values[::2, ::2])


class CoareaTests(SimpleTestCase):
    def test_level_integral_of_the_cone(self):
        u = cone()
        # {u = t} is a circle of radius 1 - t and |grad u| = 1
        for t in (0.3, 0.5):
            self.assertAlmostEqual(level_integral(u, nonvanishing(u), t, 0.05), 2 * np.pi * (1 - t), delta=0.15)

    def test_empty_band(self):
        u = cone(65)
        self.assertEqual(level_integral(u, 1.0, 5.0, 0.1), 0.0)

    def test_inverse_gradient_vanishes_on_flat_parts(self):
        u = cone(65)
        weights = inverse_gradient(u)
        self.assertTrue(np.all(weights[u.values == 0.0] == 0.0))
        inside = (u.values > 0.2) & (u.values < 0.8)
        np.testing.assert_allclose(weights[inside], 1.0, atol=0.05)

    def test_chain_levels_stay_inside_the_range(self):
        levels = chain_levels(cone(65), count=5, margin=0.1)
        np.testing.assert_allclose(levels, [0.1, 0.3, 0.5, 0.7, 0.9])
        flat = constant_like(UniformGrid.box(1.0, 9, 2), 1.0)
        self.assertEqual(chain_levels(flat).size, 0)

    def test_bands_that_tile_the_range_add_up_to_the_functional(self):
        u = cone()
        energy = quadratic()(u.gradient())
        dt = 1.0 / 16.0
        total = sum(level_integral(u, energy, t, dt) * dt for t in dt * (np.arange(16) + 0.5))
        expected = float(np.sum(energy[u.values > 0.0])) * u.grid.cell_volume
        self.assertAlmostEqual(total, expected, delta=1e-9 * expected)
        # |grad u|^2 / 2 = 1/2 on the unit disc
        self.assertAlmostEqual(total / (np.pi / 2.0), 1.0, delta=0.05)

    def test_mu_prime_chain_inequality_on_an_asymmetric_field(self):
        u = bump(simplex(), UniformGrid.box(1.6, 161, 2))
        frame = mu_prime_chain(u, square())
        self.assertGreater(len(frame), 0)
        self.assertGreaterEqual(frame["inequality_holds"].mean(), 0.95)

    def test_mu_prime_chain_matches_level_integrals(self):
        frame = mu_prime_chain(cone(), disc(64), levels=[0.3, 0.5, 0.7])
        self.assertEqual(list(frame["t"]), [0.3, 0.5, 0.7])
        for row in frame.itertuples():
            self.assertAlmostEqual(row.level_u / row.minus_mu_prime, 1.0, delta=0.1)
            self.assertAlmostEqual(row.level_uK / row.minus_mu_prime, 1.0, delta=0.15)


class SymmetralGradientTests(SimpleTestCase):
    def setUp(self):
        self.grid = UniformGrid.box(1.85, 257, 2)
        self.uK = symmetral(tent(hexagon(), self.grid), square())

    def test_gradient_is_parallel_to_the_gauge_gradient(self):
        x = self.grid.coordinates
        h = self.grid.max_spacing
        # off the diagonals the square gauge is |x1|, so grad u^K points along -sign(x1) e1
        face = (np.abs(x[..., 0]) > np.abs(x[..., 1]) + 2.0 * h) & (self.uK.values > 0.05) & (self.uK.values < 0.95)
        gradient = self.uK.gradient()[face]
        self.assertLessEqual(float(np.max(np.abs(gradient[:, 1]))), 1e-12)
        self.assertTrue(np.all(gradient[:, 0] * np.sign(x[face][:, 0]) < 0.0))

    def test_support_of_the_gradient_is_constant_on_level_sets(self):
        weight = nonvanishing(self.uK)
        dt = default_band_width(self.uK)
        for t in (0.3, 0.5, 0.7):
            band = band_mask(self.uK, t, dt) & (weight > 0)
            tau = square().support(-self.uK.gradient()[band])
            self.assertLess(float((np.max(tau) - np.min(tau)) / np.median(tau)), 0.25, msg=f"t={t}")


class GridIoTests(SimpleTestCase):
    def test_round_trip(self):
        u = cone(33)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_grid_csv(Path(tmp) / "u.csv", u.grid, u.values)
            self.assertIn("# res: 33 33\n", path.read_text())
            grid, values = read_grid_csv(path)
        self.assertEqual(grid, u.grid)
        np.testing.assert_array_equal(values, u.values)

    def test_young_file_keeps_infinite_values(self):
        grid = UniformGrid.box(1.0, 5, 2)
        values = np.full(grid.shape, np.inf)
        values[1:4, 1:4] = 0.0
        with tempfile.TemporaryDirectory() as tmp:
            path = write_grid_csv(Path(tmp) / "phi.csv", grid, values)
            phi = read_young_csv(path)
        self.assertEqual(phi.label, "phi")
        self.assertEqual(int(np.count_nonzero(np.isinf(phi.values))), 16)

    def test_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            missing_header = Path(tmp) / "a.csv"
            missing_header.write_text("1,2\n3,4\n")
            wrong_count = Path(tmp) / "b.csv"
            wrong_count.write_text("# box: 0 1 0 1\n# res: 3 3\n1,2,3\n")
            for path in (missing_header, wrong_count, Path(tmp) / "absent.csv"):
                with self.assertRaises(InputFileError):
                    read_grid_csv(path)


class FieldCatalogTests(SimpleTestCase):
    def test_named_fields(self):
        u = parse_field("tent:square", resolution=33)
        self.assertEqual(u.label, "tent:square")
        self.assertAlmostEqual(u.grid.upper[0], 1.6 * square().max_radius())
        self.assertEqual(parse_field("twobump", resolution=33).essinf, 0.0)
        self.assertEqual(parse_field("paraboloid", dim=3, resolution=17).dim, 3)

    def test_random_fields_are_seeded(self):
        first = parse_field("random:2", resolution=33, seed=4)
        second = parse_field("random:2", resolution=33, seed=4)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertFalse(np.array_equal(first.values, parse_field("random:2", resolution=33, seed=5).values))

    def test_parse_errors(self):
        for spec in ("", "tent", "random:x", "random:0", "wave", "csv"):
            with self.assertRaises(CatalogParseError):
                parse_field(spec, resolution=33)
