import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ArgumentError, NotInMdError, SymmetralBoxError
from core.grids import UniformGrid
from geometry.catalog import cross, disc, hexagon, square
from gridcalc.catalog import bump, tent
from gridcalc.fields import GridFunction
from rearrangement.profiles import (
    NONDECREASING,
    NONINCREASING,
    Profile,
    decreasing_rearrangement,
    distribution,
    increasing_rearrangement,
    level_values,
    nodal_rearrangement,
)
from rearrangement.symmetrization import integrand_symmetral, symmetral, triple_symmetral
from young.catalog import quadratic, radial
from young.functions import Young1D


class ProfileTests(SimpleTestCase):
    def test_interpolates_and_clamps(self):
        profile = Profile(np.array([0.0, 1.0, 2.0]), np.array([3.0, 2.0, 0.0]))
        np.testing.assert_allclose(profile([-1.0, 0.5, 1.5, 5.0]), [3.0, 2.5, 1.0, 0.0])

    def test_jump_follows_continuity(self):
        bp, vals = np.array([0.0, 1.0, 1.0, 2.0]), np.array([2.0, 2.0, 1.0, 0.0])
        self.assertEqual(float(Profile(bp, vals, continuity="right")(1.0)), 1.0)
        self.assertEqual(float(Profile(bp, vals, continuity="left")(1.0)), 2.0)

    def test_fill_values(self):
        profile = Profile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), NONDECREASING, fill_above=np.inf)
        self.assertTrue(np.isinf(profile(2.0)))
        self.assertEqual(float(profile(0.5)), 0.5)

    def test_rejects_bad_tables(self):
        with self.assertRaises(ArgumentError):
            Profile(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        with self.assertRaises(ArgumentError):
            Profile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), NONINCREASING)
        with self.assertRaises(ArgumentError):
            Profile(np.array([0.0, 1.0]), np.array([0.0]))
        with self.assertRaises(ArgumentError):
            Profile(np.array([0.0, 1.0]), np.array([1.0, 0.0]), continuity="middle")

    def test_inverse_swaps_roles(self):
        profile = Profile(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        inverse = profile.inverse()
        self.assertEqual(inverse.interpretation, NONINCREASING)
        self.assertAlmostEqual(float(inverse(0.25)), 0.75)

    def test_export_writes_convention_header(self):
        profile = Profile(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        with tempfile.TemporaryDirectory() as tmp:
            path = profile.export_csv(Path(tmp) / "profile.csv", "t", "mu")
            text = path.read_text()
        self.assertTrue(text.startswith("# convention: right-continuous nonincreasing"))
        self.assertIn("t,mu", text)

    def test_level_values(self):
        self.assertEqual(len(level_values(0.0, 1.0, 11)), 11)
        np.testing.assert_allclose(level_values(2.0, 2.0, 11), [2.0])


class DistributionTests(SimpleTestCase):
    def setUp(self):
        self.u = tent(square(), UniformGrid.box(1.6, 161, 2))

    def test_distribution_of_square_tent(self):
        mu = distribution(self.u, count=64)
        # |{u > t}| = 4 (1 - t)^2
        self.assertAlmostEqual(float(mu(0.5)), 1.0, delta=0.08)
        self.assertAlmostEqual(float(mu(0.0)), 4.0, delta=0.2)
        self.assertTrue(np.all(np.diff(mu.values) <= 0))

    def test_decreasing_rearrangement_inverts_distribution(self):
        u_star = decreasing_rearrangement(distribution(self.u, count=256))
        # u*(s) = 1 - sqrt(s) / 2
        self.assertAlmostEqual(float(u_star(1.0)), 0.5, delta=0.03)
        self.assertAlmostEqual(float(u_star(100.0)), 0.0)

    def test_larger_field_has_larger_rearrangement(self):
        v = GridFunction(self.u.grid, self.u.values + 0.3 * bump(square(), self.u.grid).values, boundary_value=0.0)
        levels = level_values(0.0, float(np.max(v.values)), 256)
        u_star = decreasing_rearrangement(distribution(self.u, levels=levels))
        v_star = decreasing_rearrangement(distribution(v, levels=levels))
        s = np.linspace(0.0, 5.0, 400)
        self.assertTrue(np.all(u_star(s) <= v_star(s) + 1e-12))

    def test_nodal_rearrangement_of_square_tent(self):
        u_star = nodal_rearrangement(self.u)
        # u*(s) = 1 - sqrt(s) / 2
        for s in (0.25, 1.0, 2.25):
            self.assertAlmostEqual(float(u_star(s)), 1.0 - np.sqrt(s) / 2.0, delta=0.01)
        self.assertEqual(float(u_star(100.0)), 0.0)
        self.assertAlmostEqual(float(u_star.breakpoints[-1]), self.u.volume_above(0.0))

    def test_nodal_rearrangement_keeps_plateaus(self):
        grid = UniformGrid.box(1.0, 21, 2)
        plateau = GridFunction(grid, np.where(square().gauge(grid.coordinates) <= 0.5, 1.0, 0.0), boundary_value=0.0)
        u_star = nodal_rearrangement(plateau)
        self.assertEqual(float(u_star(0.5 * plateau.volume_above(0.0))), 1.0)
        self.assertEqual(float(u_star(2.0 * plateau.volume_above(0.0))), 0.0)

    def test_increasing_rearrangement_needs_volume_profile(self):
        with self.assertRaises(ArgumentError):
            increasing_rearrangement(distribution(self.u, count=16))
        volume = Profile(np.array([0.0, 1.0]), np.array([0.0, 2.0]), NONDECREASING)
        rearranged = increasing_rearrangement(volume)
        self.assertAlmostEqual(float(rearranged(1.0)), 0.5)
        self.assertTrue(np.isinf(rearranged(3.0)))


class SymmetralTests(SimpleTestCase):
    def test_symmetral_is_equimeasurable(self):
        grid = UniformGrid.box(1.85, 129, 2)
        u = tent(hexagon(), grid)
        uK = symmetral(u, square())
        for t in (0.2, 0.5, 0.8):
            self.assertAlmostEqual(uK.volume_above(t), u.volume_above(t), delta=0.15)
        self.assertAlmostEqual(float(np.max(uK.values)), float(np.max(u.values)), delta=0.03)

    def test_super_level_sets_are_dilates_of_K(self):
        grid = UniformGrid.box(1.6, 97, 2)
        uK = symmetral(tent(disc(64), grid), square())
        coordinates = grid.coordinates
        inside = uK.values > 0.5
        gauge = square().gauge(coordinates)
        self.assertLess(float(np.max(gauge[inside])), float(np.min(gauge[~inside & (gauge < 1.0)])) + 1e-9)

    def test_symmetral_of_symmetral_is_the_same_field(self):
        grid = UniformGrid.box(1.85, 129, 2)
        uK = symmetral(tent(hexagon(), grid), square())
        self.assertIs(symmetral(uK, square()), uK)
        # a fresh field with the same values, so nothing but the values is shared
        copy = GridFunction(uK.grid, uK.values.copy(), boundary_value=uK.boundary_value)
        again = symmetral(copy, square())
        self.assertLessEqual(float(np.max(np.abs(again.values - uK.values))), 1e-12)

    def test_symmetric_field_is_its_own_symmetral(self):
        grid = UniformGrid.box(1.6, 97, 2)
        u = bump(disc(64), grid)
        self.assertLessEqual(float(np.max(np.abs(symmetral(u, disc(64)).values - u.values))), 1e-12)

    def test_support_outside_the_box(self):
        u = tent(square(), UniformGrid.box(1.05, 65, 2))
        with self.assertRaises(SymmetralBoxError):
            symmetral(u, cross())

    def test_field_not_vanishing_at_the_rim(self):
        grid = UniformGrid.box(1.0, 33, 2)
        slope = GridFunction(grid, grid.coordinates[..., 0] + 2.0, boundary_value=1.0)
        with self.assertRaises(NotInMdError):
            symmetral(slope, square())


class IntegrandSymmetralTests(SimpleTestCase):
    def test_quadratic_with_a_disc_is_unchanged(self):
        phi_K = integrand_symmetral(quadratic(), disc(256))
        points = np.array([[0.5, 0.5], [1.0, 0.0], [0.0, -1.2]])
        np.testing.assert_allclose(phi_K(points), quadratic()(points), atol=0.03)

    def test_sub_level_sets_are_dilates_of_minus_K(self):
        phi_K = integrand_symmetral(quadratic(), square())
        # {Phi_K <= s} = r(s) (-K) with 4 r^2 = |{|xi|^2/2 <= s}| = 2 pi s
        self.assertAlmostEqual(float(phi_K.sublevel_radius(0.5)), np.sqrt(np.pi / 4.0), delta=0.02)
        np.testing.assert_allclose(phi_K.sublevel_support(0.5, [[1.0, 0.0]]), [np.sqrt(np.pi / 4.0)], atol=0.02)

    def test_levels_above_the_ceiling_are_infinite(self):
        phi_K = integrand_symmetral(quadratic(), disc(64))
        self.assertAlmostEqual(phi_K.level_ceiling(), 2.0)
        self.assertTrue(np.isinf(phi_K([[3.0, 0.0]])[0]))

    def test_triple_symmetral_of_quadratic_with_disc(self):
        grid = UniformGrid.box(2.0, 65, 2)
        triple = triple_symmetral(quadratic(), disc(128), grid)
        inner = grid.inner_mask(0.5)
        expected = quadratic()(grid.coordinates)
        np.testing.assert_allclose(triple.values[inner], expected[inner], atol=0.05)

    def test_triple_symmetral_with_the_matching_body_is_a_fixed_point(self):
        # the conjugate of h_square(xi)^2 has square sub-level sets; gradients on the inner box stay inside the grid
        grid = UniformGrid.box(2.0, 129, 2)
        phi = radial(Young1D.parse("power,2"), square())
        triple = triple_symmetral(phi, square(), grid)
        inner = grid.inner_mask(0.2)
        expected = phi(grid.coordinates)
        lipschitz = 2.0 * np.sqrt(2.0) * float(np.max(square().support(grid.coordinates[inner])))
        bound = 3.0 * grid.max_spacing * lipschitz
        self.assertLessEqual(float(np.max(np.abs(triple.values[inner] - expected[inner]))), bound)
