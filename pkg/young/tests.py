import time

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import CatalogParseError, LevelGridTooShortError, ValidationError, YoungFunctionError
from core.grids import UniformGrid
from geometry.catalog import disc, hexagon, square
from young.catalog import indicator, parse_young, quadratic
from young.conjugation import (
    conjugate_fast,
    conjugate_oracle,
    conjugate_via_levelsets,
    convexify,
    fenchel_young_gap,
    involution_check,
    validate_young,
)
from rearrangement.symmetrization import integrand_symmetral
from young.functions import SampledYoung, Young1D, as_sampled, level_grid
from young.legendre import legendre_1d, lower_hull
from young.levelsets import (
    growth_limits,
    level_volume_profile,
    maximizer_profile,
    radial_factorization,
    sublevel_set,
)


class LegendreTests(SimpleTestCase):
    def test_lower_hull_drops_points_above(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        f = np.array([0.0, 2.0, 1.0, 3.0])
        np.testing.assert_array_equal(lower_hull(x, f), [0, 2, 3])

    def test_quadratic_transform(self):
        x = np.linspace(-3.0, 3.0, 601)
        s = np.linspace(-2.0, 2.0, 9)
        np.testing.assert_allclose(legendre_1d(x, 0.5 * x**2, s), 0.5 * s**2, atol=1e-12)

    def test_infinite_values_are_skipped(self):
        x = np.array([-1.0, 0.0, 1.0])
        f = np.array([np.inf, 0.0, np.inf])
        np.testing.assert_allclose(legendre_1d(x, f, np.array([-5.0, 5.0])), [0.0, 0.0])
        self.assertTrue(np.all(np.isneginf(legendre_1d(x, np.full(3, np.inf), np.array([1.0])))))


class Young1DTests(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(Young1D.parse("power,2,0.5").params, (2.0, 0.5))
        self.assertEqual(Young1D.parse("interval,3").kind, "interval")
        for spec in ("power", "power,0.5", "powerlog,2,1", "exp,-1", "cubic,2", "power,x"):
            with self.assertRaises(CatalogParseError):
                Young1D.parse(spec)

    def test_power_conjugates_in_closed_form(self):
        square_conj = Young1D.parse("power,2").conjugate()
        np.testing.assert_allclose(square_conj([0.0, 1.0, 4.0]), [0.0, 0.25, 4.0])
        cube_conj = Young1D.parse("power,3").conjugate()
        self.assertAlmostEqual(float(cube_conj(3.0)), 2.0 / (3.0 * np.sqrt(3.0)) * 3.0**1.5)

    def test_linear_and_interval_are_dual(self):
        linear = Young1D.parse("power,1,2")
        self.assertEqual(linear.conjugate(), Young1D("interval", (2.0,)))
        self.assertEqual(linear.conjugate().conjugate(), Young1D("power", (1.0, 2.0)))

    def test_exp_conjugate_is_tabulated(self):
        conj = Young1D.parse("exp,1").conjugate()
        self.assertEqual(conj.kind, "tabulated")
        self.assertAlmostEqual(float(conj(0.5)), 0.0, places=6)
        self.assertAlmostEqual(float(conj(2.0)), 2.0 * np.log(2.0) - 1.0, places=3)

    def test_inverses(self):
        A = Young1D.parse("power,2")
        np.testing.assert_allclose(A.inverse([0.0, 4.0]), [0.0, 2.0])
        interval = Young1D.parse("interval,1.5")
        np.testing.assert_allclose(interval.inverse([0.0, 10.0]), [1.5, 1.5])
        np.testing.assert_allclose(interval.left_inverse([0.0, 10.0]), [0.0, 1.5])
        self.assertAlmostEqual(float(Young1D.parse("exp,1").inverse(np.e - 1.0)), 1.0)

    def test_validate(self):
        Young1D.parse("powerlog,2,1,2").validate()
        with self.assertRaises(YoungFunctionError):
            Young1D.tabulated(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 1.5])).validate()

    def test_flags(self):
        self.assertTrue(Young1D.parse("power,2").strictly_convex)
        self.assertFalse(Young1D.parse("power,1").superlinear)
        self.assertTrue(Young1D.parse("interval,1").superlinear)


class YoungCatalogTests(SimpleTestCase):
    def test_values(self):
        self.assertAlmostEqual(float(parse_young("quad")([3.0, 4.0])), 12.5)
        self.assertAlmostEqual(float(parse_young("pnorm:2,4")([1.0, 2.0])), 4.5)
        self.assertAlmostEqual(float(parse_young("radial:power,2:square")([1.0, 1.0])), 4.0)
        self.assertAlmostEqual(float(parse_young("trud:2,1,1,2")([1.0, 0.0])), 1.0 + np.log(3.0))
        self.assertAlmostEqual(float(parse_young("trud1:2,1")([0.0, 0.0])), 0.0)
        self.assertEqual(parse_young("pnorm:2,3,4", 3).dim, 3)

    def test_closed_conjugates(self):
        conj = parse_young("pnorm:2,4").closed_conjugate()
        self.assertAlmostEqual(float(conj([1.0, 1.0])), 1.25)
        support = indicator(square()).closed_conjugate()
        self.assertAlmostEqual(float(support([1.0, -2.0])), 3.0)
        self.assertIsNone(parse_young("trud1:2,1").closed_conjugate().closed_conjugate())

    def test_indicator_values(self):
        phi = parse_young("indicator:square")
        np.testing.assert_array_equal(phi([[0.5, 0.5], [1.5, 0.0]]), [0.0, np.inf])

    def test_parse_errors(self):
        for spec in (
            "",
            "cubic",
            "pnorm:2",
            "pnorm:0.5,2",
            "exp:0.5",
            "trud:2,1",
            "trud1:2,0.5",
            "matrix:power,2;power,2:1,0;0,0",
            "indicator",
        ):
            with self.assertRaises(CatalogParseError):
                parse_young(spec)


class ConjugationTests(SimpleTestCase):
    def test_quadratic_is_self_conjugate(self):
        sampled = as_sampled(quadratic(), resolution=65)
        conj = conjugate_fast(sampled)
        mask = sampled.grid.inner_mask(0.5)
        self.assertLess(float(np.max(np.abs(conj.values[mask] - sampled.values[mask]))), 1e-9)
        self.assertLess(involution_check(sampled), 1e-8)

    def test_fast_path_matches_oracle(self):
        for spec in ("pnorm:2,4", "radial:power,2:hexagon", "indicator:cross", "trud1:2,1"):
            sampled = as_sampled(parse_young(spec), resolution=33)
            fast = conjugate_fast(sampled)
            oracle = conjugate_oracle(sampled)
            np.testing.assert_allclose(fast.values, oracle.values, atol=1e-10, err_msg=spec)

    def test_fast_path_approaches_closed_form(self):
        phi = parse_young("pnorm:2,3")
        sampled = as_sampled(phi, resolution=65)
        conj = conjugate_fast(sampled)
        exact = phi.closed_conjugate().sample(conj.grid)
        mask = conj.grid.inner_mask(0.5)
        self.assertLess(float(np.max(np.abs(conj.values[mask] - exact.values[mask]))), 0.01)

    def test_fast_path_matches_oracle_for_every_catalog_family(self):
        specs = (
            "quad",
            "pnorm:2,4",
            "powerlog:2,1,2",
            "exp:1",
            "radial:power,2:hexagon",
            "matrix:power,2;power,3:1,1;0,1",
            "trud:2,1,1,2",
            "trud1:2,1",
            "indicator:cross",
        )
        for spec in specs:
            sampled = as_sampled(parse_young(spec), resolution=33)
            fast = conjugate_fast(sampled)
            oracle = conjugate_oracle(sampled)
            np.testing.assert_allclose(fast.values, oracle.values, rtol=1e-12, atol=1e-10, err_msg=spec)

    def test_fast_path_is_faster_than_the_oracle(self):
        sampled = as_sampled(parse_young("pnorm:2,4"), resolution=97)
        start = time.perf_counter()
        conjugate_fast(sampled)
        fast = time.perf_counter() - start
        start = time.perf_counter()
        conjugate_oracle(sampled)
        oracle = time.perf_counter() - start
        self.assertLess(fast, oracle)

    def test_conjugation_reverses_order(self):
        smaller = as_sampled(parse_young("pnorm:2,4"), resolution=65)
        larger = smaller.with_values(smaller.values + 0.5 * np.sum(smaller.grid.coordinates**2, axis=-1))
        self.assertTrue(np.all(conjugate_fast(smaller).values >= conjugate_fast(larger).values - 1e-9))

    def test_involution_deviation_shrinks_under_refinement(self):
        phi = parse_young("pnorm:2,3")
        deviations = [involution_check(as_sampled(phi, UniformGrid.box(2.0, n, 2))) for n in (65, 129, 257)]
        self.assertLessEqual(deviations[1], deviations[0] + 1e-12)
        self.assertLessEqual(deviations[2], deviations[1] + 1e-12)

    def test_output_grid(self):
        sampled = as_sampled(quadratic(), resolution=33)
        out = UniformGrid.box(1.0, 17, 2)
        conj = conjugate_fast(sampled, out_grid=out)
        self.assertEqual(conj.grid, out)
        np.testing.assert_allclose(conj.values, 0.5 * np.sum(out.coordinates**2, axis=-1), atol=1e-12)

    def test_levelset_formula_tracks_oracle(self):
        sampled = as_sampled(quadratic(), resolution=65)
        oracle = conjugate_oracle(sampled)
        mask = sampled.grid.inner_mask(0.5)
        points = sampled.grid.coordinates[mask][::7]
        expected = oracle.values[mask][::7]
        found = conjugate_via_levelsets(sampled, points)
        self.assertTrue(np.all(found <= expected + 1e-9))
        self.assertLess(float(np.max(expected - found)), 0.06)

    def test_fenchel_young_gap_is_nonnegative(self):
        phi = parse_young("pnorm:2,4")
        grid = UniformGrid.box(2.0, 65, 2)
        self.assertGreaterEqual(fenchel_young_gap(phi.sample(grid), phi.closed_conjugate().sample(grid)), -1e-9)


class ValidationTests(SimpleTestCase):
    def bent(self):
        grid = UniformGrid.box(2.0, 65, 2)
        return SampledYoung(grid, np.minimum(np.sum(grid.coordinates**2, axis=-1), 1.0), label="bent")

    def test_catalog_functions_are_valid(self):
        for spec in ("quad", "pnorm:2,4", "radial:power,3:hexagon"):
            record = validate_young(parse_young(spec), grid=UniformGrid.box(2.0, 33, 2))
            self.assertTrue(record.is_valid, spec)

    def test_non_convex_samples_are_flagged(self):
        record = validate_young(self.bent())
        self.assertFalse(record.is_valid)
        self.assertTrue(any("convexity" in problem for problem in record.problems()))
        with self.assertRaises(ValidationError):
            validate_young(self.bent(), strict=True)

    def test_convexify_lowers_to_the_envelope(self):
        envelope, deviation = convexify(self.bent())
        self.assertGreater(deviation, 0.1)
        self.assertTrue(np.all(envelope.values <= self.bent().values + 1e-12))


class LevelSetTests(SimpleTestCase):
    def test_sublevel_set(self):
        sampled = as_sampled(quadratic(), resolution=65)
        inside = sublevel_set(sampled, 0.5)
        self.assertFalse(inside.truncated)
        self.assertAlmostEqual(inside.volume, np.pi, delta=0.15)
        self.assertTrue(sublevel_set(sampled, 3.0).truncated)

    def test_radial_factorization(self):
        factor = radial_factorization(Young1D.parse("power,2"), hexagon())
        xi = np.array([[1.0, 0.0], [0.3, -0.7]])
        np.testing.assert_allclose(factor.sublevel_support(4.0, xi), 2.0 * hexagon().gauge(xi))
        np.testing.assert_allclose(factor.conjugate_sublevel_support(1.0, xi), 2.0 * hexagon().support(xi))

    def test_radial_conjugate_matches_fast_path(self):
        factor = radial_factorization(Young1D.parse("power,2"), hexagon())
        sampled = as_sampled(factor.phi, resolution=129)
        conj = conjugate_fast(sampled)
        exact = factor.conjugate.sample(conj.grid)
        mask = conj.grid.inner_mask(0.5)
        self.assertLess(float(np.max(np.abs(conj.values[mask] - exact.values[mask]))), 0.03)

    def test_growth_limits(self):
        limits = growth_limits(quadratic(), grid=UniformGrid.box(2.0, 33, 2))
        self.assertTrue(limits.vanishes_at_zero)
        self.assertTrue(limits.superlinear)
        self.assertTrue(limits.large_increasing)
        flat = growth_limits(indicator(square()), grid=UniformGrid.box(1.5, 33, 2))
        self.assertFalse(flat.vanishes_at_zero)
        self.assertIn("small_ratios", flat.as_dict())

    def test_maximizer_of_quadratic(self):
        sampled = as_sampled(quadratic(), resolution=129)
        result = maximizer_profile(sampled, [0.6, 0.8])
        self.assertAlmostEqual(result.s_star, 0.5, delta=0.15)
        self.assertAlmostEqual(result.value, 0.5, delta=0.02)
        self.assertFalse(result.at_zero)

    def test_maximizer_needs_long_enough_levels(self):
        sampled = as_sampled(quadratic(), resolution=129)
        with self.assertRaises(LevelGridTooShortError) as caught:
            maximizer_profile(sampled, [0.6, 0.8], levels=[0.0, 0.01, 0.02])
        self.assertAlmostEqual(caught.exception.required_level, 0.04)

    def test_level_volume_profile_is_concave(self):
        sampled = as_sampled(quadratic(), resolution=129)
        profile = level_volume_profile(sampled, np.linspace(0.1, 1.5, 15))
        self.assertTrue(profile.nondecreasing)
        self.assertTrue(profile.is_concave(0.05))

    def test_maximizer_for_an_indicator_sits_at_zero(self):
        sampled = as_sampled(indicator(square()), UniformGrid.box(1.5, 33, 2))
        result = maximizer_profile(sampled, [0.5, 0.3])
        self.assertTrue(result.at_zero)
        self.assertEqual(result.s_star, 0.0)
        self.assertAlmostEqual(result.value, 0.8, delta=0.1)

    def test_support_profile_is_concave_in_the_level(self):
        phi_K = integrand_symmetral(quadratic(), disc(64), UniformGrid.box(2.0, 129, 2))
        xi = np.array([0.6, 0.8])
        rng = np.random.default_rng(11)
        pairs = rng.uniform(0.0, 1.5, size=(100, 2))
        middle = pairs.mean(axis=1)

        def profile(s):
            return phi_K.level_support_profile(xi, s) - s

        chord = 0.5 * (profile(pairs[:, 0]) + profile(pairs[:, 1]))
        self.assertTrue(np.all(profile(middle) >= chord - 1e-2))

    def test_level_grid(self):
        levels = level_grid(2.0, count=5, floor=1e-2)
        self.assertEqual(levels[0], 0.0)
        self.assertAlmostEqual(levels[1], 0.02)
        self.assertAlmostEqual(levels[-1], 2.0)
        np.testing.assert_array_equal(level_grid(0.0), [0.0])
