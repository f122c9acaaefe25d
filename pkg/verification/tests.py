import numpy as np
from django.test import SimpleTestCase
from pydantic import ValidationError

from core.exceptions import ArgumentError, PreconditionError
from core.grids import UniformGrid
from core.utils import sphere_directions
from geometry.catalog import cross, disc, hexagon, square
from gridcalc.catalog import tent, two_bump
from rearrangement.profiles import NONDECREASING, Profile
from rearrangement.symmetrization import integrand_symmetral, symmetral, triple_symmetral, triple_symmetral_parts
from verification.diagnostics import (
    extremality_diagnostics,
    fenchel_defects,
    hull_volume,
    interior_count,
    sandwich_constants,
    summarize,
)
from verification.engine import (
    both_sides,
    calibrate_error_model,
    classify,
    truncation_consistency,
    verify_inequality,
    violation_persists,
    young_grid_for,
)
from verification.fixtures import random_triple
from verification.generators import check_superlinear, generate_prop51, generate_prop52
from verification.schemas import DiagnosticLevel, LevelRecord, RefinementPoint, Report
from young.catalog import parse_young, quadratic, radial
from young.functions import SampledYoung, Young1D, as_sampled


class ClassifyTests(SimpleTestCase):
    def test_verdicts(self):
        self.assertEqual(classify(1.0, 2.0, 0.1), "inequality-holds")
        self.assertEqual(classify(1.0, 1.05, 0.1), "equality-within-tol")
        self.assertEqual(classify(2.0, 1.0, 0.1), "violation")

    def test_infinite_sides(self):
        self.assertEqual(classify(1.0, np.inf, 0.0), "inequality-holds")
        self.assertEqual(classify(np.inf, 1.0, 0.0), "indeterminate")
        self.assertEqual(classify(np.inf, np.inf, 0.0), "indeterminate")

    def test_violation_needs_a_persistent_excess(self):
        def point(excess, err):
            return RefinementPoint(
                shape=[33, 33], spacing=0.1, lhs=1.0 + excess, rhs=1.0, excess=excess, error_estimate=err
            )

        self.assertTrue(violation_persists([point(0.2, 0.05), point(0.18, 0.02)], ratio=0.75))
        self.assertFalse(violation_persists([point(0.2, 0.05), point(0.05, 0.02)], ratio=0.75))
        self.assertFalse(violation_persists([point(0.02, 0.05), point(0.05, 0.02)], ratio=0.75))
        self.assertTrue(violation_persists([point(0.05, 0.02)]))


class ReportTests(SimpleTestCase):
    def test_rejects_unknown_verdict_and_negative_error(self):
        with self.assertRaises(ValidationError):
            Report(lhs=1.0, rhs=2.0, verdict="maybe")
        with self.assertRaises(ValidationError):
            Report(lhs=1.0, rhs=2.0, verdict="inequality-holds", error_estimate=-1.0)

    def test_frames(self):
        report = Report(
            lhs=1.0,
            rhs=2.0,
            verdict="inequality-holds",
            levels=[LevelRecord(t=0.5, band=0.1, band_tolerance=0.0)],
            diagnostics=[DiagnosticLevel(t=0.5, x_t=[0.1, -0.2])],
        )
        self.assertEqual(report.schema_version, 1)
        self.assertEqual(list(report.level_frame()["t"]), [0.5])
        frame = report.diagnostics_frame()
        self.assertIn("x_t1", frame.columns)
        self.assertNotIn("x_t", frame.columns)


class GeneratorTests(SimpleTestCase):
    def test_gauge_profile_field(self):
        u, phi = generate_prop51(square(), Young1D.parse("power,2"), resolution=129)
        self.assertEqual(u.essinf, 0.0)
        self.assertAlmostEqual(float(np.max(u.values)), 1.0)
        # {u >= 1/2} is the square of half side 1/2
        self.assertAlmostEqual(u.volume_above(0.5, strict=False), 1.0, delta=0.15)
        self.assertAlmostEqual(float(phi([[1.0, 0.5]])[0]), 2.25)

    def test_gauge_profile_needs_nonincreasing_b(self):
        increasing = Profile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), NONDECREASING)
        with self.assertRaises(ArgumentError):
            generate_prop51(square(), Young1D.parse("power,2"), b=increasing, resolution=33)

    def test_truncated_conjugate_profile(self):
        u = generate_prop52(quadratic(), 1.0, 0.0, 1.0, 1.0, resolution=129)
        # u = clip(1 - |x|^2 / 2, 0, 1), so {u >= 1/2} is the unit disc
        self.assertEqual(u.essinf, 0.0)
        self.assertAlmostEqual(float(np.max(u.values)), 1.0)
        self.assertAlmostEqual(u.volume_above(0.5, strict=False), np.pi, delta=0.1)

    def test_truncated_profile_keeps_the_chain_rule_gradient(self):
        u = generate_prop52(quadratic(), 1.0, 0.0, 1.0, 1.0, resolution=65)
        inside = (u.values > 0.0) & (u.values < 1.0)
        # grad(1 - |x|^2 / 2) = -x, and central differences are exact for quadratics
        np.testing.assert_allclose(u.gradient()[inside], -u.grid.coordinates[inside], atol=1e-9)
        self.assertTrue(np.all(u.gradient()[~inside] == 0.0))

    def test_argument_errors(self):
        with self.assertRaises(ArgumentError):
            generate_prop52(quadratic(), 0.0, 0.0, 1.0, 1.0)
        with self.assertRaises(ArgumentError):
            generate_prop52(quadratic(), 1.0, 1.0, 0.0, 2.0)

    def test_equal_truncation_levels_give_a_constant(self):
        u = generate_prop52(quadratic(), 1.0, 0.5, 0.5, 1.0, resolution=33)
        self.assertEqual(u.label, "prop52:constant")
        self.assertTrue(np.all(u.values == 0.5))

    def test_superlinear_precondition(self):
        check_superlinear(quadratic())
        with self.assertRaises(PreconditionError):
            check_superlinear(radial(Young1D.parse("power,1")))
        grid = UniformGrid.box(2.0, 33, 2)
        norm = SampledYoung(grid, np.linalg.norm(grid.coordinates, axis=-1), label="norm")
        with self.assertRaises(PreconditionError):
            check_superlinear(norm)
        with self.assertRaises(PreconditionError):
            generate_prop52(radial(Young1D.parse("power,1")), 1.0, 0.0, 1.0, 1.0, resolution=33)


class VerifyInequalityTests(SimpleTestCase):
    def test_equality_case_is_not_a_violation(self):
        u, phi = generate_prop51(square(), Young1D.parse("power,2"), resolution=65)
        report = verify_inequality(
            u,
            phi,
            square(),
            young_grid=UniformGrid.box(3.0, 65, 2),
            levels=[0.25, 0.5, 0.75],
            refinement_levels=1,
            threads=2,
        )
        self.assertNotEqual(report.verdict, "violation")
        self.assertTrue(np.isfinite(report.lhs))
        self.assertGreater(report.rhs, 0.0)
        self.assertEqual([record.t for record in report.levels], [0.25, 0.5, 0.75])
        self.assertEqual(report.refinement[-1].shape, [65, 65])
        self.assertEqual(report.summary["levels"], 3)

    def test_truncation_consistency(self):
        u, phi = generate_prop51(square(), Young1D.parse("power,2"), resolution=65)
        rows = truncation_consistency(u, phi, square(), fractions=(0.5,), young_grid=UniformGrid.box(3.0, 65, 2))
        self.assertEqual(len(rows), 1)
        self.assertAlmostEqual(rows[0]["t"], 0.5)
        self.assertTrue(np.isfinite(rows[0]["lhs"]))
        self.assertGreaterEqual(rows[0]["error_estimate"], 0.0)

    def test_calibrated_error_model_covers_the_observed_gaps(self):
        model = calibrate_error_model(resolutions=(48, 64))
        self.assertGreaterEqual(model["c1"], 0.0)
        self.assertGreaterEqual(model["c2"], 0.0)
        self.assertEqual(len(model["observed"]), 2)
        modeled = np.asarray(model["features"]) @ np.array([model["c1"], model["c2"]])
        self.assertTrue(np.all(modeled >= model["safety"] * np.asarray(model["observed"]) - 1e-12))

    def test_ten_percent_excess_is_reported_as_a_violation(self):
        u, phi = generate_prop51(disc(), Young1D.parse("power,2"), resolution=129)
        report = verify_inequality(u, phi, disc(), levels=[0.25, 0.5, 0.75], refinement_levels=1, threads=2)
        self.assertLess(report.error_estimate, 0.1 * report.rhs)
        self.assertEqual(classify(1.1 * report.rhs, report.rhs, report.error_estimate), "violation")
        self.assertEqual(set(report.summary["error_model"]), {"c1", "c2"})

    def test_fixed_point_integrands_give_equality(self):
        grid = UniformGrid.box(1.6, 129, 2)
        cases = (
            (tent(disc(), grid), quadratic(), disc()),
            (tent(square(), grid), radial(Young1D.parse("power,2"), square()), square()),
        )
        for u, phi, K in cases:
            with self.subTest(phi=phi.label, K=K.label):
                report = verify_inequality(u, phi, K, levels=[0.25, 0.5, 0.75], refinement_levels=1, threads=2)
                self.assertNotEqual(report.verdict, "violation")
                self.assertLessEqual(abs(report.lhs - report.rhs) / report.rhs, 0.03)

    def test_random_triples_satisfy_the_inequality(self):
        for seed in range(20):
            u, phi, K = random_triple(seed, resolution=64)
            levels = u.essinf + (u.esssup - u.essinf) * np.array([0.25, 0.5, 0.75])
            with self.subTest(seed=seed, phi=phi.label, K=K.label):
                report = verify_inequality(u, phi, K, levels=levels, refinement_levels=1, threads=2)
                self.assertNotEqual(report.verdict, "violation")
                self.assertLessEqual(report.lhs, report.rhs + report.error_estimate)


class EqualityCaseTests(SimpleTestCase):
    def relative_gap(self, u, phi, K):
        uK = symmetral(u, K)
        triple = triple_symmetral_parts(as_sampled(phi, young_grid_for([u, uK], phi)), K).triple
        _, lhs, rhs = both_sides(u, phi, K, triple)
        return (lhs - rhs) / rhs

    def test_gauge_profile_fields_are_equality_cases_for_every_body(self):
        A = Young1D.parse("power,2")
        for L in (square(), hexagon()):
            u, phi = generate_prop51(L, A, resolution=257)
            for K in (square(), disc(), cross()):
                with self.subTest(L=L.label, K=K.label):
                    self.assertLessEqual(abs(self.relative_gap(u, phi, K)), 0.03)

    def test_gap_shrinks_under_refinement(self):
        A = Young1D.parse("power,2")
        gaps = []
        for resolution in (129, 257):
            u, phi = generate_prop51(hexagon(), A, resolution=resolution)
            gaps.append(abs(self.relative_gap(u, phi, disc())))
        self.assertLess(gaps[1], gaps[0] + 0.002)

    def test_truncated_conjugate_profiles_are_equality_cases(self):
        for phi in (quadratic(), parse_young("pnorm:2,4")):
            u = generate_prop52(phi, 1.0, 0.0, 1.0, 1.0, resolution=257)
            with self.subTest(phi=phi.label):
                self.assertLessEqual(abs(self.relative_gap(u, phi, square())), 0.03)

    def test_anisotropic_profile_has_level_sets_of_different_shapes(self):
        u = generate_prop52(parse_young("pnorm:2,4"), 1.0, 0.0, 1.0, 1.0, resolution=129)
        theta = sphere_directions(64, 2)
        shapes = []
        for t in (0.1, 0.9):
            points = u.grid.points()[(u.values >= t).ravel()]
            center = points.mean(axis=0)
            volume = len(points) * u.grid.cell_volume
            shapes.append((np.max(theta @ points.T, axis=1) - theta @ center) / np.sqrt(volume))
        self.assertGreater(float(np.max(np.abs(shapes[0] - shapes[1]))), 0.05)


class DiagnosticHelperTests(SimpleTestCase):
    def test_interior_count(self):
        self.assertEqual(interior_count(np.ones((5, 5), dtype=bool)), 9)
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, :] = True
        self.assertEqual(interior_count(mask), 0)

    def test_hull_volume(self):
        square_points = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
        self.assertAlmostEqual(hull_volume(square_points), 1.0)
        self.assertEqual(hull_volume(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])), 0.0)

    def test_fenchel_defects(self):
        gradients = np.array([[1.0, 0.0]])
        candidates = np.array([[1.0, 0.0], [0.0, 0.0]])
        defects, best = fenchel_defects(gradients, np.array([0.5]), candidates, np.array([0.5, 0.0]))
        self.assertAlmostEqual(float(defects[0]), 0.0)
        self.assertEqual(int(best[0]), 0)

    def test_disjoint_super_level_set_is_far_from_its_hull(self):
        u = two_bump(UniformGrid.box(1.5, 97, 2))
        points = u.grid.points()[(u.values >= 0.3).ravel()]
        self.assertGreater(hull_volume(points), 1.5 * len(points) * u.grid.cell_volume)

    def test_summarize(self):
        levels = [
            DiagnosticLevel(t=0.1, residual_b=0.05, quasi_convexity=0.99),
            DiagnosticLevel(t=0.2, residual_b=0.2, quasi_convexity=0.5),
        ]
        summary = summarize(levels, tolerance=0.1)
        self.assertEqual(summary["levels"], 2)
        self.assertIsNone(summary["residual_a"])
        self.assertAlmostEqual(summary["residual_b"]["max"], 0.2)
        self.assertAlmostEqual(summary["residual_b"]["fraction_below"], 0.5)
        self.assertAlmostEqual(summary["quasi_convexity_min"], 0.5)
        self.assertFalse(summary["quasi_convex"])
        self.assertIsNone(summary["uniqueness_spread_max"])


class ExtremalityTests(SimpleTestCase):
    def test_diagnostics_on_an_equality_case(self):
        u = generate_prop52(quadratic(), 1.0, 0.0, 1.0, 1.0, resolution=65)
        records, summary = extremality_diagnostics(
            u, quadratic(), disc(64), levels=[0.3, 0.5, 0.7], young_grid=UniformGrid.box(4.0, 129, 2), threads=2
        )
        self.assertEqual([record.t for record in records], [0.3, 0.5, 0.7])
        self.assertEqual(summary["levels"], 3)
        self.assertIsNot(summary["quasi_convex"], False)

    def test_sandwich_constants_for_a_rotation_invariant_pair(self):
        c1, c2 = sandwich_constants(quadratic(), disc(64), grid=UniformGrid.box(2.0, 65, 2))
        self.assertLessEqual(c1, c2)
        self.assertGreater(c1, 0.5)
        self.assertLess(c2, 2.0)

    def test_homothety_fit_recovers_the_shift(self):
        x0 = np.array([0.2, -0.1])
        u = generate_prop52(quadratic(), 1.0, 0.0, 1.0, 1.0, x0=x0, resolution=257)
        records, summary = extremality_diagnostics(
            u, quadratic(), disc(), levels=np.linspace(0.2, 0.7, 6), young_grid=UniformGrid.box(4.0, 257, 2), threads=2
        )
        self.assertGreaterEqual(summary["residual_a"]["fraction_below"], 0.95)
        self.assertGreaterEqual(summary["residual_b"]["fraction_below"], 0.95)
        for record in records:
            with self.subTest(t=record.t):
                self.assertAlmostEqual(record.a_t, 1.0, delta=0.03)
                self.assertLessEqual(float(np.linalg.norm(np.asarray(record.x_t) - x0)), u.grid.max_spacing)

    def test_two_bumps_are_not_quasi_convex(self):
        u = two_bump(UniformGrid.box(1.5, 97, 2))
        _, summary = extremality_diagnostics(
            u, quadratic(), disc(), levels=[0.1, 0.2, 0.3], young_grid=UniformGrid.box(4.0, 129, 2), threads=2
        )
        self.assertIs(summary["quasi_convex"], False)
        self.assertLess(summary["quasi_convexity_min"], 0.98)

    def test_sandwich_constants_are_one_when_the_triple_symmetral_is_the_integrand_symmetral(self):
        grid = UniformGrid.box(2.0, 65, 2)
        c1, c2 = sandwich_constants(quadratic(), disc(), grid=grid)
        self.assertAlmostEqual(c1, 1.0, delta=0.1)
        self.assertAlmostEqual(c2, 1.0, delta=0.1)

        sampled = as_sampled(quadratic(), grid)
        inner = grid.inner_mask(0.5)
        points = grid.coordinates[inner]
        phi_K = integrand_symmetral(sampled, disc()).evaluate(points)
        triple = triple_symmetral(sampled, disc()).values[inner]
        bound = 3.0 * grid.max_spacing * float(np.max(np.linalg.norm(points, axis=1)))
        self.assertGreaterEqual(float(np.mean(np.abs(phi_K - triple) <= bound)), 0.99)


class FixtureTests(SimpleTestCase):
    def test_random_triples_are_reproducible(self):
        u, phi, K = random_triple(3, resolution=48)
        again, phi_again, K_again = random_triple(3, resolution=48)
        np.testing.assert_array_equal(u.values, again.values)
        self.assertEqual(phi.label, phi_again.label)
        self.assertEqual(K.label, K_again.label)
        self.assertEqual(u.grid.shape, (48, 48))
