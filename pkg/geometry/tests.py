import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    CatalogParseError,
    DegenerateGaugeError,
    DegeneratePolarError,
    InputFileError,
    ZeroVolumeError,
)
from core.grids import UniformGrid
from geometry.bodies import ConvexBody, NormPair, dilate_translate, gauge, polar, support_function, volume
from geometry.catalog import cross, disc, hexagon, parse_body, simplex, square
from geometry.perimeter import anisotropic_perimeter, isoperimetric_bound, isoperimetric_deficit
from gridcalc.fields import GridFunction


class ConvexBodyTests(SimpleTestCase):
    def test_square_support_and_gauge(self):
        body = square()
        np.testing.assert_allclose(body.support([[1.0, 0.0], [1.0, 1.0], [-2.0, 0.5]]), [1.0, 2.0, 2.5])
        np.testing.assert_allclose(body.gauge([[0.5, 0.25], [0.0, 0.0], [-3.0, 1.0]]), [0.5, 0.0, 3.0])
        self.assertAlmostEqual(body.volume, 4.0)

    def test_catalog_volumes(self):
        self.assertAlmostEqual(cross().volume, 2.0)
        self.assertAlmostEqual(hexagon().volume, 2.0 * np.sqrt(3.0))
        self.assertAlmostEqual(square(3).volume, 8.0)
        self.assertAlmostEqual(cross(3).volume, 4.0 / 3.0)
        self.assertAlmostEqual(disc(256).volume, np.pi, delta=1e-3)

    def test_gauge_is_support_of_polar(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(50, 2))
        for body in (square(), hexagon(), simplex(), disc(17)):
            np.testing.assert_allclose(body.gauge(points), body.polar().support(points), atol=1e-10)

    def test_module_level_operations(self):
        body = hexagon()
        xi = np.array([[0.3, -0.7], [1.0, 2.0]])
        np.testing.assert_allclose(support_function(body, 2.5 * xi), 2.5 * support_function(body, xi))
        np.testing.assert_allclose(gauge(body, xi), support_function(polar(body), xi), atol=1e-9)
        self.assertAlmostEqual(volume(dilate_translate(body, 0.5, [1.0, 1.0])), 0.5 * np.sqrt(3.0))

    def test_polar_of_square_is_cross(self):
        self.assertTrue(square().polar().same_as(cross()))
        self.assertTrue(cross().polar().same_as(square()))

    def test_three_dimensional_polar_is_inscribed_in_the_octahedron(self):
        polar = square(3).polar()
        theta = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [1.0, 1.0, 1.0]])
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        support = polar.support(theta)
        exact = cross(3).support(theta)
        self.assertTrue(np.all(support <= exact + 1e-9))
        np.testing.assert_allclose(support, exact, atol=0.1)

    def test_dilate_translate_scales_volume_and_moves_barycenter(self):
        moved = hexagon().dilate_translate(2.0, [0.5, -0.25])
        self.assertAlmostEqual(moved.volume, 8.0 * np.sqrt(3.0))
        np.testing.assert_allclose(moved.barycenter, [0.5, -0.25], atol=1e-12)

    def test_symmetry(self):
        self.assertTrue(square().is_origin_symmetric())
        self.assertTrue(hexagon().is_origin_symmetric())
        self.assertFalse(simplex().is_origin_symmetric())
        self.assertFalse(simplex().reflect().same_as(simplex()))

    def test_degenerate_bodies(self):
        with self.assertRaises(ZeroVolumeError):
            ConvexBody([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        shifted = square().dilate_translate(1.0, [2.0, 0.0])
        with self.assertRaises(DegenerateGaugeError):
            shifted.gauge([0.0, 0.0])
        with self.assertRaises(DegeneratePolarError):
            shifted.polar()

    def test_norm_pair(self):
        pair = NormPair(square())
        low, high = pair.equivalence_constants()
        self.assertAlmostEqual(low, 1.0)
        self.assertAlmostEqual(high, np.sqrt(2.0))
        self.assertLess(pair.homogeneity_defect(), 1e-12)
        self.assertLess(pair.bidual_deviation(), 1e-10)
        np.testing.assert_allclose(pair.H0([[0.5, 0.25]]), [0.5])


class BodyCatalogTests(SimpleTestCase):
    def test_parse_names(self):
        self.assertEqual(parse_body("square").label, "square")
        self.assertEqual(len(parse_body("disc:12").vertices), 12)
        self.assertEqual(parse_body("cross", 3).dim, 3)

    def test_parse_errors(self):
        for spec in ("", "circle", "disc:x", "disc:2", "polygon"):
            with self.assertRaises(CatalogParseError):
                parse_body(spec)
        with self.assertRaises(CatalogParseError):
            parse_body("hexagon", 3)
        with self.assertRaises(InputFileError):
            parse_body("polygon:/nonexistent/vertices.csv")

    def test_polygon_from_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "triangle.csv"
            path.write_text("# vertices\n-1,-1\n2,-1\n-1,2\n")
            body = parse_body(f"polygon:{path}")
        self.assertAlmostEqual(body.volume, 4.5)

    def test_bad_polygon_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            words = Path(tmp) / "words.csv"
            words.write_text("a,b\nc,d\ne,f\n")
            three_columns = Path(tmp) / "wide.csv"
            three_columns.write_text("0,0,0\n1,0,0\n0,1,0\n")
            for path in (words, three_columns):
                with self.assertRaises(InputFileError):
                    parse_body(f"polygon:{path}")


class PerimeterTests(SimpleTestCase):
    def indicator(self, grid, inside):
        return GridFunction(grid, inside.astype(float), boundary_value=0.0)

    def test_square_in_square_metric_is_exact_in_cell_mode(self):
        grid = UniformGrid.box(1.5, 30, 2, centering="cell")
        inside = np.all(np.abs(grid.coordinates) < 1.0, axis=-1)
        indicator = self.indicator(grid, inside)
        self.assertAlmostEqual(anisotropic_perimeter(indicator, square(), mode="cell"), 8.0, places=9)
        self.assertAlmostEqual(isoperimetric_bound(indicator, square()), 8.0, places=9)
        self.assertAlmostEqual(isoperimetric_deficit(indicator, square(), mode="cell"), 0.0, places=9)

    def test_disc_in_disc_metric_smooth_mode(self):
        grid = UniformGrid.box(1.5, 241, 2)
        inside = np.linalg.norm(grid.coordinates, axis=-1) <= 1.0
        perimeter = anisotropic_perimeter(self.indicator(grid, inside), disc(256), mode="smooth")
        self.assertAlmostEqual(perimeter / (2.0 * np.pi), 1.0, delta=0.02)

    def test_wulff_shape_beats_other_sets(self):
        grid = UniformGrid.box(1.5, 30, 2, centering="cell")
        inside = np.all(np.abs(grid.coordinates) < 1.0, axis=-1)
        self.assertGreater(isoperimetric_deficit(self.indicator(grid, inside), cross(), mode="cell"), 0.0)

    def test_empty_set(self):
        grid = UniformGrid.box(1.0, 16, 2)
        self.assertEqual(anisotropic_perimeter(self.indicator(grid, np.zeros(grid.shape, bool)), square()), 0.0)
