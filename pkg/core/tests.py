import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from core.exceptions import ArgumentError, ConfigurationError
from core.grids import UniformGrid
from core.schemas import RunConfig, load_config
from core.utils import aniso_setting, content_hash, fixed_tree_sum, json_safe, sphere_directions, write_json
from gridcalc.io import write_grid_csv


class UniformGridTests(SimpleTestCase):
    def test_node_grid_puts_nodes_on_faces(self):
        grid = UniformGrid.box(1.0, 5, 2)
        self.assertEqual(grid.shape, (5, 5))
        np.testing.assert_allclose(grid.spacing, [0.5, 0.5])
        np.testing.assert_allclose(grid.axes[0], [-1.0, -0.5, 0.0, 0.5, 1.0])
        self.assertAlmostEqual(grid.cell_volume, 0.25)

    def test_cell_grid_centers_nodes(self):
        grid = UniformGrid.box(1.0, 4, 1, centering="cell")
        np.testing.assert_allclose(grid.axes[0], [-0.75, -0.25, 0.25, 0.75])

    def test_rejects_empty_box_and_tiny_resolution(self):
        with self.assertRaises(ArgumentError):
            UniformGrid((0.0,), (0.0,), (8,))
        with self.assertRaises(ArgumentError):
            UniformGrid((0.0,), (1.0,), (1,))

    def test_masks(self):
        grid = UniformGrid.box(1.0, 9, 2)
        self.assertEqual(int(np.count_nonzero(grid.rim_mask(1))), 81 - 49)
        self.assertEqual(int(np.count_nonzero(grid.inner_mask(0.5))), 25)

    def test_coarsen_keeps_every_other_node(self):
        grid = UniformGrid.box(1.0, 9, 2)
        coarse = grid.coarsen(2)
        self.assertEqual(coarse.shape, (5, 5))
        np.testing.assert_allclose(coarse.axes[0], grid.axes[0][::2])


class UtilsTests(SimpleTestCase):
    def test_fixed_tree_sum_matches_sum(self):
        values = np.arange(1, 11, dtype=float)
        self.assertEqual(fixed_tree_sum(values), 55.0)
        self.assertEqual(fixed_tree_sum([]), 0.0)

    def test_sphere_directions_are_unit(self):
        for dim in (2, 3):
            directions = sphere_directions(64, dim)
            np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)

    def test_json_safe_spells_out_non_finite(self):
        payload = json_safe({"a": np.float64(np.inf), "b": [np.nan, np.int64(3)], "c": np.array([1.5])})
        self.assertEqual(payload, {"a": "inf", "b": ["nan", 3], "c": [1.5]})

    def test_content_hash_is_stable(self):
        self.assertEqual(content_hash("quad", 3), content_hash("quad", 3))
        self.assertNotEqual(content_hash("quad", 3), content_hash("quad", 4))

    def test_write_json_sorts_keys(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json(Path(tmp) / "out.json", {"b": 1, "a": 2})
            self.assertLess(path.read_text().index('"a"'), path.read_text().index('"b"'))

    @override_settings(ANISO={"threads": 7})
    def test_aniso_setting_falls_back_to_settings(self):
        self.assertEqual(aniso_setting("threads"), 7)
        self.assertEqual(aniso_setting("threads", 2), 2)


class RunConfigTests(SimpleTestCase):
    def test_resolution_below_minimum_is_a_config_error(self):
        with self.assertRaises(ConfigurationError):
            load_config("conjugate", {"phi": "quad", "res": 16})

    def test_unknown_command(self):
        with self.assertRaises(ConfigurationError):
            load_config("plot", {})

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text(json.dumps({"phi": "pnorm:2,4", "res": 40, "seed": 5}))
            config = load_config("conjugate", {"res": 48, "phi": None}, str(path))
        self.assertEqual(config.res, 48)
        self.assertEqual(config.phi, "pnorm:2,4")
        self.assertEqual(config.seed, 5)

    def test_defaults(self):
        config = RunConfig(command="gen-prop52", phi="quad")
        self.assertEqual(config.t, [0.0, 1.0, 1.0])
        self.assertEqual(config.a, 1.0)


class AnisoCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, *args):
        out = StringIO()
        call_command("aniso", *args, "--output-dir", self.output, stdout=out)
        return out.getvalue()

    def result(self, command, name="result.json"):
        (path,) = Path(self.output).glob(f"{command}-*/{name}")
        return path

    def test_conjugate_writes_artifacts(self):
        output = self.call("conjugate", "--phi", "quad", "--res", "41")
        self.assertIn("conjugate: done", output)
        payload = json.loads(self.result("conjugate").read_text())
        self.assertEqual(payload["command"], "conjugate")
        self.assertEqual(payload["config"]["res"], 41)
        self.assertEqual(payload["seed"], 0)
        self.assertEqual(len(payload["content_hash"]), 64)
        self.assertLess(payload["summary"]["closed_form_deviation"], 0.05)
        directory = self.result("conjugate").parent
        self.assertTrue((directory / "phi.csv").exists())
        self.assertTrue((directory / "conjugate.csv").exists())

    def test_identical_runs_are_byte_identical(self):
        self.call("conjugate", "--phi", "pnorm:2,3", "--res", "33")
        first = self.result("conjugate").read_bytes()
        self.call("conjugate", "--phi", "pnorm:2,3", "--res", "33")
        self.assertEqual(self.result("conjugate").read_bytes(), first)

    def test_non_convex_table_is_convexified(self):
        grid = UniformGrid.box(2.0, 33, 2)
        bent = np.minimum(np.sum(grid.coordinates**2, axis=-1), 1.0)
        path = write_grid_csv(Path(self.output) / "bent.csv", grid, bent)
        output = self.call("conjugate", "--phi", f"csv:{path}", "--res", "33")
        self.assertIn("conjugate: done", output)
        summary = json.loads(self.result("conjugate").read_text())["summary"]
        self.assertGreater(summary["convexification_deviation"], 0.1)

    def test_verify_and_diagnose_reports_are_byte_identical(self):
        args = (
            "--u", "tent:disc:64",
            "--phi", "quad",
            "--K", "square",
            "--res", "65",
            "--young-res", "65",
            "--levels", "4",
            "--refinement-levels", "1",
        )
        for command in ("verify", "diagnose"):
            with self.subTest(command=command):
                self.call(command, *args)
                first = self.result(command, "report.json").read_bytes()
                self.call(command, *args)
                self.assertEqual(self.result(command, "report.json").read_bytes(), first)

    def test_resolution_below_minimum_exits_with_config_error(self):
        with self.assertRaises(CommandError) as caught:
            self.call("conjugate", "--phi", "quad", "--res", "16")
        self.assertEqual(caught.exception.returncode, 1)
        self.assertTrue(str(caught.exception).startswith("ERROR config:"))

    def test_bad_catalog_string_exits_with_parse_error(self):
        with self.assertRaises(CommandError) as caught:
            self.call("conjugate", "--phi", "cubic", "--res", "33")
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn("catalog-parse", str(caught.exception))

    def test_symmetrize_u_preserves_distribution(self):
        self.call("symmetrize-u", "--u", "tent:hexagon", "--K", "square", "--res", "129", "--levels", "32")
        payload = json.loads(self.result("symmetrize-u").read_text())
        # at most about one layer of cells along the boundary
        self.assertLessEqual(payload["summary"]["max_distribution_gap"], 0.3)

    def test_verify_reports_no_violation(self):
        self.call(
            "verify",
            "--u", "tent:disc:64",
            "--phi", "quad",
            "--K", "square",
            "--res", "65",
            "--young-res", "65",
            "--levels", "8",
            "--refinement-levels", "1",
        )
        report = json.loads(self.result("verify", "report.json").read_text())
        self.assertIn(report["verdict"], ("inequality-holds", "equality-within-tol"))
        self.assertEqual(report["schema_version"], 1)
        self.assertEqual(len(report["levels"]), 8)
        directory = self.result("verify", "report.json").parent
        self.assertTrue((directory / "levels.csv").exists())
        self.assertTrue((directory / "u_K.csv").exists())

    def test_symmetrize_body_and_function(self):
        self.call("symmetrize-body", "--phi", "quad", "--K", "disc:64", "--res", "65")
        payload = json.loads(self.result("symmetrize-body").read_text())
        self.assertTrue(payload["summary"]["nondecreasing"])
        self.assertTrue((self.result("symmetrize-body").parent / "level_volume.csv").exists())

        self.call("symmetrize-fn", "--phi", "quad", "--K", "disc:64", "--res", "65")
        payload = json.loads(self.result("symmetrize-fn").read_text())
        self.assertLess(payload["summary"]["deviation_from_phi"], 0.1)

    def test_missing_input_is_a_config_error(self):
        with self.assertRaises(CommandError) as caught:
            self.call("symmetrize-body", "--phi", "quad", "--res", "33")
        self.assertIn("ERROR config: symmetrize-body needs --K", str(caught.exception))

    def test_sandwich(self):
        self.call("sandwich", "--phi", "quad", "--K", "disc:64", "--res", "65")
        summary = json.loads(self.result("sandwich").read_text())["summary"]
        self.assertLessEqual(summary["c1"], summary["c2"])

    def test_generators(self):
        self.call("gen-prop52", "--phi", "quad", "--a", "1", "--t", "0,1,1", "--res", "65")
        payload = json.loads(self.result("gen-prop52").read_text())
        self.assertEqual(payload["summary"]["u"], "prop52:quad")
        self.assertEqual(payload["config"]["t"], [0.0, 1.0, 1.0])
        self.assertTrue((self.result("gen-prop52").parent / "u.csv").exists())

    def test_generator_then_verify_embeds_diagnostics(self):
        self.call(
            "gen-prop51",
            "--res", "65",
            "--young-res", "65",
            "--levels", "4",
            "--refinement-levels", "1",
            "--then-verify",
        )
        report = json.loads(self.result("gen-prop51", "report.json").read_text())
        self.assertEqual(report["command"], "gen-prop51")
        self.assertEqual(len(report["diagnostics"]), 4)
        self.assertIn("diagnostics", report["summary"])
        self.assertTrue((self.result("gen-prop51", "report.json").parent / "diagnostics.csv").exists())
