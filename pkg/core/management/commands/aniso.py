"""
Django management command for the symmetrization pipelines.

    python manage.py aniso verify --u tent:disc --phi quad --K square --res 256
"""

import argparse
import logging

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import AnisoException
from core.pipelines import EXIT_ERROR, EXIT_VIOLATION, run
from core.schemas import COMMANDS, load_config

logger = logging.getLogger(__name__)

HELP = {
    "conjugate": "Sample Phi and compute its Young conjugate",
    "symmetrize-body": "Compute Phi_K with sub-level sets homothetic to -K",
    "symmetrize-fn": "Compute the triple symmetral Phi_•K•",
    "symmetrize-u": "Compute the symmetral u^K of a field",
    "verify": "Check the Polya-Szego inequality for (u, Phi, K)",
    "gen-prop51": "Generate the gauge-profile equality case",
    "gen-prop52": "Generate the truncated conjugate-profile equality case",
    "diagnose": "Verify and report the extremality residuals per level",
    "sandwich": "Estimate c1, c2 with Phi_K(c1 xi) <= Phi_•K•(xi) <= Phi_K(c2 xi)",
}

INPUTS = {
    "conjugate": ("phi",),
    "symmetrize-body": ("phi", "K"),
    "symmetrize-fn": ("phi", "K"),
    "symmetrize-u": ("u", "K"),
    "verify": ("u", "phi", "K"),
    "gen-prop51": ("L", "A", "K", "x0"),
    "gen-prop52": ("phi", "a", "t", "x0", "K"),
    "diagnose": ("u", "phi", "K"),
    "sandwich": ("phi", "K"),
}


def float_list(text: str):
    try:
        return [float(item) for item in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got {text!r}")


class Command(BaseCommand):
    help = "Anisotropic symmetrization toolkit"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", help="Pipelines")
        for action in COMMANDS:
            sub = subparsers.add_parser(action, help=HELP[action])
            self._add_inputs(sub, INPUTS[action])
            self._add_common(sub)

    def _add_inputs(self, parser, names):
        if "u" in names:
            parser.add_argument(
                "--u", type=str, help="Field: tent:<body>, bump:<body>, paraboloid, twobump, random:<k>, csv:<path>"
            )
        if "phi" in names:
            parser.add_argument("--phi", type=str, help="Young function catalog string or csv:<path>")
        if "K" in names:
            parser.add_argument(
                "--K", type=str, help="Convex body: square, disc[:n], cross, hexagon, simplex, polygon:<path>"
            )
        if "L" in names:
            parser.add_argument("--L", type=str, help="Body of the gauge profile (default square)")
        if "A" in names:
            parser.add_argument("--A", type=str, help="One-dimensional Young function, e.g. power,2 (default)")
        if "a" in names:
            parser.add_argument("--a", type=float, help="Dilation a > 0")
        if "t" in names:
            parser.add_argument("--t", type=float_list, help="Levels t1,t2,t3")
        if "x0" in names:
            parser.add_argument("--x0", type=float_list, help="Center, comma-separated")
        if {"L", "t"} & set(names):
            parser.add_argument("--then-verify", action="store_true", default=None, help="Verify the generated field")

    def _add_common(self, parser):
        parser.add_argument("--config", type=str, help="JSON config file; flags override its values")
        parser.add_argument("--dim", type=int, help="Dimension (2 or 3)")
        parser.add_argument("--res", type=int, help="Grid nodes per axis")
        parser.add_argument("--young-res", type=int, help="Nodes per axis of the dual grid")
        parser.add_argument("--box", type=float, help="Half-width of the field box")
        parser.add_argument("--levels", type=int, help="Number of levels in per-level tables")
        parser.add_argument("--refinement-levels", type=int, help="Coarsened grids in the refinement trace")
        parser.add_argument("--residual-tolerance", type=float, help="Tolerance of the extremality residuals")
        parser.add_argument("--output-dir", type=str, help="Directory for run artifacts")
        parser.add_argument("--seed", type=int, help="Seed for randomized fields")

    def handle(self, *args, **options):
        action = options.get("action")
        if not action:
            raise CommandError("No action specified. Use --help for available actions.", returncode=EXIT_ERROR)

        fields = ("u", "phi", "K", "L", "A", "a", "t", "x0", "dim", "res", "young_res", "box", "levels")
        fields += ("refinement_levels", "residual_tolerance", "output_dir", "seed", "then_verify")
        overrides = {name: options.get(name) for name in fields}
        try:
            config = load_config(action, overrides, options.get("config"))
            result = run(config)
        except AnisoException as e:
            logger.error(f"{action} failed: {e}")
            raise CommandError(f"ERROR {e.code}: {e}", returncode=EXIT_ERROR)

        summary = result.payload.get("verdict") or "done"
        self.stdout.write(f"{action}: {summary} -> {result.directory}")
        if result.exit_code == EXIT_VIOLATION:
            raise CommandError(
                f"violation: lhs exceeds rhs beyond the error estimate ({result.directory})", returncode=EXIT_VIOLATION
            )
