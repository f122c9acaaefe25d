import os
from pathlib import Path

from decouple import config

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent.parent


def optional_float(value):
    return float(value) if value not in (None, "") else None


SECRET_KEY = config("SECRET_KEY", default="aniso-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []

# Nothing is persisted; the database is never opened by the pipelines
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}

# Application definition
DJANGO_APPS = [
    "django.contrib.contenttypes",
]

LOCAL_APPS = [
    "core",
    "geometry",
    "young",
    "rearrangement",
    "gridcalc",
    "verification",
]

INSTALLED_APPS = DJANGO_APPS + LOCAL_APPS

# Numerical defaults shared by every app. Library functions accept explicit
# keyword arguments and fall back to these values when they are omitted.
ANISO = {
    "threads": config("ANISO_THREADS", default=4, cast=int),
    "default_resolution": config("ANISO_RESOLUTION", default=256, cast=int),
    "young_resolution": config("ANISO_YOUNG_RESOLUTION", default=257, cast=int),
    "min_resolution": 32,
    "output_dir": config("ANISO_OUTPUT_DIR", default="runs"),
    # geometry
    "disc_vertices": 256,
    "polar_directions_3d": 1024,
    "support_directions": 128,
    "perimeter_mode": "smooth",
    "mollifier_cells": 2.0,
    # young functions
    "maximizer_levels": 200,
    "maximizer_floor": 1e-4,
    "convexity_triples": 1000,
    # rearrangement
    "level_count": 512,
    # grid calculus
    "gradient_floor": 1e-8,
    "band_divisions": 256,
    "chain_levels": 48,
    "chain_tolerance": 0.05,
    # verification
    "box_factor": 3.0,
    "inner_box_fraction": 0.5,
    "level_margin": 0.05,
    "sandwich_quantile": 0.99,
    "quasi_convex_threshold": 0.98,
    "residual_tolerance": 0.1,
    "refinement_levels": 2,
    # a violation must keep this share of its coarse-grid excess under refinement
    "refinement_ratio": 0.75,
    # C1, C2 of the discretization error model; calibrated on the radial fixture unless both are set
    "error_model": {
        "c1": config("ANISO_ERROR_C1", default="", cast=optional_float),
        "c2": config("ANISO_ERROR_C2", default="", cast=optional_float),
    },
    "error_calibration_resolutions": (64, 128),
    "error_calibration_safety": 2.0,
}

# Logging configuration
LOG_FILE = config("ANISO_LOG_FILE", default="")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {thread:d} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "level": config("ANISO_LOG_LEVEL", default="WARNING"),
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        }
        for app in LOCAL_APPS
    },
}

if LOG_FILE:
    os.makedirs(os.path.dirname(os.path.abspath(LOG_FILE)), exist_ok=True)
    LOGGING["handlers"]["file"] = {
        "level": "INFO",
        "class": "logging.FileHandler",
        "filename": LOG_FILE,
        "formatter": "verbose",
    }
    for logger_config in LOGGING["loggers"].values():
        logger_config["handlers"].append("file")

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"
