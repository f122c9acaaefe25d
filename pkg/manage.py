#!/usr/bin/env python
"""Entry point for the aniso pipelines: `python manage.py aniso <command> ...`."""
import os
import sys


def main():
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError("Django is required to run the aniso command; install the project dependencies.") from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
