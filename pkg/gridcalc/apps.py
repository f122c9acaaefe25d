from django.apps import AppConfig


class GridcalcConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "gridcalc"
    verbose_name = "Grid calculus"
