from django.apps import AppConfig


class RearrangementConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "rearrangement"
