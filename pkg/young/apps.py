from django.apps import AppConfig


class YoungConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "young"
    verbose_name = "Young functions"
