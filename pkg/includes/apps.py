from django.apps import AppConfig


class IncludesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'includes'
    verbose_name = 'Include graphs'
