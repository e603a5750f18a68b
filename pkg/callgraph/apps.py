from django.apps import AppConfig


class CallgraphConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'callgraph'
    verbose_name = 'Call graphs'
