from django.apps import AppConfig


class RlearnerConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'rlearner'
