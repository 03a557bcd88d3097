from django.apps import AppConfig


class BarrierConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'barrier'
