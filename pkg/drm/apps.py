from django.apps import AppConfig


class DrmConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'drm'
