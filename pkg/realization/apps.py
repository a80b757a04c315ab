from django.apps import AppConfig


class RealizationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'realization'
    verbose_name = 'Passive system realizations'
