from django.apps import AppConfig


class VnvConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'vnv'
    verbose_name = 'LPPL V&V'

    def ready(self):
        """Register the estimators"""
        import vnv.estimators  # noqa: F401
