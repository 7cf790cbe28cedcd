from django.apps import AppConfig


class WaveguideQedConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "waveguide_qed"
    verbose_name = "Two-TLS waveguide QED"
