from django.apps import AppConfig


class QuantumWalksConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "quantum_walks"
    verbose_name = "Квантовые блуждания на эйлеровых графах"
