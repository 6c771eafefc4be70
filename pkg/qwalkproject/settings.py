import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-qwalk-local-key')

DEBUG = os.getenv('DEBUG', 'True').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'quantum_walks',
]

# Библиотека не хранит ничего в БД, но Django требует описания подключения
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_float(name, default):
    """Прочитать число с плавающей точкой из env или вернуть значение по умолчанию"""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    return float(raw)


# ============================================================================
# ЧИСЛЕННЫЕ ДОПУСКИ
# ============================================================================

QWALK_TOLERANCES = {
    'unitary': _env_float('QWALK_EPS_UNITARY', 1e-9),  # max-норма U†U - I
    'num': _env_float('QWALK_EPS_NUM', 1e-9),          # общий численный допуск
    'eig': _env_float('QWALK_EPS_EIG', 1e-8),          # |λ| ≈ 1 для связанных состояний
    'compare': _env_float('QWALK_EPS_COMPARE', 1e-9),  # порог "графы различимы"
    'sing': _env_float('QWALK_EPS_SING', 1e-10),       # близость к резонансу/полюсу
}

# Радиус окружности для восстановления коэффициентов Тейлора составных функций
QWALK_SERIES_RADIUS = _env_float('QWALK_SERIES_RADIUS', 0.5)

# Каталог по умолчанию для CSV и документов, которые пишет CLI
QWALK_OUTPUT_DIR = os.getenv('QWALK_OUTPUT_DIR', str(BASE_DIR / 'output'))

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'quantum_walks': {
            'handlers': ['console'],
            'level': os.getenv('QWALK_LOG_LEVEL', 'WARNING'),
        },
    },
}
