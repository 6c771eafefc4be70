#!/usr/bin/env python
"""
Точка входа проекта.

    python manage.py qwalk validate quantum_walks/samples/hadamard.json
    python manage.py qwalk scatter quantum_walks/samples/hadamard.json --angles 8
    python manage.py test quantum_walks
"""
import os
import sys


def main():
    """Запустить Django-команду (qwalk, test, ...)"""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "qwalkproject.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Django не найден. Установите зависимости: "
            "pip install -r requirements.txt"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
