import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "qwalkproject.settings")
django.setup()
