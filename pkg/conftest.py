import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "waveguide_project.settings")
django.setup()
