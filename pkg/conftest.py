import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'passivekit.settings')
django.setup()
