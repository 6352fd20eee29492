"""
ASGI config for lppl_vnv project.
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lppl_vnv.settings')

application = get_asgi_application()
