"""
WSGI config for lppl_vnv project.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lppl_vnv.settings')

application = get_wsgi_application()
