"""
Celery configuration for the LPPL V&V toolkit
"""
import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lppl_vnv.settings')

app = Celery('lppl_vnv')

# All Celery settings carry the CELERY_ prefix in settings.py
app.config_from_object('django.conf:settings', namespace='CELERY')

app.autodiscover_tasks()
