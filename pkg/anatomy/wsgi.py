"""
WSGI entry point for serving the analysis API, e.g.

    gunicorn anatomy.wsgi:application --bind 0.0.0.0:8000
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'anatomy.settings')

application = get_wsgi_application()
