"""
Django settings for the anatomy project.

The analysis itself runs from management commands (``python manage.py
inspect|graph|top|match|compare|includes``); the REST surface in ``pipeline``
exposes the same operations over HTTP.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

from pathlib import Path
import environ
import os
import dj_database_url

env = environ.Env()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

if os.path.exists(os.path.join(BASE_DIR, '.env')):
    environ.Env.read_env(os.path.join(BASE_DIR, '.env'))

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("SECRET_KEY", default="anatomy-development-only-secret-key")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = env.bool("DEBUG", default=False)

ALLOWED_HOSTS = env.list("ALLOWED_HOSTS", default=["localhost", "127.0.0.1", "testserver"])


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'django.contrib.staticfiles',

    # 3rd party apps
    'drf_yasg',
    'rest_framework',

    # Installed apps
    'profiles.apps.ProfilesConfig',
    'callgraph.apps.CallgraphConfig',
    'symbols.apps.SymbolsConfig',
    'comparison.apps.ComparisonConfig',
    'includes.apps.IncludesConfig',
    'emitters.apps.EmittersConfig',
    'pipeline.apps.PipelineConfig',
]

SWAGGER_SETTINGS = {
    'SECURITY_DEFINITIONS': {},
    'USE_SESSION_AUTH': False,
}

REST_FRAMEWORK = {
    # Uploaded profiles are analysed statelessly; nobody logs in.
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.MultiPartParser',
        'rest_framework.parsers.FormParser',
    ],
}

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'whitenoise.middleware.WhiteNoiseMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'anatomy.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
            ],
        },
    },
]

WSGI_APPLICATION = 'anatomy.wsgi.application'


# Database
# Nothing is persisted; Django still wants a default connection.

DATABASES = {
    "default": dj_database_url.config(
        default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}", conn_max_age=600
    )
}

TIME_ZONE = env("TIME_ZONE", default="UTC")

LANGUAGE_CODE = env("LANGUAGE_CODE", default="en-us")

USE_I18N = True

USE_TZ = True


# Static files (Swagger UI assets)

STATIC_URL = 'static/'
STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Uploaded profiles can be large; keep them off the heap past 10MB.
FILE_UPLOAD_MAX_MEMORY_SIZE = env.int("FILE_UPLOAD_MAX_MEMORY_SIZE", default=10 * 1024 * 1024)
DATA_UPLOAD_MAX_MEMORY_SIZE = env.int("DATA_UPLOAD_MAX_MEMORY_SIZE", default=100 * 1024 * 1024)


# Analysis defaults. Thresholds are kept as strings and parsed into exact
# fractions by pipeline.config.

ANATOMY = {
    'FUZZY_THRESHOLD': env("ANATOMY_FUZZY_THRESHOLD", default="0.5"),
    'IDLE_THRESHOLD': env("ANATOMY_IDLE_THRESHOLD", default="0.01"),
    'DOT_THRESHOLD': env("ANATOMY_DOT_THRESHOLD", default="0.01"),
    'REPEAT_THRESHOLD': env.int("ANATOMY_REPEAT_THRESHOLD", default=10),
    'DEFAULT_RULESET': env(
        "ANATOMY_DEFAULT_RULESET",
        default=str(BASE_DIR / 'symbols' / 'data' / 'default_ruleset.yaml'),
    ),
    'SCAN_WORKERS': env.int("ANATOMY_SCAN_WORKERS", default=4),
    'COLOR_MAP': {
        'initialization': 'orange',
        'class-registration': 'red',
        'graphics': 'blue',
        'window-system': 'gray',
    },
}


# Logging goes to stderr; stdout carries the data products.

LOG_LEVEL = env("LOG_LEVEL", default="WARNING")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': env("DJANGO_LOG_LEVEL", default="WARNING"),
            'propagate': False,
        },
    },
}
