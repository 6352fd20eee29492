"""
Django settings for lppl_vnv project.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env(
    DJANGO_DEBUG=(bool, True),
    DJANGO_SECRET_KEY=(str, 'django-insecure-lppl-vnv-development-key-change-me'),
    LPPL_VNV_OUTPUT_DIR=(str, str(BASE_DIR / 'vnv_runs')),
    LPPL_VNV_LOG_LEVEL=(str, 'INFO'),
    CELERY_BROKER_URL=(str, 'redis://localhost:6379/0'),
)
environ.Env.read_env(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('DJANGO_SECRET_KEY')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = env('DJANGO_DEBUG')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Third-party apps
    'rest_framework',
    'django_celery_results',

    # Project apps
    'vnv',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'lppl_vnv.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'lppl_vnv.wsgi.application'


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Django REST Framework
REST_FRAMEWORK = {
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 50,
    'DEFAULT_FILTER_BACKENDS': [
        'rest_framework.filters.SearchFilter',
        'rest_framework.filters.OrderingFilter',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
        'rest_framework.renderers.BrowsableAPIRenderer',
    ],
    'DATETIME_FORMAT': '%Y-%m-%dT%H:%M:%S.%fZ',
}


# Celery Configuration
CELERY_BROKER_URL = env('CELERY_BROKER_URL')
CELERY_RESULT_BACKEND = 'django-db'
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 12 * 60 * 60  # 565-run presets take hours


# Logging Configuration
LOG_DIR = BASE_DIR / 'logs'
LOG_DIR.mkdir(exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
            'level': env('LPPL_VNV_LOG_LEVEL'),
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'lppl_vnv.log',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'vnv': {
            'handlers': ['console', 'file'],
            'level': 'DEBUG',
            'propagate': False,
        },
    },
}


# LPPL V&V Specific Settings
_SEARCH_DEFAULTS = {
    'tc_offset_min': 1.0,
    'tc_offset_max_fraction': 0.5,
    'tc_offset_max_samples': None,
    'tc_step': 1.0,
    'm_bounds': [0.05, 0.95],
    'omega_bounds': [2.0, 25.0],
    'd_bounds': [0.0, 1.0],
    'lattice': [3, 3],
    'xatol': 1e-8,
    'fatol': 1e-10,
    'maxfev': 2000,
    'exp_rate_bound': 10.0,
    'exp_grid_size': 201,
}

LPPL_VNV = {
    'OUTPUT_DIR': env('LPPL_VNV_OUTPUT_DIR'),

    # Every key a config file or --set override may touch
    'DEFAULTS': {
        'source': 'abcde',
        'runs': 50,
        'seed': 20170101,
        'threshold': 0.15,
        'fractions': ['half', 'third', 'quarter'],
        'min_window_length': 50,
        'subsamples': {'count': 10, 'min_length': 30},
        'max_fit_failure_fraction': 0.5,
        'algorithms': ['subordinated'],
        'paired': True,
        'holm_mode': 'paper-naive',
        'abcde': {
            # paper-verbatim settles onto a Lorenz fixed point, so r never bursts there
            'preset': 'lorenz-standard',
            # null means "take the value from the preset"
            'sigma': None, 'rho': None, 'beta': None,
            'a1': None, 'a2': None, 'alpha': None, 'epsilon': None,
            'initial_state': {'x': 0.0, 'y': 1.0, 'z': 2.0, 'r': 1.0, 'theta': 5.03999},
            'dt': 0.005,
            'horizon': 2000.0,
            # theta0 = 5.04 makes the first transient stiff (rate ~ -5.9e3)
            'substeps': 12,
            'save_every': 1,
            'jitter': 1e-3,
            # r is the amplitude of a linear pair; the bound only catches runaway growth
            'blowup_bound': 1e100,
            # alpha tuned so the pair is at its transition at transition_epsilon
            'coupling': 'transition',
            'transition_epsilon': 5.0,
            # start-up burst from theta0 = 5.04 plus the Lorenz transient
            'discard': 50.0,
        },
        'synthetic': {
            'dt': 1.0,
            'peak': 20.0,
            'ramp_length': 20,
            'prior_drop_length': 10,
            'rise_start_value': 1.1,
            'rise_length': 120,
            'crash_length': 20,
            'tail_length': 10,
            'm_range': [0.45, 0.55],
            'omega_range': [5.5, 6.5],
        },
        'search': {
            'subordinated': dict(_SEARCH_DEFAULTS),
            'phase_transition': dict(_SEARCH_DEFAULTS),
        },
        'compare': {
            'baseline': 'subordinated',
            'challenger': 'phase_transition',
            # below this pooled ratio an ABCDE comparison is repeated on fallback_preset
            'min_ratio': 10.0,
            'fallback_preset': 'lorenz-standard',
        },
        'plot': {'runs': 3, 'stride': 1},
        'output_dir': None,
        'workers': 1,
    },

    # Partial overlays selected with --preset
    'PRESETS': {
        'desk': {
            'runs': 50,
            'abcde': {'save_every': 10},
        },
        'paper': {
            'runs': 565,
            'abcde': {'save_every': 10},
        },
        'oracle': {
            'source': 'synthetic',
            'runs': 4,
            'min_window_length': 20,
            'subsamples': {'count': 2, 'min_length': 20},
            'search': {
                'subordinated': {
                    'tc_offset_max_samples': 90.0, 'tc_step': 3.0,
                    'm_bounds': [0.3, 0.7], 'omega_bounds': [4.0, 8.0],
                    'lattice': [2, 2], 'maxfev': 600,
                },
                'phase_transition': {
                    'tc_offset_max_samples': 90.0, 'tc_step': 3.0,
                    'omega_bounds': [4.0, 8.0], 'lattice': [2, 2], 'maxfev': 600,
                },
            },
        },
    },
}
