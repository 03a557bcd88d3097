"""
Django settings for uplift_rank project.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='uplift-rank-local-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    # Third party apps
    'rest_framework',

    # Local apps
    'core',
    'ingest',
    'nn',
    'drm',
    'barrier',
    'rlearner',
    'evaluation',
    'sim',
    'runs',
]

# No app persists anything in a database; artifacts are CSV/JSON files on disk.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Runtime knobs
UPLIFT_RANK_THREADS = config('UPLIFT_RANK_THREADS', default=1, cast=int)
UPLIFT_RANK_SEED = config('UPLIFT_RANK_SEED', default=7, cast=int)
UPLIFT_RANK_OUTPUT_DIR = config('UPLIFT_RANK_OUTPUT_DIR', default='runs_out')
UPLIFT_RANK_LOG_LEVEL = config('UPLIFT_RANK_LOG_LEVEL', default='INFO')

# Hyperparameter defaults, read through uplift_rank.conf.get_defaults()
UPLIFT_RANK = {
    'ADAM': {'lr': 0.001, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8},
    'ITERATIONS': 1500,
    'HIDDEN_LAYERS': [],
    'L2_REG': 0.0,
    'RECTIFIER_EPS': 1e-6,
    'RATIO_FORM': 'softplus_denominator',
    'PROPENSITY_CLIP': [0.01, 0.99],
    'PERCENTAGE': 0.40,
    'ANNEAL': {'T0': 0.5, 'dT': 0.1, 'every': 10, 'Tmax': 50.0},
    'ALPHA_DRM': 1.5,
    'ALPHA_RLEARNER': 1.3,
    'LAMBDA_GRID': [0.001, 0.005, 0.01, 0.05, 0.1, 0.5],
    'DUALITY': {'alpha': 0.01, 'max_iters': 2000, 'tol': 1e-9, 'budget_fraction': 0.4},
    'LOGISTIC': {'iterations': 500, 'lr': 0.1},
    'RIDGE_REG': 0.0,
    'SPLIT': [0.6, 0.2, 0.2],
    'CURVE_GRID_STEP': 5,
    'GENERALIZATION_Q': [15, 20, 30, 40, 60, 80, 100],
    'LOG_EVERY': 100,
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': UPLIFT_RANK_LOG_LEVEL,
    },
}
