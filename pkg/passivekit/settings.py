import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'dev-secret-key')
DEBUG = os.getenv('DEBUG', 'False') == 'True'

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'realization',
]

# The toolkit keeps no state between commands.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}

PASSIVEKIT = {
    'RTOL': float(os.getenv('PASSIVEKIT_RTOL', '1e-10')),
    'CONTRACTION_TOL': float(os.getenv('PASSIVEKIT_CONTRACTION_TOL', '1e-10')),
    'SYMMETRY_TOL': float(os.getenv('PASSIVEKIT_SYMMETRY_TOL', '1e-12')),
    'COND_LIMIT': float(os.getenv('PASSIVEKIT_COND_LIMIT', '1e12')),
    'PSD_TOL': float(os.getenv('PASSIVEKIT_PSD_TOL', '1e-8')),
    'NORM_TOL': float(os.getenv('PASSIVEKIT_NORM_TOL', '1e-9')),
    'MATCH_TOL': float(os.getenv('PASSIVEKIT_MATCH_TOL', '1e-9')),
    'INNER_TOL': float(os.getenv('PASSIVEKIT_INNER_TOL', '1e-8')),
    'MERGE_TOL': float(os.getenv('PASSIVEKIT_MERGE_TOL', '1e-10')),
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'realization': {
            'handlers': ['console'],
            'level': os.getenv('PASSIVEKIT_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        },
    },
}
