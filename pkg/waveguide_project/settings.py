import sys
from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config("SECRET_KEY", default="waveguide-qed-local-only")
DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    "rest_framework",
    "waveguide_qed",
]

# Simulations only read scenario files and write flat result files
DATABASES = {}

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

LOG_LEVEL = config("LOG_LEVEL", default="INFO")

# Override for testing
if "test" in sys.argv:
    LOG_LEVEL = "WARNING"

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "waveguide_qed": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}

# Simulation defaults, overridable from the environment or a .env file
WAVEGUIDE_QED = {
    "OUTPUT_DIR": Path(config("WAVEGUIDE_OUTPUT_DIR", default="results")),
    "COMPARE_TOLERANCE": config("WAVEGUIDE_COMPARE_TOLERANCE", default=1e-6, cast=float),
    "EVANESCENT_MARGIN": config("WAVEGUIDE_EVANESCENT_MARGIN", default=0.05, cast=float),
    "STEP_FRACTION_TAU": config("WAVEGUIDE_STEP_FRACTION_TAU", default=64, cast=int),
    "STEP_FRACTION_GAMMA": config("WAVEGUIDE_STEP_FRACTION_GAMMA", default=200, cast=int),
    "SAMPLES": config("WAVEGUIDE_SAMPLES", default=2000, cast=int),
}
