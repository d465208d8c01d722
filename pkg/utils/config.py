"""
Runtime settings for the vMF toolkit
Values come from the environment (optionally a .env file) with defaults
"""

import os
from typing import Callable, Dict, Tuple

from dotenv import load_dotenv

from utils.errors import ConfigError

load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_number(name: str, default: str, cast: Callable):
    raw = os.getenv(name, default)
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {cast.__name__}", key=name)


def get_settings() -> Dict:
    """
    Get toolkit settings from environment variables

    Returns:
        Dictionary with numeric defaults, worker count, log level and data paths
    """
    return {
        'default_tol': _env_number('VMF_DEFAULT_TOL', '1e-10', float),
        'default_max_iter': _env_number('VMF_DEFAULT_MAX_ITER', '500', int),
        'default_seed': _env_number('VMF_DEFAULT_SEED', '20120130', int),
        'workers': _env_number('VMF_WORKERS', '1', int),
        'log_level': os.getenv('VMF_LOG_LEVEL', 'WARNING').upper(),
        'sea_star_path': os.getenv('VMF_SEA_STAR_PATH') or None,
    }


def validate_settings(settings: Dict) -> Tuple[bool, str]:
    """
    Validate toolkit settings

    Args:
        settings: Dictionary from get_settings()

    Returns:
        Tuple of (is_valid, error_message)
    """
    if settings['default_tol'] <= 0:
        return False, "VMF_DEFAULT_TOL must be positive"

    if settings['default_max_iter'] < 1:
        return False, "VMF_DEFAULT_MAX_ITER must be at least 1"

    if settings['workers'] < 1:
        return False, "VMF_WORKERS must be at least 1"

    if settings['log_level'] not in LOG_LEVELS:
        return False, f"VMF_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}"

    sea_star_path = settings.get('sea_star_path')
    if sea_star_path and not os.path.isfile(sea_star_path):
        return False, f"VMF_SEA_STAR_PATH does not point to a file: {sea_star_path}"

    return True, "Settings are valid"
