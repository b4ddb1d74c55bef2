"""
Stratalign Configuration Package

This package contains configuration management and settings.
"""

from .registration import RegistrationConfig
from .settings import (
    GROUPS,
    Settings,
    available_keys,
    configure_logging,
    load_config_file,
    settings
)

__all__ = [
    "GROUPS",
    "RegistrationConfig",
    "Settings",
    "available_keys",
    "configure_logging",
    "load_config_file",
    "settings"
]
