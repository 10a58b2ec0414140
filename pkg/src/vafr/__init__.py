"""Acuity-driven log-polar foveated rendering on the CPU."""
from . import acuity, baselines, foveate, fxaa, lpbuffer, mapping, presets, raycast
from .acuity import AcuityModel, adapt_to_device, default_model
from .errors import ConfigError, DomainError
from .mapping import MappingContext

__all__ = [
    "acuity",
    "baselines",
    "foveate",
    "fxaa",
    "lpbuffer",
    "mapping",
    "presets",
    "raycast",
    "AcuityModel",
    "MappingContext",
    "adapt_to_device",
    "default_model",
    "ConfigError",
    "DomainError",
]
