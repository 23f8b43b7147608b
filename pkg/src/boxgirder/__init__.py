"""Staged solid finite-element analysis and shear lag of box-girder bridges."""

from .bridge import BridgeConfig, build_bridge, run_live_load, run_staged
from .config import default_config, load_config, parse_config
from .section import SectionParams, build_cross_section, section_properties
from .shear_lag import shear_lag_profile

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "SectionParams",
    "build_bridge",
    "build_cross_section",
    "default_config",
    "load_config",
    "parse_config",
    "run_live_load",
    "run_staged",
    "section_properties",
    "shear_lag_profile",
]
