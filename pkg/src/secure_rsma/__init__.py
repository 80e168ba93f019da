"""Secrecy energy-efficient RIS-assisted rate-splitting downlink with energy-harvesting eavesdroppers."""
from .channels import ChannelSet, RisPhases, generate_channels
from .config import (ConfigError, Scheme, SystemConfig, load_config, default_config,
                     save_config)
from .metrics import PrecoderSet, RateAllocation, eh_inverse, eh_report, secrecy_report

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "ConfigError", "PrecoderSet", "RateAllocation", "RisPhases", "Scheme",
    "SystemConfig", "eh_inverse", "eh_report", "generate_channels", "load_config",
    "default_config", "save_config", "secrecy_report",
]
