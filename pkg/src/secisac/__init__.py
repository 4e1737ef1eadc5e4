"""Cramér-Rao bounds and ergodic secrecy rates for an artificial-noise-aided ISAC downlink."""

from .errors import ConfigError, DegenerateChannel, InfiniteErgodicCrb
from .system_model import ChannelRealization, SystemParams, make_rng

__all__ = [
    "ConfigError",
    "DegenerateChannel",
    "InfiniteErgodicCrb",
    "ChannelRealization",
    "SystemParams",
    "make_rng",
]

__version__ = "0.1.0"
