"""Energy-efficiency simulator for multicell massive MIMO: single-carrier TRMRC vs OFDM FDMRC receivers."""
from .analytic import Scheme
from .config import ConfigError, PowerModelConfig, SystemConfig

__all__ = ["Scheme", "ConfigError", "PowerModelConfig", "SystemConfig"]
__version__ = "0.1.0"
