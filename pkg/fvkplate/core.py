"""
FvK Plate Core Module
"""

import os
import logging
from typing import Dict, Any, Optional, Callable, List
from dotenv import load_dotenv

from .exceptions import FvKConfigError

load_dotenv()

logger = logging.getLogger("fvkplate")

if not logger.handlers:
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG)
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)
    logger.setLevel(logging.WARNING)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

_DEFAULTS = {
    "output_dir": "fvk_runs",
    "log_level": "WARNING",
    "energy_floor_factor": 1e6,
    "noise_amplitude": 1e-3,
    "float_digits": 17,
    "history_limit": 1000,
}

# global configuration
_config: Dict[str, Any] = dict(_DEFAULTS)

# List of callback functions to be executed after initialization
_init_callbacks: List[Callable] = []

def register_init_callback(callback: Callable) -> None:
    """
    Register a callback function to be executed after initialization

    Args:
        callback: Callback function
    """
    _init_callbacks.append(callback)

def _env_float(name: str) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise FvKConfigError(f"Environment variable {name} is not a number: {raw!r}")

def fvk_initialize(
    output_dir: Optional[str] = None,
    log_level: Optional[str] = None,
    energy_floor_factor: Optional[float] = None,
    noise_amplitude: Optional[float] = None,
) -> None:
    """
    Initialize fvkplate configuration

    Args:
        output_dir: Default directory for run outputs
        log_level: Package log level name
        energy_floor_factor: Multiplier of |E0 + 1| used as the default divergence floor
        noise_amplitude: Relative amplitude of random initial perturbations

    Raises:
        FvKConfigError: If a value is invalid
    """
    # use the provided parameters first
    if output_dir:
        _config["output_dir"] = output_dir
    elif os.getenv("FVK_OUTPUT_DIR"):
        _config["output_dir"] = os.getenv("FVK_OUTPUT_DIR")

    if log_level:
        _config["log_level"] = log_level.upper()
    elif os.getenv("FVK_LOG_LEVEL"):
        _config["log_level"] = os.getenv("FVK_LOG_LEVEL").upper()

    if energy_floor_factor is not None:
        _config["energy_floor_factor"] = float(energy_floor_factor)
    elif _env_float("FVK_ENERGY_FLOOR_FACTOR") is not None:
        _config["energy_floor_factor"] = _env_float("FVK_ENERGY_FLOOR_FACTOR")

    if noise_amplitude is not None:
        _config["noise_amplitude"] = float(noise_amplitude)
    elif _env_float("FVK_NOISE_AMPLITUDE") is not None:
        _config["noise_amplitude"] = _env_float("FVK_NOISE_AMPLITUDE")

    # verify the configuration
    if _config["log_level"] not in _LOG_LEVELS:
        raise FvKConfigError(f"Unknown log level: {_config['log_level']}")
    if _config["energy_floor_factor"] <= 0:
        raise FvKConfigError("energy_floor_factor must be positive")
    if _config["noise_amplitude"] < 0:
        raise FvKConfigError("noise_amplitude must be nonnegative")

    logger.setLevel(getattr(logging, _config["log_level"]))

    # Execute all callbacks after initialization
    for callback in _init_callbacks:
        try:
            callback()
        except Exception as e:
            logger.warning(f"Init callback failed: {e}")

    logger.info(f"fvkplate initialized, output_dir={_config['output_dir']}")

def reset_config() -> None:
    """Restore the default configuration (used by tests and the CLI)"""
    _config.clear()
    _config.update(_DEFAULTS)
    logger.setLevel(logging.WARNING)

def get_config() -> Dict[str, Any]:
    """
    Get current configuration

    Returns:
        Current configuration dictionary
    """
    return _config.copy()
