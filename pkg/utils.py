"""
Utility functions for configuration files, meshes, environment defaults and output files.
"""

import os
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from errors import ConfigError

logger = logging.getLogger(__name__)

FLOAT_KEYS = {"y0", "b", "mesh_step", "eps", "h1_factor"}
INT_KEYS = {"mesh_count", "node_cap", "workers"}
BOOL_KEYS = {"simplified_js"}
STRING_KEYS = {"problem", "integrand", "algorithm", "variant", "output", "out_path"}
LIST_KEYS = {"mesh"}
CONFIG_KEYS = FLOAT_KEYS | INT_KEYS | BOOL_KEYS | STRING_KEYS | LIST_KEYS

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_mesh(text: str) -> List[float]:
    """
    Parse a comma- or whitespace-separated list of abscissas.

    Raises:
        ValueError: If any entry is not a number
    """
    parts = [part for part in text.replace(",", " ").split() if part]
    try:
        return [float(part) for part in parts]
    except ValueError as e:
        raise ValueError(f"Invalid mesh: {text!r}") from e


def build_mesh(step: float, count: int) -> List[float]:
    """Uniform mesh step*k for k = 1..count."""
    if not step > 0:
        raise ValueError(f"mesh step must be positive, got {step!r}")
    if count < 1:
        raise ValueError(f"mesh count must be at least 1, got {count!r}")
    return [step * k for k in range(1, count + 1)]


def coerce_config_value(key: str, raw: str, line: Optional[int] = None) -> Any:
    """
    Convert one raw config value to the type its key expects.

    Raises:
        ConfigError: If the key is unknown or the value cannot be converted
    """
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown key (known: {', '.join(sorted(CONFIG_KEYS))})", field=key, line=line)
    value = raw.strip()
    try:
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            return int(float(value))
        if key in LIST_KEYS:
            return parse_mesh(value)
    except ValueError as e:
        raise ConfigError(f"invalid value {value!r}", field=key, line=line) from e
    if key in BOOL_KEYS:
        lowered = value.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"invalid boolean {value!r}", field=key, line=line)
    return value


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Parse flat `key = value` text; `#` starts a comment and blank lines are ignored.

    Args:
        text: Config file contents

    Returns:
        Dictionary of typed values

    Raises:
        ConfigError: On malformed lines, unknown keys, bad values or repeated keys
    """
    values: Dict[str, Any] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", line=number)
        key, raw_value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError("missing key before '='", line=number)
        if key in values:
            raise ConfigError("key given twice", field=key, line=number)
        values[key] = coerce_config_value(key, raw_value, line=number)
    return values


def load_config_file(path: str) -> Dict[str, Any]:
    """Read and parse a config file."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    logger.debug(f"Loaded config file {path}")
    return parse_config_text(text)


def ensure_output_dir(output_dir: str = ".") -> Path:
    """Create the directory of an output file if needed."""
    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    return output_path


def format_display(value: Optional[float], decimals: int = 4) -> Optional[str]:
    """Fixed-decimal rendering used for comparison with printed tables."""
    if value is None:
        return None
    return f"{value:.{decimals}f}"


def safe_int(value: Any, default: int = 0) -> int:
    """Safely convert value to integer with default fallback."""
    try:
        if value is None or value == '':
            return default
        return int(float(value))
    except (ValueError, TypeError):
        return default


def env_int(name: str, default: int) -> int:
    """Positive integer from the environment, falling back to `default`."""
    value = safe_int(os.getenv(name), default)
    if value < 1:
        logger.warning(f"Ignoring {name}={os.getenv(name)!r}; using {default}")
        return default
    return value
