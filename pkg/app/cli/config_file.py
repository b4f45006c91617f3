"""
Flat ``key = value`` run files. Keys mirror the long command-line flags;
``grid`` and ``component`` may repeat. Lines starting with ``#`` are comments.

    family = h
    function = t^3
    order = 2
    grid = t=1:2:9
"""
import logging
from pathlib import Path
from typing import Dict, List, Union

from app.exceptions.classification_exceptions import ConfigError
from app.schemas.schemas import GridAxis

logger = logging.getLogger(__name__)

SCALAR_KEYS = ("command", "family", "function", "order", "tolerance", "format", "output", "workers")
REPEATED_KEYS = ("grid", "component")

ConfigValues = Dict[str, Union[str, List[str]]]


def parse_config_text(text: str) -> ConfigValues:
    values: ConfigValues = {key: [] for key in REPEATED_KEYS}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {number}: expected 'key = value'", field=key or None)
        if key in REPEATED_KEYS:
            values[key].append(value)
        elif key in SCALAR_KEYS:
            if key in values:
                raise ConfigError(f"line {number}: '{key}' given more than once", field=key)
            values[key] = value
        else:
            raise ConfigError(f"line {number}: unknown key '{key}'", field=key)
    return values


def load_config_file(path: Union[str, Path]) -> ConfigValues:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}", field="config")
    logger.debug(f"Loaded run file {path}")
    return parse_config_text(text)


def parse_grid_axis(text: str) -> GridAxis:
    """``coord=min:max:count``, e.g. ``x=0:1:9``."""
    coordinate, sep, spec = text.partition("=")
    parts = spec.split(":")
    if not sep or len(parts) != 3:
        raise ConfigError(f"grid '{text}' is not of the form coord=min:max:count", field="grid")
    try:
        minimum, maximum, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid '{text}' has a non-numeric bound or count", field="grid")
    if count < 1:
        raise ConfigError(f"grid '{text}' is empty", field="grid")
    return GridAxis(coordinate=coordinate.strip(), minimum=minimum, maximum=maximum, count=count)


def parse_component(text: str) -> tuple:
    """``tt=exp(2*x)`` -> ("tt", "exp(2*x)")."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip() or not value.strip():
        raise ConfigError(f"component '{text}' is not of the form ij=expression", field="component")
    return key.strip(), value.strip()
