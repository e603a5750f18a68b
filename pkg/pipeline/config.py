"""
Layered configuration for the management commands.

Values come from ``settings.ANATOMY``, then from an optional YAML file
(``--config``), then from command-line flags; a later layer wins whenever it
sets a value.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import jsonschema
import yaml
from django.conf import settings

from anatomy.exceptions import ConfigurationError
from emitters.dot import DotOptions
from symbols.aggregation import LEVELS

logger = logging.getLogger(__name__)

CALL_LEVEL = "call"
GRAPH_LEVELS = (CALL_LEVEL,) + LEVELS
FORMATS = ("dot", "json", "text")

_THRESHOLD = {"type": ["number", "string"]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "ruleset": {"type": "string", "minLength": 1},
        "reference": {"type": "string", "minLength": 1},
        "fuzzy_threshold": _THRESHOLD,
        "idle_threshold": _THRESHOLD,
        "threshold": _THRESHOLD,
        "repeat_threshold": {"type": "integer", "minimum": 1},
        "max_depth": {"type": ["integer", "null"], "minimum": 0},
        "event": {"type": "string", "minLength": 1},
        "level": {"enum": list(GRAPH_LEVELS)},
        "format": {"enum": list(FORMATS)},
        "workers": {"type": "integer", "minimum": 1},
        "color_map": {"type": "object", "additionalProperties": {"type": "string"}},
    },
    "additionalProperties": False,
}


def parse_fraction(value, name, allow_zero=True):
    """
    Parse ``value`` ("0.5", "1/3", 0.25) into an exact fraction in [0, 1].

    Decimal input is read from its text, so "0.1" is exactly 1/10.

    Raises
        ConfigurationError: not a number, or out of range.
    """
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, got {value!r}")
    try:
        fraction = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"{name} must be a number such as 0.5 or 1/2, got {value!r}")
    if not 0 <= fraction <= 1:
        raise ConfigurationError(f"{name} must be within [0, 1], got {value}")
    if not allow_zero and fraction == 0:
        raise ConfigurationError(f"{name} must be greater than 0")
    return fraction


def read_config_file(path):
    """
    Load and validate a YAML config file.

    Raises
        ConfigurationError: missing file, bad YAML or unknown keys.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config file {path} is not valid YAML: {e}") from e
    data = {} if data is None else data
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigurationError(f"Config file {path} is invalid: {e.message}") from e
    logger.debug(f"Read config file {path}: {sorted(data)}")
    return data


def _defaults():
    anatomy = settings.ANATOMY
    return {
        "ruleset": anatomy.get("DEFAULT_RULESET"),
        "reference": None,
        "fuzzy_threshold": anatomy.get("FUZZY_THRESHOLD", "0.5"),
        "idle_threshold": anatomy.get("IDLE_THRESHOLD", "0.01"),
        "threshold": anatomy.get("DOT_THRESHOLD", "0.01"),
        "repeat_threshold": anatomy.get("REPEAT_THRESHOLD", 10),
        "max_depth": None,
        "event": None,
        "level": "class",
        "format": "text",
        "workers": anatomy.get("SCAN_WORKERS", 4),
        "color_map": dict(anatomy.get("COLOR_MAP", {})),
    }


@dataclass(frozen=True)
class CliConfig:
    ruleset_path: Optional[str] = None
    reference_path: Optional[str] = None
    fuzzy_threshold: Fraction = Fraction(1, 2)
    idle_threshold: Fraction = Fraction(1, 100)
    repeat_threshold: int = 10
    dot: DotOptions = field(default_factory=DotOptions)
    event: Optional[str] = None
    level: str = "class"
    output_format: str = "text"
    workers: int = 4

    @classmethod
    def from_options(cls, options, format_default=None):
        """
        Build the configuration of one command run.

        Parameters
            options (dict): parsed command options; ``None`` means the flag
                was not given. ``config`` names the YAML file layer.
            format_default (str): output format used when no layer sets one.
        """
        values = _defaults()
        if format_default is not None:
            values["format"] = format_default
        if options.get("config"):
            values.update(read_config_file(options["config"]))
        values.update({key: value for key, value in options.items() if key in values and value is not None})

        if values["level"] not in GRAPH_LEVELS:
            raise ConfigurationError(f"level must be one of {', '.join(GRAPH_LEVELS)}, got {values['level']!r}")
        if values["format"] not in FORMATS:
            raise ConfigurationError(f"format must be one of {', '.join(FORMATS)}, got {values['format']!r}")
        if int(values["repeat_threshold"]) < 1:
            raise ConfigurationError(f"repeat_threshold must be at least 1, got {values['repeat_threshold']}")
        if int(values["workers"]) < 1:
            raise ConfigurationError(f"workers must be at least 1, got {values['workers']}")
        dot = DotOptions(
            threshold=parse_fraction(values["threshold"], "threshold"),
            max_depth=values["max_depth"],
            color_map=values["color_map"],
        )

        config = cls(
            ruleset_path=values["ruleset"],
            reference_path=values["reference"],
            fuzzy_threshold=parse_fraction(values["fuzzy_threshold"], "fuzzy_threshold", allow_zero=False),
            idle_threshold=parse_fraction(values["idle_threshold"], "idle_threshold"),
            repeat_threshold=int(values["repeat_threshold"]),
            dot=dot,
            event=values["event"],
            level=values["level"],
            output_format=values["format"],
            workers=int(values["workers"]),
        )
        logger.debug(f"Effective configuration: {config}")
        return config

    def dot_options(self, event_index):
        return DotOptions(
            threshold=self.dot.threshold,
            max_depth=self.dot.max_depth,
            color_map=self.dot.color_map,
            event_index=event_index,
        )
