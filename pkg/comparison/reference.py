import logging
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import yaml

from .exceptions import ReferenceFileError

logger = logging.getLogger(__name__)

REFERENCE_SCHEMA = {
    "type": "object",
    "required": ["name", "components"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "components": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "layer": {"type": "integer", "minimum": 0},
                    "aliases": {"type": "array", "items": {"type": "string", "minLength": 1}},
                    "known_methods": {"type": "array", "items": {"type": "string", "minLength": 1}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class ReferenceComponent:
    name: str
    layer: int = 0
    aliases: tuple = ()
    known_methods: tuple = ()


@dataclass(frozen=True)
class ReferenceArchitecture:
    """A declared list of components, in the order they were listed."""

    name: str
    components: tuple = ()


def reference_from_data(data):
    jsonschema.validate(data, REFERENCE_SCHEMA)
    components = tuple(
        ReferenceComponent(
            name=component["name"],
            layer=component.get("layer", 0),
            aliases=tuple(component.get("aliases", ())),
            known_methods=tuple(component.get("known_methods", ())),
        )
        for component in data["components"]
    )
    names = [component.name for component in components]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise ReferenceFileError(f"Duplicate component names: {', '.join(duplicates)}")
    return ReferenceArchitecture(name=data["name"], components=components)


def load_reference(path):
    """
    Read a YAML reference architecture.

    Raises
        ReferenceFileError: missing file, bad YAML, schema violation or
        duplicate component names.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
        reference = reference_from_data(data)
    except OSError as e:
        raise ReferenceFileError(f"Cannot read reference {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ReferenceFileError(f"Reference {path} is not valid YAML: {e}") from e
    except jsonschema.ValidationError as e:
        raise ReferenceFileError(f"Reference {path} is invalid: {e.message}") from e
    logger.info(f"Loaded reference {reference.name} with {len(reference.components)} components")
    return reference
