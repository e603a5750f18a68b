import logging
import re
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import yaml
from django.conf import settings

from .aggregation import UNCATEGORIZED
from .exceptions import InvalidPatternError, RulesetFileError

logger = logging.getLogger(__name__)

DEFAULT_RULESET_PATH = Path(__file__).resolve().parent / "data" / "default_ruleset.yaml"

RULESET_SCHEMA = {
    "type": "object",
    "required": ["rules"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["category", "patterns"],
                "properties": {
                    "category": {"type": "string", "minLength": 1},
                    "patterns": {"type": "array", "items": {"type": "string", "minLength": 1}},
                    "is_regex": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class CategoryRule:
    category: str
    patterns: tuple
    is_regex: bool = False


@dataclass(frozen=True)
class CategoryRuleset:
    """Ordered rules; the first one that matches decides."""

    rules: tuple = ()
    name: str = ""

    def compile(self):
        """
        Return one predicate per rule.

        Raises
            InvalidPatternError: naming the index of the first bad rule.
        """
        predicates = []
        for index, rule in enumerate(self.rules):
            if rule.is_regex:
                try:
                    compiled = [re.compile(pattern, re.IGNORECASE) for pattern in rule.patterns]
                except re.error as e:
                    raise InvalidPatternError(index, e.pattern, e.msg) from e
                predicates.append(lambda text, compiled=compiled: any(regex.search(text) for regex in compiled))
            else:
                lowered = [pattern.lower() for pattern in rule.patterns]
                predicates.append(lambda text, lowered=lowered: any(pattern in text.lower() for pattern in lowered))
        return predicates


def categorize(graph, rules):
    """
    Label every node of ``graph`` with a category.

    The label is tried against the rules first; failing that, rules are tried
    in order against the leaf names of the node's members. Nodes nothing
    matches are "uncategorized".
    """
    predicates = rules.compile()
    categories = {}
    for node in graph.nodes:
        category = next(
            (rule.category for rule, matches in zip(rules.rules, predicates) if matches(node.label)),
            None,
        )
        if category is None:
            category = next(
                (
                    rule.category
                    for rule, matches in zip(rules.rules, predicates)
                    if any(matches(leaf) for leaf in node.member_leaves)
                ),
                UNCATEGORIZED,
            )
        categories[node.label] = category
    logger.debug(f"Categorized {len(categories)} nodes with ruleset {rules.name or '<unnamed>'}")
    return graph.with_categories(categories)


def ruleset_from_data(data, name=""):
    jsonschema.validate(data, RULESET_SCHEMA)
    ruleset = CategoryRuleset(
        rules=tuple(
            CategoryRule(rule["category"], tuple(rule["patterns"]), rule.get("is_regex", False))
            for rule in data["rules"]
        ),
        name=data.get("name", name),
    )
    ruleset.compile()
    return ruleset


def load_ruleset(path):
    """
    Read a YAML ruleset file.

    Raises
        RulesetFileError: missing file, bad YAML or schema violation.
        InvalidPatternError: a regular expression does not compile.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
        return ruleset_from_data(data, name=path.stem)
    except OSError as e:
        raise RulesetFileError(f"Cannot read ruleset {path}: {e}") from e
    except yaml.YAMLError as e:
        raise RulesetFileError(f"Ruleset {path} is not valid YAML: {e}") from e
    except jsonschema.ValidationError as e:
        raise RulesetFileError(f"Ruleset {path} is invalid: {e.message}") from e


def default_ruleset():
    """The shipped ruleset, or the one named by ``ANATOMY['DEFAULT_RULESET']``."""
    return load_ruleset(settings.ANATOMY.get("DEFAULT_RULESET", DEFAULT_RULESET_PATH))
