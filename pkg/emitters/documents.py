"""
Versioned JSON documents.

Every document is an object with ``schema_version`` and ``kind`` first,
followed by the fields of the serializer for that kind. Keys keep serializer
order and integers are written exactly, so equal values give equal text.
"""

import json
import logging

from rest_framework.renderers import JSONRenderer

from callgraph.graph import CallGraph
from comparison.matching import MatchReport
from comparison.report import ComparisonReport
from includes.scanner import IncludeGraph
from profiles.profile import Profile
from symbols.aggregation import AbstractGraph

from .exceptions import DocumentError
from .serializers import (
    AbstractGraphSerializer,
    CallGraphSerializer,
    ComparisonReportSerializer,
    IncludeGraphSerializer,
    MatchReportSerializer,
    ProfileSerializer,
)

logger = logging.getLogger(__name__)

SERIALIZERS = {
    Profile: ProfileSerializer,
    CallGraph: CallGraphSerializer,
    AbstractGraph: AbstractGraphSerializer,
    ComparisonReport: ComparisonReportSerializer,
    IncludeGraph: IncludeGraphSerializer,
    MatchReport: MatchReportSerializer,
}
KINDS = {serializer.kind: serializer for serializer in SERIALIZERS.values()}


class DocumentRenderer(JSONRenderer):
    # Lone surrogates from undecodable profile bytes must survive encoding.
    ensure_ascii = True


def serializer_for(value):
    for model, serializer in SERIALIZERS.items():
        if isinstance(value, model):
            return serializer
    raise TypeError(f"No JSON document for {type(value).__name__}")


def to_document(value):
    """The document of ``value`` as plain Python data."""
    return serializer_for(value)(value).data


def emit_json(value):
    """
    Serialize a model to its JSON document.

    Returns
        str: indented JSON.
    """
    rendered = DocumentRenderer().render(to_document(value), renderer_context={"indent": 2})
    return rendered.decode("ascii")


def from_document(data):
    """
    Build the model a parsed document describes.

    Raises
        DocumentError: unknown kind or schema violation.
    """
    if not isinstance(data, dict):
        raise DocumentError("A JSON document must be an object.")
    serializer_class = KINDS.get(data.get("kind"))
    if serializer_class is None:
        raise DocumentError(f"Unknown document kind: {data.get('kind')!r}")
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise DocumentError(f"Invalid {serializer_class.kind} document: {json.dumps(serializer.errors)}")
    return serializer.save()


def load_json(text):
    """Parse a JSON document back into its model."""
    try:
        data = json.loads(text)
    except ValueError as e:
        raise DocumentError(f"Not valid JSON: {e}") from e
    value = from_document(data)
    logger.debug(f"Loaded {data['kind']} document")
    return value
