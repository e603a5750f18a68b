import logging
from pathlib import Path

from django.http import HttpResponse
from drf_yasg import openapi
from drf_yasg.utils import swagger_auto_schema
from rest_framework import status
from rest_framework.parsers import FormParser, MultiPartParser
from rest_framework.response import Response
from rest_framework.views import APIView

from anatomy.exceptions import AnatomyError
from emitters.documents import DocumentRenderer, to_document
from emitters.dot import emit_dot
from profiles.parser import parse_profile

from .analysis import compare_profiles, event_index, graph_view, load_both, ruleset_for
from .config import CALL_LEVEL, CliConfig
from .serializers import CompareRequestSerializer, GraphRequestSerializer, ProfileUploadSerializer

logger = logging.getLogger(__name__)

ERROR_RESPONSE = openapi.Response(
    "Bad Request",
    openapi.Schema(
        type=openapi.TYPE_OBJECT,
        properties={
            "error": openapi.Schema(type=openapi.TYPE_STRING, example="Line 12: expected a cost line, got 'calls='"),
            "exit_code": openapi.Schema(type=openapi.TYPE_INTEGER, example=2),
        },
    ),
)
DOCUMENT_RESPONSE = openapi.Schema(
    type=openapi.TYPE_OBJECT,
    properties={
        "schema_version": openapi.Schema(type=openapi.TYPE_STRING, example="1"),
        "kind": openapi.Schema(type=openapi.TYPE_STRING, example="callgraph"),
    },
)


def error_response(error):
    return Response({"error": error.detail, "exit_code": error.exit_code}, status=status.HTTP_400_BAD_REQUEST)


def read_upload(upload):
    profile = parse_profile(upload)
    logger.info(f"Parsed upload {upload.name}: {len(profile.functions)} functions")
    return profile


class AnalysisView(APIView):
    """Base of the upload endpoints: multipart input, JSON documents out."""

    parser_classes = [MultiPartParser, FormParser]
    renderer_classes = [DocumentRenderer]


class ProfileInspectView(AnalysisView):
    """
    Parse an uploaded Callgrind profile.

    **Responses:**
    - `200 OK`: the profile document (`kind: profile`).
    - `400 Bad Request`: the upload is missing or not a Callgrind file.
    """

    @swagger_auto_schema(
        request_body=ProfileUploadSerializer,
        responses={200: openapi.Response("Profile document", DOCUMENT_RESPONSE), 400: ERROR_RESPONSE},
    )
    def post(self, request, *args, **kwargs):
        serializer = ProfileUploadSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        try:
            profile = read_upload(serializer.validated_data["profile"])
        except AnatomyError as e:
            return error_response(e)
        return Response(to_document(profile))


class ProfileGraphView(AnalysisView):
    """
    Build the call graph of an uploaded profile, or an aggregated and
    categorized view of it.

    **Responses:**
    - `200 OK`: a `callgraph` or `abstractgraph` document, or DOT text when
      `output` is `dot`.
    - `400 Bad Request`: unreadable profile or invalid options.
    """

    @swagger_auto_schema(
        request_body=GraphRequestSerializer,
        responses={200: openapi.Response("Graph document", DOCUMENT_RESPONSE), 400: ERROR_RESPONSE},
    )
    def post(self, request, *args, **kwargs):
        serializer = GraphRequestSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        data = serializer.validated_data
        try:
            config = CliConfig.from_options(
                {
                    "level": data["level"],
                    "format": data["output"],
                    "threshold": data.get("threshold"),
                    "max_depth": data.get("max_depth"),
                    "event": data.get("event"),
                }
            )
            ruleset = None if config.level == CALL_LEVEL else ruleset_for(config)
            graph = graph_view(read_upload(data["profile"]), config.level, ruleset)
            event = event_index(graph.events, config.event)
        except AnatomyError as e:
            return error_response(e)
        if config.output_format == "dot":
            return HttpResponse(emit_dot(graph, config.dot_options(event)), content_type="text/vnd.graphviz")
        return Response(to_document(graph))


class ProfileCompareView(AnalysisView):
    """
    Compare two uploaded profiles.

    **Responses:**
    - `200 OK`: the `comparison` document.
    - `400 Bad Request`: either profile is unreadable, or an option is invalid.
    """

    @swagger_auto_schema(
        request_body=CompareRequestSerializer,
        responses={200: openapi.Response("Comparison document", DOCUMENT_RESPONSE), 400: ERROR_RESPONSE},
    )
    def post(self, request, *args, **kwargs):
        serializer = CompareRequestSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        data = serializer.validated_data
        try:
            config = CliConfig.from_options(
                {
                    "level": data["level"],
                    "fuzzy_threshold": data.get("fuzzy_threshold"),
                    "idle_threshold": data.get("idle_threshold"),
                    "repeat_threshold": data.get("repeat_threshold"),
                }
            )
            left, right = load_both(read_upload, data["left"], data["right"], workers=config.workers)
            report = compare_profiles(
                left,
                right,
                config,
                ruleset_for(config),
                left_name=data.get("left_name") or Path(data["left"].name).stem,
                right_name=data.get("right_name") or Path(data["right"].name).stem,
                level=config.level,
            )
        except AnatomyError as e:
            return error_response(e)
        return Response(to_document(report))
