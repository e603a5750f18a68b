from rest_framework import serializers

from .analysis import COMPARE_LEVELS
from .config import GRAPH_LEVELS


class ProfileUploadSerializer(serializers.Serializer):
    profile = serializers.FileField(help_text="Callgrind output file (callgrind.out.<pid>).")


class GraphRequestSerializer(ProfileUploadSerializer):
    level = serializers.ChoiceField(
        choices=GRAPH_LEVELS,
        default="class",
        help_text="Granularity: the call graph itself, or a function, class, file or category view.",
    )
    output = serializers.ChoiceField(
        choices=["json", "dot"],
        default="json",
        help_text="A JSON document, or DOT text for graph renderers.",
    )
    threshold = serializers.CharField(
        required=False,
        help_text='Minimum inclusive share of a DOT node, e.g. "0.01" or "1/100".',
    )
    max_depth = serializers.IntegerField(
        required=False,
        min_value=0,
        help_text="Maximum distance of a DOT node from the entry point.",
    )
    event = serializers.CharField(required=False, help_text="Event the DOT shares are computed on.")


class CompareRequestSerializer(serializers.Serializer):
    left = serializers.FileField(help_text="Callgrind output file of the first program.")
    right = serializers.FileField(help_text="Callgrind output file of the second program.")
    left_name = serializers.CharField(required=False, help_text="Name of the first program (default: its file name).")
    right_name = serializers.CharField(required=False, help_text="Name of the second program (default: its file name).")
    level = serializers.ChoiceField(choices=COMPARE_LEVELS, default="class")
    fuzzy_threshold = serializers.CharField(required=False, help_text='Minimum token overlap, e.g. "0.5".')
    idle_threshold = serializers.CharField(required=False, help_text='Idle share, e.g. "0.01".')
    repeat_threshold = serializers.IntegerField(required=False, min_value=1)
