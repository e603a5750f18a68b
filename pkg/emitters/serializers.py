from fractions import Fraction

from rest_framework import serializers

from callgraph.graph import CallEdge, CallGraph, FunctionNode
from comparison.matching import MatchReport, MatchResult, NodePair
from comparison.report import ComparisonReport
from comparison.sequences import InitSequence, InitStep
from includes.scanner import IncludeEdge, IncludeGraph, ScanIssue
from profiles.profile import CallRecord, EventDefinition, EventSpec, FunctionKey, FunctionRecord, Profile
from symbols.aggregation import AbstractEdge, AbstractGraph, AbstractNode

SCHEMA_VERSION = "1"


class TextField(serializers.Field):
    """
    A string kept verbatim.

    Symbol names may carry undecodable profile bytes as lone surrogates, which
    ``CharField`` rejects; nothing is trimmed either.
    """

    default_error_messages = {
        "invalid": "A string is required.",
        "blank": "This field may not be blank.",
    }

    def __init__(self, allow_blank=False, **kwargs):
        self.allow_blank = allow_blank
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        if not isinstance(data, str):
            self.fail("invalid")
        if not data and not self.allow_blank:
            self.fail("blank")
        return data

    def to_representation(self, value):
        return value


class FractionField(serializers.Field):
    """Exact rational written as a string: "1", "2/3"."""

    default_error_messages = {"invalid": 'A fraction such as "2/3" is required.'}

    def to_internal_value(self, data):
        try:
            return Fraction(str(data))
        except (ValueError, ZeroDivisionError):
            self.fail("invalid")

    def to_representation(self, value):
        return str(value)


def cost_field(**kwargs):
    return serializers.ListField(child=serializers.IntegerField(min_value=0), **kwargs)


def _key(data):
    return FunctionKey(data["obj"], data["file"], data["name"])


def _events(data):
    return EventSpec(
        names=tuple(data["names"]),
        definitions=tuple(EventDefinition(**definition) for definition in data.get("definitions", ())),
    )


class DocumentSerializer(serializers.Serializer):
    """Base of every top-level document: a schema version and a kind."""

    kind = None

    schema_version = serializers.ChoiceField(choices=[SCHEMA_VERSION], write_only=True)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        return {"schema_version": SCHEMA_VERSION, "kind": self.kind, **data}

    def to_internal_value(self, data):
        if isinstance(data, dict) and data.get("kind") != self.kind:
            raise serializers.ValidationError({"kind": [f"Expected {self.kind!r}."]})
        return super().to_internal_value(data)


class FunctionKeySerializer(serializers.Serializer):
    obj = TextField(allow_blank=True)
    file = TextField(allow_blank=True)
    name = TextField()


class EventDefinitionSerializer(serializers.Serializer):
    name = TextField()
    formula = TextField(allow_blank=True, required=False, default="")
    long_name = TextField(allow_blank=True, required=False, default="")


class CallRecordSerializer(serializers.Serializer):
    callee = FunctionKeySerializer()
    count = serializers.IntegerField(min_value=1)
    inclusive_cost = cost_field()


class FunctionEntrySerializer(serializers.Serializer):
    key = FunctionKeySerializer()
    self_cost = cost_field()
    first_record_index = serializers.IntegerField(min_value=0)
    calls = CallRecordSerializer(many=True)


class ProfileSerializer(DocumentSerializer):
    kind = "profile"

    header = serializers.DictField(child=TextField(allow_blank=True))
    events = serializers.ListField(child=TextField(), source="events.names")
    event_definitions = EventDefinitionSerializer(many=True, source="events.definitions")
    summary = cost_field(allow_null=True)
    functions = FunctionEntrySerializer(many=True, source="function_entries")

    def create(self, validated_data):
        functions = {
            _key(entry["key"]): FunctionRecord(
                self_cost=tuple(entry["self_cost"]),
                calls=tuple(
                    CallRecord(_key(call["callee"]), call["count"], tuple(call["inclusive_cost"]))
                    for call in entry["calls"]
                ),
                first_record_index=entry["first_record_index"],
            )
            for entry in validated_data["function_entries"]
        }
        summary = validated_data["summary"]
        return Profile(
            header=dict(validated_data["header"]),
            events=_events(validated_data["events"]),
            functions=functions,
            summary=None if summary is None else tuple(summary),
        )


class FunctionNodeSerializer(serializers.Serializer):
    key = FunctionKeySerializer()
    self_cost = cost_field()
    inclusive_cost = cost_field()
    first_record_index = serializers.IntegerField(min_value=0)
    scc_id = serializers.IntegerField(min_value=0)
    cyclic = serializers.BooleanField()


class CallEdgeSerializer(serializers.Serializer):
    caller = FunctionKeySerializer()
    callee = FunctionKeySerializer()
    count = serializers.IntegerField(min_value=1)
    cost = cost_field()


class CallGraphSerializer(DocumentSerializer):
    kind = "callgraph"

    events = serializers.ListField(child=TextField(), source="events.names")
    event_definitions = EventDefinitionSerializer(many=True, source="events.definitions")
    total = cost_field()
    nodes = FunctionNodeSerializer(many=True, source="ordered_nodes")
    edges = CallEdgeSerializer(many=True)

    def create(self, validated_data):
        nodes = {}
        for node in validated_data["ordered_nodes"]:
            key = _key(node["key"])
            nodes[key] = FunctionNode(
                key=key,
                self_cost=tuple(node["self_cost"]),
                inclusive_cost=tuple(node["inclusive_cost"]),
                first_record_index=node["first_record_index"],
                scc_id=node["scc_id"],
                cyclic=node["cyclic"],
            )
        edges = tuple(
            CallEdge(_key(edge["caller"]), _key(edge["callee"]), edge["count"], tuple(edge["cost"]))
            for edge in validated_data["edges"]
        )
        return CallGraph(
            events=_events(validated_data["events"]),
            nodes=nodes,
            edges=edges,
            total=tuple(validated_data["total"]),
        )


class AbstractNodeSerializer(serializers.Serializer):
    label = TextField()
    category = TextField(allow_null=True)
    members = FunctionKeySerializer(many=True)
    self_cost = cost_field()
    inclusive_cost = cost_field()
    first_record_index = serializers.IntegerField(min_value=0)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        data["members"] = sorted(data["members"], key=lambda member: (member["obj"], member["file"], member["name"]))
        return data


class AbstractEdgeSerializer(serializers.Serializer):
    source = TextField()
    target = TextField()
    count = serializers.IntegerField(min_value=1)
    cost = cost_field()


class AbstractGraphSerializer(DocumentSerializer):
    kind = "abstractgraph"

    level = TextField()
    events = serializers.ListField(child=TextField(), source="events.names")
    event_definitions = EventDefinitionSerializer(many=True, source="events.definitions")
    total = cost_field()
    nodes = AbstractNodeSerializer(many=True)
    edges = AbstractEdgeSerializer(many=True)

    def validate(self, attrs):
        labels = [node["label"] for node in attrs["nodes"]]
        if len(set(labels)) != len(labels):
            raise serializers.ValidationError({"nodes": ["Node labels must be unique."]})
        known = set(labels)
        for edge in attrs["edges"]:
            if edge["source"] not in known or edge["target"] not in known:
                raise serializers.ValidationError({"edges": ["Edges must join known nodes."]})
        return attrs

    def create(self, validated_data):
        nodes = tuple(
            AbstractNode(
                label=node["label"],
                members=frozenset(_key(member) for member in node["members"]),
                self_cost=tuple(node["self_cost"]),
                inclusive_cost=tuple(node["inclusive_cost"]),
                first_record_index=node["first_record_index"],
                category=node["category"],
            )
            for node in validated_data["nodes"]
        )
        edges = tuple(
            AbstractEdge(edge["source"], edge["target"], edge["count"], tuple(edge["cost"]))
            for edge in validated_data["edges"]
        )
        return AbstractGraph(
            level=validated_data["level"],
            events=_events(validated_data["events"]),
            nodes=nodes,
            edges=edges,
            total=tuple(validated_data["total"]),
        )


class NodePairSerializer(serializers.Serializer):
    left = TextField()
    right = TextField()
    tier = TextField()
    score = FractionField()
    evidence = serializers.ListField(child=TextField())


class InitStepSerializer(serializers.Serializer):
    label = TextField()
    category = TextField()
    first_record_index = serializers.IntegerField(min_value=0)
    position = serializers.IntegerField(min_value=0)


class ComparisonReportSerializer(DocumentSerializer):
    kind = "comparison"

    left = TextField()
    right = TextField()
    common = NodePairSerializer(many=True)
    only_left = serializers.ListField(child=TextField())
    only_right = serializers.ListField(child=TextField())
    common_categories = serializers.ListField(child=TextField())
    only_left_categories = serializers.ListField(child=TextField())
    only_right_categories = serializers.ListField(child=TextField())
    left_sequence = InitStepSerializer(many=True, source="left_sequence.steps")
    right_sequence = InitStepSerializer(many=True, source="right_sequence.steps")
    order_inversions = serializers.ListField(
        child=serializers.ListField(child=TextField(), min_length=2, max_length=2)
    )
    notes = serializers.ListField(child=TextField())

    def create(self, validated_data):
        def sequence(name):
            return InitSequence(tuple(InitStep(**step) for step in validated_data[name]["steps"]))

        return ComparisonReport(
            left=validated_data["left"],
            right=validated_data["right"],
            common=tuple(
                NodePair(pair["left"], pair["right"], pair["tier"], pair["score"], tuple(pair["evidence"]))
                for pair in validated_data["common"]
            ),
            only_left=tuple(validated_data["only_left"]),
            only_right=tuple(validated_data["only_right"]),
            common_categories=tuple(validated_data["common_categories"]),
            only_left_categories=tuple(validated_data["only_left_categories"]),
            only_right_categories=tuple(validated_data["only_right_categories"]),
            left_sequence=sequence("left_sequence"),
            right_sequence=sequence("right_sequence"),
            order_inversions=tuple(tuple(pair) for pair in validated_data["order_inversions"]),
            notes=tuple(validated_data["notes"]),
        )


class IncludeEdgeSerializer(serializers.Serializer):
    includer = TextField()
    name = TextField()
    kind = serializers.ChoiceField(choices=["quoted", "angled"])
    resolved = TextField(allow_null=True)
    line = serializers.IntegerField(min_value=0)


class ScanIssueSerializer(serializers.Serializer):
    path = TextField()
    message = TextField(allow_blank=True)


class IncludeGraphSerializer(DocumentSerializer):
    kind = "includegraph"

    scan_root = TextField()
    nodes = serializers.ListField(child=TextField())
    edges = IncludeEdgeSerializer(many=True)
    frontier = serializers.ListField(child=TextField(), read_only=True)
    issues = ScanIssueSerializer(many=True)

    def create(self, validated_data):
        return IncludeGraph(
            scan_root=validated_data["scan_root"],
            nodes=tuple(validated_data["nodes"]),
            edges=tuple(IncludeEdge(**edge) for edge in validated_data["edges"]),
            issues=tuple(ScanIssue(**issue) for issue in validated_data["issues"]),
        )


class MatchResultSerializer(serializers.Serializer):
    component = TextField()
    matched_label = TextField(allow_null=True)
    tier = TextField()
    evidence = serializers.ListField(child=TextField())
    score = FractionField()


class MatchReportSerializer(DocumentSerializer):
    kind = "matches"

    reference = TextField()
    results = MatchResultSerializer(many=True)
    unmatched = serializers.ListField(child=TextField(), read_only=True)

    def create(self, validated_data):
        return MatchReport(
            reference=validated_data["reference"],
            results=tuple(
                MatchResult(
                    component=result["component"],
                    matched_label=result["matched_label"],
                    tier=result["tier"],
                    evidence=tuple(result["evidence"]),
                    score=result["score"],
                )
                for result in validated_data["results"]
            ),
        )
