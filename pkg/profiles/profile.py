from dataclasses import dataclass, field
from typing import Mapping, Optional

from .costs import CostVector, sum_costs


@dataclass(frozen=True)
class EventDefinition:
    """One ``event:`` header line: ``event: name [= formula] [: long name]``."""

    name: str
    formula: str = ""
    long_name: str = ""


@dataclass(frozen=True)
class EventSpec:
    """
    The cost-vector layout declared by ``events:``.

    ``definitions`` keeps every ``event:`` line verbatim so that derived-event
    formulas survive a round-trip; they are never evaluated.
    """

    names: tuple = ()
    definitions: tuple = ()

    def __len__(self):
        return len(self.names)

    @property
    def derived(self):
        return tuple(
            (definition.name, definition.formula)
            for definition in self.definitions
            if definition.formula
        )

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True, order=True)
class FunctionKey:
    """
    Identity of a function: binary object, source file and symbol.

    Two functions with the same symbol in different files are distinct.
    """

    obj: str
    file: str
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class CallRecord:
    callee: FunctionKey
    count: int
    inclusive_cost: CostVector


@dataclass(frozen=True)
class FunctionRecord:
    self_cost: CostVector
    calls: tuple = ()
    first_record_index: int = 0


@dataclass(frozen=True)
class Profile:
    """
    In-memory model of one parsed Callgrind file (or merged set of parts).

    ``functions`` only holds functions that have their own ``fn=`` block;
    callees seen exclusively in call records live in the call records.
    """

    header: Mapping[str, str] = field(default_factory=dict)
    events: EventSpec = field(default_factory=EventSpec)
    functions: Mapping[FunctionKey, FunctionRecord] = field(default_factory=dict)
    summary: Optional[CostVector] = None

    def ordered_functions(self):
        """Return ``(key, record)`` pairs in order of first appearance."""
        return sorted(self.functions.items(), key=lambda item: item[1].first_record_index)

    @property
    def function_entries(self):
        return [
            {
                "key": key,
                "self_cost": record.self_cost,
                "calls": record.calls,
                "first_record_index": record.first_record_index,
            }
            for key, record in self.ordered_functions()
        ]

    def self_total(self) -> CostVector:
        return sum_costs(
            (record.self_cost for record in self.functions.values()), len(self.events)
        )

    def call_count(self) -> int:
        return sum(len(record.calls) for record in self.functions.values())

    def is_conserved(self) -> bool:
        """True when there is no summary or the self costs add up to it exactly."""
        return self.summary is None or self.self_total() == tuple(self.summary)
