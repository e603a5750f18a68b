"""
Callgrind profile reader.

Accepted grammar (one directive per line):

    header      key: value        version, creator, pid, cmd, part, thread,
                                  desc, positions, events, event, summary, totals
    context     ob= fl= fi= fe= fn=            current object / file / function
    callee      cob= cfl= cfi= cfn=            target of the next calls= line
    call        calls=<count> <target position>
                <position> <inclusive costs>   exactly one cost line follows
    cost        <position> <v1> <v2> ...       position: n, 0xN, +d, -d or *
    jumps       jump= jcnd= jfi= jfn=          read and dropped; jfi=/jfn= still
                                               define compression ids
    skipped     # comments, blank lines

Context directives take ``(id) name`` (define), ``(id)`` (reference) or a bare
name. Objects, files and functions are three separate id namespaces.

A ``pid:``, ``cmd:``, ``thread:`` or ``part:`` line after a part body starts the
next part. The new part keeps the file-level header keys and the event and
position declarations; ``desc:``, ``part:`` and ``thread:`` start afresh.
"""

import logging
import re
from pathlib import Path

from anatomy.exceptions import InputError

from .costs import add_costs, pad_costs, zero_costs
from .exceptions import CallgrindSyntaxError, EmptyProfileError, EventMismatchError
from .profile import CallRecord, EventDefinition, EventSpec, FunctionKey, FunctionRecord, Profile

logger = logging.getLogger(__name__)

HEADER_KEYS = ("version", "creator", "pid", "cmd", "part", "thread", "desc", "positions")
# Header keys that open the next part when they follow a part body.
PART_KEYS = ("pid", "cmd", "part", "thread")
# Header keys a new part inherits from the previous one.
FILE_KEYS = ("version", "creator", "pid", "cmd", "positions")
POSITION_KINDS = ("line", "instr")

# Directive -> compression namespace.
NAMESPACES = {
    "ob": "ob", "cob": "ob",
    "fl": "fl", "fi": "fl", "fe": "fl", "cfl": "fl", "cfi": "fl", "cfe": "fl", "jfi": "fl",
    "fn": "fn", "cfn": "fn", "jfn": "fn",
}

_CONTEXT_RE = re.compile(r"^(?P<directive>c?(?:ob|fl|fi|fe|fn)|jf[in])=(?P<value>.*)$")
_NAME_RE = re.compile(r"^\s*(?:\((?P<id>\d+)\))?\s*(?P<name>.*?)\s*$")
_HEADER_RE = re.compile(r"^(?P<key>[a-z]+):\s*(?P<value>.*?)\s*$")
_ASSIGNMENT_RE = re.compile(r"^(?P<key>[A-Za-z_]+)=")
_POSITION_RE = re.compile(r"^(?:[+-]?(?:0x[0-9a-fA-F]+|\d+)|\*)$")
_COST_RE = re.compile(r"^\d+$")
_COST_LINE_START = "0123456789+-*"


class _FunctionState:
    __slots__ = ("self_cost", "calls", "first_record_index")

    def __init__(self, width, first_record_index):
        self.self_cost = zero_costs(width)
        self.calls = []
        self.first_record_index = first_record_index


class CallgrindParser:
    """
    Line-oriented reader turning a Callgrind file into one Profile per part.

    Parameters
        stream: a binary (or text) stream positioned at the start of the file.
    """

    def __init__(self, stream):
        self.stream = stream
        self._tables = {"ob": {}, "fl": {}, "fn": {}}
        self._parts = []
        self._saw_events = False
        self._header = {}
        self._events = EventSpec()
        self._positions = ["line"]
        self._reset_part()

    def parse(self):
        """
        Parse the whole stream.

        Returns
            list[Profile]: one profile per ``part:`` section, in file order.
        Raises
            CallgrindSyntaxError: on the first line outside the grammar.
            EmptyProfileError: if no ``events:`` line was found.
        """
        data = self.stream.read()
        text = data if isinstance(data, str) else data.decode("utf-8", errors="surrogateescape")

        line_number = 0
        for line_number, line in enumerate(text.splitlines(), start=1):
            self._parse_line(line_number, line.strip())

        if self._pending_call is not None:
            callee, _, call_line = self._pending_call
            raise CallgrindSyntaxError(call_line, f"calls= to {callee.name}", "calls= line without a cost line")
        if not self._saw_events:
            raise EmptyProfileError()

        self._finish_part()
        logger.debug(f"Parsed {line_number} lines into {len(self._parts)} part(s)")
        return self._parts

    # -- state -------------------------------------------------------------

    def _reset_part(self):
        self._functions = {}
        self._summary = None
        self._body_started = False
        self._last_positions = [0] * len(self._positions)
        self._ob = ""
        self._fl = ""
        self._fn = None
        self._pending_call = None
        self._reset_callee()

    def _reset_callee(self):
        self._cob = None
        self._cfl = None
        self._cfn = None

    def _finish_part(self):
        width = len(self._events)
        functions = {
            key: FunctionRecord(
                self_cost=pad_costs(state.self_cost, width),
                calls=tuple(state.calls),
                first_record_index=state.first_record_index,
            )
            for key, state in self._functions.items()
        }
        profile = Profile(
            header=dict(self._header),
            events=self._events,
            functions=functions,
            summary=self._summary,
        )
        if not profile.is_conserved():
            logger.warning(
                f"Self costs {profile.self_total()} do not add up to the summary {profile.summary}"
            )
        self._parts.append(profile)

    # -- dispatch ----------------------------------------------------------

    def _parse_line(self, line_number, line):
        if not line or line.startswith("#"):
            return

        if self._pending_call is not None:
            self._parse_call_cost(line_number, line)
            return

        context = _CONTEXT_RE.match(line)
        if context:
            self._parse_context(line_number, context.group("directive"), context.group("value"))
        elif line.startswith("calls="):
            self._parse_calls(line_number, line)
        elif line.startswith(("jump=", "jcnd=")):
            self._body_started = True
        elif line[0] in _COST_LINE_START:
            self._parse_self_cost(line_number, line)
        else:
            header = _HEADER_RE.match(line)
            if header:
                self._parse_header(line_number, header.group("key"), header.group("value"))
                return
            assignment = _ASSIGNMENT_RE.match(line)
            token = assignment.group("key") + "=" if assignment else line.split()[0]
            raise CallgrindSyntaxError(line_number, token, "unknown directive")

    # -- header ------------------------------------------------------------

    def _parse_header(self, line_number, key, value):
        if key in PART_KEYS and self._body_started:
            self._finish_part()
            self._header = {k: v for k, v in self._header.items() if k in FILE_KEYS}
            self._reset_part()

        if key in ("summary", "totals"):
            self._summary = self._parse_costs(line_number, value.split())
        elif key == "events":
            self._parse_events(line_number, value)
        elif key == "event":
            self._parse_event_definition(line_number, value)
        elif key == "positions":
            self._parse_positions(line_number, value)
        elif key == "desc" and "desc" in self._header:
            self._header["desc"] = f"{self._header['desc']}\n{value}"
        elif key in HEADER_KEYS:
            self._header[key] = value
        else:
            raise CallgrindSyntaxError(line_number, f"{key}:", "unknown header key")

    def _parse_events(self, line_number, value):
        if self._body_started:
            raise CallgrindSyntaxError(line_number, "events:", "events: after the profile body started")
        names = tuple(value.split())
        if not names:
            raise CallgrindSyntaxError(line_number, "events:", "no event names")
        if len(set(names)) != len(names):
            raise CallgrindSyntaxError(line_number, value, "duplicate event names")
        self._events = EventSpec(names=names, definitions=self._events.definitions)
        self._saw_events = True

    def _parse_event_definition(self, line_number, value):
        head, _, long_name = value.partition(":")
        name, _, formula = head.partition("=")
        if not name.strip():
            raise CallgrindSyntaxError(line_number, value, "event: without a name")
        definition = EventDefinition(name.strip(), formula.strip(), long_name.strip())
        self._events = EventSpec(
            names=self._events.names,
            definitions=self._events.definitions + (definition,),
        )

    def _parse_positions(self, line_number, value):
        if self._body_started:
            raise CallgrindSyntaxError(line_number, "positions:", "positions: after the profile body started")
        kinds = value.split()
        for kind in kinds:
            if kind not in POSITION_KINDS:
                raise CallgrindSyntaxError(line_number, kind, "unknown position kind")
        if not kinds:
            raise CallgrindSyntaxError(line_number, "positions:", "no position kinds")
        self._positions = kinds
        self._last_positions = [0] * len(kinds)
        self._header["positions"] = value

    # -- body --------------------------------------------------------------

    def _resolve(self, line_number, directive, value):
        match = _NAME_RE.match(value)
        ident, name = match.group("id"), match.group("name")
        if ident is None:
            return name
        table = self._tables[NAMESPACES[directive]]
        if name:
            table[ident] = name
            return name
        if ident not in table:
            raise CallgrindSyntaxError(line_number, f"{directive}=({ident})", "reference to undefined compression id")
        return table[ident]

    def _parse_context(self, line_number, directive, value):
        self._body_started = True
        name = self._resolve(line_number, directive, value)

        if directive == "ob":
            self._ob = name
        elif directive == "fl":
            self._fl = name
        elif directive == "fn":
            if not name:
                raise CallgrindSyntaxError(line_number, f"fn={value}", "function name is empty")
            self._fn = FunctionKey(self._ob, self._fl, name)
            if self._fn not in self._functions:
                self._functions[self._fn] = _FunctionState(len(self._events), len(self._functions))
        elif directive == "cob":
            self._cob = name
        elif directive in ("cfl", "cfi", "cfe"):
            self._cfl = name
        elif directive == "cfn":
            if not name:
                raise CallgrindSyntaxError(line_number, f"cfn={value}", "function name is empty")
            self._cfn = name
        # fi= / fe= only switch the inlined source file; costs stay with fn=.
        # jfi= / jfn= name a jump target; only their compression ids are kept.

    def _parse_calls(self, line_number, line):
        self._body_started = True
        tokens = line[len("calls="):].split()
        if not tokens or not _COST_RE.match(tokens[0]):
            raise CallgrindSyntaxError(line_number, line, "calls= needs a numeric call count")
        count = int(tokens[0])
        if count < 1:
            raise CallgrindSyntaxError(line_number, tokens[0], "call count must be positive")
        for token in tokens[1:]:
            if not _POSITION_RE.match(token):
                raise CallgrindSyntaxError(line_number, token, "invalid target position")
        if self._fn is None:
            raise CallgrindSyntaxError(line_number, "calls=", "calls= before any fn= directive")
        if self._cfn is None:
            raise CallgrindSyntaxError(line_number, "calls=", "calls= without a preceding cfn=")

        callee = FunctionKey(
            self._ob if self._cob is None else self._cob,
            self._fl if self._cfl is None else self._cfl,
            self._cfn,
        )
        self._pending_call = (callee, count, line_number)

    def _parse_call_cost(self, line_number, line):
        if line[0] not in _COST_LINE_START:
            raise CallgrindSyntaxError(line_number, line.split()[0], "expected the cost line of the preceding calls=")
        callee, count, _ = self._pending_call
        costs = self._parse_cost_line(line_number, line)
        self._functions[self._fn].calls.append(CallRecord(callee=callee, count=count, inclusive_cost=costs))
        self._pending_call = None
        self._reset_callee()

    def _parse_self_cost(self, line_number, line):
        self._body_started = True
        if self._fn is None:
            raise CallgrindSyntaxError(line_number, line.split()[0], "cost line before any fn= directive")
        costs = self._parse_cost_line(line_number, line)
        state = self._functions[self._fn]
        state.self_cost = add_costs(pad_costs(state.self_cost, len(costs)), costs)

    def _parse_cost_line(self, line_number, line):
        tokens = line.split()
        width = len(self._positions)
        if len(tokens) < width:
            raise CallgrindSyntaxError(line_number, line, "cost line is missing its position")
        for index, token in enumerate(tokens[:width]):
            self._last_positions[index] = self._decode_position(line_number, index, token)
        return self._parse_costs(line_number, tokens[width:])

    def _decode_position(self, line_number, index, token):
        if not _POSITION_RE.match(token):
            raise CallgrindSyntaxError(line_number, token, "invalid position")
        if token == "*":
            return self._last_positions[index]
        if token[0] in "+-":
            return self._last_positions[index] + _to_int(token)
        return _to_int(token)

    def _parse_costs(self, line_number, tokens):
        if not self._saw_events:
            raise CallgrindSyntaxError(line_number, " ".join(tokens) or "<empty>", "costs before the events: line")
        for token in tokens:
            if not _COST_RE.match(token):
                raise CallgrindSyntaxError(line_number, token, "non-numeric cost")
        if len(tokens) > len(self._events):
            raise CallgrindSyntaxError(
                line_number, tokens[len(self._events)], f"more cost values than the {len(self._events)} declared events"
            )
        return pad_costs([int(token) for token in tokens], len(self._events))


def _to_int(token):
    sign = -1 if token.startswith("-") else 1
    digits = token.lstrip("+-")
    value = int(digits, 16) if digits.lower().startswith("0x") else int(digits)
    return sign * value


def parse_parts(stream):
    """Parse a Callgrind stream into its parts (usually exactly one)."""
    return CallgrindParser(stream).parse()


def parse_profile(stream):
    """
    Parse a Callgrind stream into a single Profile.

    Multi-part files are merged with ``merge_parts``.
    """
    return merge_parts(parse_parts(stream))


def load_profile(path):
    """
    Open and parse the profile at ``path``.

    Raises
        InputError: if the file does not exist or cannot be read.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Profile not found: {path}")
    try:
        with path.open("rb") as stream:
            profile = parse_profile(stream)
    except OSError as e:
        raise InputError(f"Cannot read profile {path}: {e}") from e
    logger.info(f"Loaded {path}: {len(profile.functions)} functions, {profile.call_count()} call records")
    return profile


def merge_parts(parts):
    """
    Merge profile parts into one profile.

    Self costs, call counts and per-call costs of identical functions are
    summed; call records are grouped per callee in order of first appearance.
    Functions are numbered by (part, record order), so the earliest part keeps
    its indices. A single part is returned unchanged.

    Raises
        EventMismatchError: if the parts declare different events.
    """
    parts = list(parts)
    if not parts:
        raise EmptyProfileError("No profile parts to merge.")
    if len(parts) == 1:
        return parts[0]

    events = parts[0].events
    for index, part in enumerate(parts[1:], start=2):
        if part.events.names != events.names:
            raise EventMismatchError(
                f"Part {index} declares events {list(part.events.names)}, expected {list(events.names)}"
            )

    width = len(events)
    merged = {}
    for part in parts:
        for key, record in part.ordered_functions():
            entry = merged.get(key)
            if entry is None:
                entry = merged[key] = {
                    "self_cost": zero_costs(width),
                    "calls": {},
                    "first_record_index": len(merged),
                }
            entry["self_cost"] = add_costs(entry["self_cost"], record.self_cost)
            for call in record.calls:
                count, cost = entry["calls"].get(call.callee, (0, zero_costs(width)))
                entry["calls"][call.callee] = (count + call.count, add_costs(cost, call.inclusive_cost))

    functions = {
        key: FunctionRecord(
            self_cost=entry["self_cost"],
            calls=tuple(
                CallRecord(callee=callee, count=count, inclusive_cost=cost)
                for callee, (count, cost) in entry["calls"].items()
            ),
            first_record_index=entry["first_record_index"],
        )
        for key, entry in merged.items()
    }

    summary = None
    if any(part.summary is not None for part in parts):
        summary = zero_costs(width)
        for part in parts:
            summary = add_costs(summary, part.summary if part.summary is not None else part.self_total())

    header = {key: value for key, value in parts[0].header.items() if key != "part"}
    logger.info(f"Merged {len(parts)} parts into {len(functions)} functions")
    return Profile(header=header, events=events, functions=functions, summary=summary)
