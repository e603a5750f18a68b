"""
Canonical Callgrind writer: absolute positions, functions in
first_record_index order, and every non-empty name written as a compressed
``(id) name`` definition on first use and as ``(id)`` afterwards, so a name
that itself looks like ``(12) x`` survives. Everything it emits re-parses into
an equal Profile.
"""

import logging

from .exceptions import UnwritableNameError

logger = logging.getLogger(__name__)


def _format_costs(positions, costs):
    return " ".join(["0"] * positions + [str(value) for value in costs])


def _event_line(definition):
    line = f"event: {definition.name}"
    if definition.formula:
        line += f" = {definition.formula}"
    if definition.long_name:
        line += f" : {definition.long_name}"
    return line


class _NameTable:
    """Compression ids of one namespace (objects, files or functions)."""

    def __init__(self, kind):
        self.kind = kind
        self.ids = {}

    def ref(self, name):
        if not name:
            if self.kind == "function":
                raise UnwritableNameError("Cannot write a function with an empty name.")
            return ""
        if name != name.strip() or len(name.splitlines()) > 1:
            raise UnwritableNameError(f"Cannot write {self.kind} name {name!r}: surrounding whitespace or a line break.")
        if name in self.ids:
            return f"({self.ids[name]})"
        self.ids[name] = len(self.ids) + 1
        return f"({self.ids[name]}) {name}"


def write_canonical(profile):
    """
    Serialize ``profile`` to Callgrind bytes.

    Parameters
        profile (Profile): the model to write.
    Returns
        bytes: UTF-8 text; undecodable bytes kept from the input are restored.
    Raises
        UnwritableNameError: a name has leading or trailing whitespace or a
            line break, or a function name is empty.
    """
    lines = []
    for key, value in profile.header.items():
        if key == "positions":
            continue
        if key == "desc":
            lines.extend(f"desc: {part}" for part in value.split("\n"))
        else:
            lines.append(f"{key}: {value}")

    positions = 1
    if "positions" in profile.header:
        lines.append(f"positions: {profile.header['positions']}")
        positions = len(profile.header["positions"].split())

    lines.append(f"events: {' '.join(profile.events.names)}")
    lines.extend(_event_line(definition) for definition in profile.events.definitions)
    if profile.summary is not None:
        lines.append(f"summary: {' '.join(str(value) for value in profile.summary)}")

    objects, files, names = _NameTable("object"), _NameTable("file"), _NameTable("function")
    for key, record in profile.ordered_functions():
        lines.append("")
        lines.append(f"ob={objects.ref(key.obj)}")
        lines.append(f"fl={files.ref(key.file)}")
        lines.append(f"fn={names.ref(key.name)}")
        lines.append(_format_costs(positions, record.self_cost))
        for call in record.calls:
            lines.append(f"cob={objects.ref(call.callee.obj)}")
            lines.append(f"cfl={files.ref(call.callee.file)}")
            lines.append(f"cfn={names.ref(call.callee.name)}")
            lines.append(f"calls={call.count} {' '.join(['0'] * positions)}")
            lines.append(_format_costs(positions, call.inclusive_cost))

    logger.debug(f"Wrote {len(profile.functions)} functions in canonical form")
    return ("\n".join(lines) + "\n").encode("utf-8", errors="surrogateescape")
