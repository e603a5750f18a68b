"""
Structural reading of demangled C++ symbol names.

Names are split on "::" at bracket depth 0. One trailing parameter list is
treated as the signature and template arguments are dropped from every
segment, so ``std::vector<int>::push_back(int&&)`` reads as scope
``std::vector`` and leaf ``push_back``.
"""

import re
from dataclasses import dataclass

OPENERS = {"<": ">", "(": ")", "[": "]", "{": "}"}
CLOSERS = set(OPENERS.values())

_OPERATOR_RE = re.compile(
    r"operator\b\s*(?:\(\)|\[\]|(?:new|delete)(?:\s*\[\])?|->\*?|[-+*/%^&|~!=<>,]+|[A-Za-z_]\w*(?:\s*[*&]+)?)"
)
_QUALIFIERS_RE = re.compile(r"^(?:\s|&|\bconst\b|\bvolatile\b|\bnoexcept\b|\boverride\b|\bfinal\b)*$")
_WORD_SPLIT_RE = re.compile(r"[^A-Za-z0-9]+")
_TOKEN_RE = re.compile(r"[A-Z]+\d+(?![a-z])|\d+[A-Z]*(?![a-z])|[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


@dataclass(frozen=True)
class SymbolParts:
    raw: str
    scope_path: tuple
    leaf: str
    had_template_args: bool = False
    had_signature: bool = False

    @property
    def scope(self):
        return "::".join(self.scope_path)


def _is_identifier_char(char):
    return char.isalnum() or char == "_"


def _operator_at(text, index):
    if index > 0 and _is_identifier_char(text[index - 1]):
        return None
    return _OPERATOR_RE.match(text, index)


def _close(text, start):
    """Index just past the bracket group opened at ``start``, or None if unbalanced."""
    expected = [OPENERS[text[start]]]
    index = start + 1
    while index < len(text):
        operator = _operator_at(text, index)
        if operator:
            index = operator.end()
            continue
        if text.startswith("->", index):
            index += 2
            continue
        char = text[index]
        if char in OPENERS:
            expected.append(OPENERS[char])
        elif char in CLOSERS:
            if char != expected[-1]:
                return None
            expected.pop()
            if not expected:
                return index + 1
        index += 1
    return None


def _units(text):
    """
    Split ``text`` into depth-0 units: ("op" | "group" | "sep" | "char", start, end).

    Returns None when the brackets do not balance.
    """
    units = []
    index = 0
    while index < len(text):
        operator = _operator_at(text, index)
        if operator:
            units.append(("op", index, operator.end()))
            index = operator.end()
            continue
        char = text[index]
        if char in OPENERS:
            end = _close(text, index)
            if end is None:
                return None
            units.append(("group", index, end))
            index = end
        elif char in CLOSERS:
            return None
        elif text.startswith("::", index):
            units.append(("sep", index, index + 2))
            index += 2
        else:
            units.append(("char", index, index + 1))
            index += 1
    return units


def _opaque(raw, text):
    first_bracket = min((text.index(char) for char in OPENERS.keys() | CLOSERS if char in text), default=len(text))
    segments = [segment for segment in text[:first_bracket].split("::")]
    leaf = segments.pop() + text[first_bracket:]
    return SymbolParts(
        raw=raw,
        scope_path=tuple(segment.strip() for segment in segments if segment.strip()),
        leaf=leaf.strip() or text,
        had_template_args=False,
        had_signature=False,
    )


def _signature_start(text, segment):
    """Position in ``segment`` of the unit opening a trailing signature, or None."""
    for position in range(len(segment) - 1, 0, -1):
        kind, start, end = segment[position]
        if kind == "group" and text[start] == "(":
            tail = text[end:segment[-1][2]]
            if _QUALIFIERS_RE.match(tail):
                return position
            return None
    return None


def _drop_return_type(text, segments):
    """
    Segments left after the last depth-0 space that still has a name after it.

    ``void ClassDB::register_class<Node>()`` keeps ``ClassDB::register_class<Node>``.
    Spaces inside brackets, and spaces after an operator keyword, never split.
    """
    for index in range(len(segments) - 1, -1, -1):
        segment = segments[index]
        for position in range(len(segment) - 1, -1, -1):
            kind, start, end = segment[position]
            if kind != "char" or not text[start].isspace():
                continue
            if any(unit[0] == "op" for unit in segment[:position]):
                continue
            rest = segment[position + 1:]
            if any(not text[s:e].isspace() for _, s, e in rest):
                return [rest] + segments[index + 1:]
    return segments


def parse_symbol(raw):
    """
    Split a demangled symbol into scope path and leaf.

    A return type in front of a signed name is dropped. Unbalanced brackets do
    not raise: everything from the first bracket on is kept as an opaque leaf.
    """
    text = raw.strip()
    if not text:
        raise ValueError("Cannot parse an empty symbol name.")

    units = _units(text)
    if units is None:
        return _opaque(raw, text)

    segments = [[]]
    for unit in units:
        if unit[0] == "sep":
            segments.append([])
        else:
            segments[-1].append(unit)
    segments = [segment for segment in segments if segment] or [[("char", 0, len(text))]]

    had_signature = False
    last = segments[-1]
    position = _signature_start(text, last)
    if position is not None:
        segments[-1] = last[:position]
        had_signature = True
        segments = _drop_return_type(text, segments)

    had_template_args = False
    names = []
    for segment in segments:
        pieces = []
        for kind, start, end in segment:
            if kind == "group" and text[start] == "<":
                had_template_args = True
                continue
            pieces.append(text[start:end])
        names.append("".join(pieces).strip())

    leaf = names.pop()
    if not leaf:
        return _opaque(raw, text)
    return SymbolParts(
        raw=raw,
        scope_path=tuple(names),
        leaf=leaf,
        had_template_args=had_template_args,
        had_signature=had_signature,
    )


def tokenize(label):
    """
    Lower-case word tokens of an identifier.

    Splits on non-alphanumerics, camel-case humps and digit runs, keeping a
    digit run together with an adjacent acronym: ``Physics2DServer`` gives
    ``physics, 2d, server`` and ``X11Window`` gives ``x11, window``.
    """
    return tuple(
        token.lower()
        for piece in _WORD_SPLIT_RE.split(label)
        if piece
        for token in _TOKEN_RE.findall(piece)
    )
