"""
Textual #include extraction from a C/C++ source tree.

Nothing is preprocessed: every #include line outside a comment counts,
whatever conditional block it sits in.
"""

import logging
import os
import posixpath
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from django.conf import settings

from .exceptions import ScanRootError

logger = logging.getLogger(__name__)

DEFAULT_EXTENSIONS = (".h", ".hpp", ".hh", ".c", ".cc", ".cpp", ".cxx", ".inl")
QUOTED = "quoted"
ANGLED = "angled"

_INCLUDE_RE = re.compile(r'^\s*#\s*include\s*(?:<(?P<angled>[^>]+)>|"(?P<quoted>[^"]+)")')


@dataclass(frozen=True)
class IncludeEdge:
    includer: str
    name: str
    kind: str
    resolved: Optional[str] = None
    line: int = 0

    @property
    def target(self):
        return self.resolved if self.resolved is not None else self.name


@dataclass(frozen=True)
class ScanIssue:
    path: str
    message: str


@dataclass(frozen=True)
class IncludeGraph:
    """
    Files of a scanned tree and the #include edges between them.

    Paths are POSIX paths relative to ``scan_root``. Edges whose header was
    not found among the scanned files keep the name as written and have no
    ``resolved`` path.
    """

    scan_root: str
    nodes: tuple = ()
    edges: tuple = ()
    issues: tuple = ()

    def resolved_edges(self):
        return [edge for edge in self.edges if edge.resolved is not None]

    def frontier(self):
        return sorted({edge.name for edge in self.edges if edge.resolved is None})


def strip_comments(text):
    """Blank out // and /* */ comments, keeping line breaks where they were."""
    kept = []
    in_block = False
    index = 0
    while index < len(text):
        if in_block:
            end = text.find("*/", index)
            if end == -1:
                kept.append("\n" * text.count("\n", index))
                break
            kept.append("\n" * text.count("\n", index, end))
            index = end + 2
            in_block = False
            continue
        line_comment = text.find("//", index)
        block_comment = text.find("/*", index)
        if line_comment == -1 and block_comment == -1:
            kept.append(text[index:])
            break
        if block_comment == -1 or (line_comment != -1 and line_comment < block_comment):
            kept.append(text[index:line_comment])
            newline = text.find("\n", line_comment)
            if newline == -1:
                break
            index = newline
        else:
            kept.append(text[index:block_comment])
            index = block_comment + 2
            in_block = True
    return "".join(kept)


def parse_includes(text):
    """``(line number, kind, name)`` for every #include directive in ``text``."""
    found = []
    for line_number, line in enumerate(strip_comments(text).splitlines(), start=1):
        match = _INCLUDE_RE.match(line)
        if not match:
            continue
        kind = QUOTED if match.group("quoted") is not None else ANGLED
        name = match.group(kind).strip()
        if name:
            found.append((line_number, kind, name))
    return found


def _resolve(includer, name, kind, include_dirs, files):
    candidates = []
    if kind == QUOTED:
        candidates.append(posixpath.join(posixpath.dirname(includer), name))
    candidates.extend(posixpath.join(directory, name) for directory in include_dirs)
    for candidate in candidates:
        candidate = posixpath.normpath(candidate)
        if candidate in files:
            return candidate
    return None


def _relative_dir(root, directory):
    directory = Path(directory)
    if directory.is_absolute():
        return Path(os.path.relpath(directory, root)).as_posix()
    return directory.as_posix()


def _read(path):
    try:
        return path.read_text(encoding="utf-8", errors="replace"), None
    except OSError as e:
        return None, str(e)


def scan_includes(root, extensions=DEFAULT_EXTENSIONS, include_dirs=(), workers=None):
    """
    Scan ``root`` for source files and extract their #include edges.

    Parameters
        root: directory to scan; every path in the result is relative to it.
        extensions: file suffixes to scan, with the leading dot.
        include_dirs: directories searched for includes, relative to
            ``root`` unless absolute.
        workers: reader threads; defaults to ``ANATOMY['SCAN_WORKERS']``.
    Returns
        IncludeGraph: unreadable files are nodes without edges, listed in
        ``issues``.
    Raises
        ScanRootError: if ``root`` is not a directory.
    """
    root = Path(root)
    if not root.is_dir():
        raise ScanRootError(f"Not a directory: {root}")
    if workers is None:
        workers = settings.ANATOMY.get("SCAN_WORKERS", 4)

    suffixes = {extension.lower() for extension in extensions}
    paths = sorted(
        (path for path in root.rglob("*") if path.is_file() and path.suffix.lower() in suffixes),
        key=lambda path: path.relative_to(root).as_posix(),
    )
    files = [path.relative_to(root).as_posix() for path in paths]
    known = set(files)
    directories = [_relative_dir(root, directory) for directory in include_dirs]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        contents = list(executor.map(_read, paths))

    edges = []
    issues = []
    for includer, (text, error) in zip(files, contents):
        if error is not None:
            logger.warning(f"Cannot read {includer}: {error}")
            issues.append(ScanIssue(includer, error))
            continue
        seen = set()
        for line_number, kind, name in parse_includes(text):
            resolved = _resolve(includer, name, kind, directories, known)
            target = resolved if resolved is not None else name
            if target in seen:
                continue
            seen.add(target)
            edges.append(IncludeEdge(includer, name, kind, resolved, line_number))

    graph = IncludeGraph(scan_root=str(root), nodes=tuple(files), edges=tuple(edges), issues=tuple(issues))
    logger.info(
        f"Scanned {len(files)} files under {root}: {len(edges)} includes, "
        f"{len(graph.frontier())} unresolved headers, {len(issues)} unreadable files"
    )
    return graph
