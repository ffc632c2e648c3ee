"""Dotted-path parsing and value-tree access.

Paths like ``parent.specs.origin`` address nested JSON-style maps. Reads
never create structure; writes create intermediate maps as needed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from .errors import PathNotFound

_SEGMENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class DottedPath:
    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("dotted path needs at least one segment")
        for seg in self.segments:
            if not _SEGMENT_RE.match(seg):
                raise ValueError(f"bad path segment {seg!r}")

    @classmethod
    def parse(cls, text: str) -> "DottedPath":
        return cls(tuple(text.split(".")))

    def render(self) -> str:
        return ".".join(self.segments)

    @property
    def head(self) -> str:
        return self.segments[0]

    @property
    def rest(self) -> tuple[str, ...]:
        return self.segments[1:]

    def __str__(self) -> str:
        return self.render()


def is_valid_path(text: str) -> bool:
    try:
        DottedPath.parse(text)
    except ValueError:
        return False
    return True


def resolve_path(root: Any, path: DottedPath | str) -> Any:
    """Walk ``path`` through nested maps starting at ``root``.

    Raises PathNotFound carrying the longest resolvable prefix.
    """
    if isinstance(path, str):
        path = DottedPath.parse(path)
    node = root
    for i, seg in enumerate(path.segments):
        if not isinstance(node, dict) or seg not in node:
            prefix = ".".join(path.segments[:i])
            raise PathNotFound(
                f"cannot resolve {path.render()!r}", prefix=prefix
            )
        node = node[seg]
    return node


def resolve_segments(root: Any, segments: tuple[str, ...]) -> Any:
    """Like resolve_path but for an already-split (possibly empty) path."""
    if not segments:
        return root
    return resolve_path(root, DottedPath(segments))


def write_path(root: dict, path: DottedPath | str, value: Any) -> None:
    """Write ``value`` at ``path``, creating intermediate maps in place."""
    if isinstance(path, str):
        path = DottedPath.parse(path)
    node = root
    for seg in path.segments[:-1]:
        nxt = node.get(seg)
        if not isinstance(nxt, dict):
            nxt = {}
            node[seg] = nxt
        node = nxt
    node[path.segments[-1]] = value
