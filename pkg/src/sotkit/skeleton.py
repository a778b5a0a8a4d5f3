"""Parsing the skeleton response into an ordered list of numbered points."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptySkeleton

# Numbered-point extraction: index, one optional space, then text up to the
# next newline (or the end of the string).
POINT_RE = re.compile(r"(\d+)\.\s?([\s\S]+?)(?=\n|\n*$)")


@dataclass(frozen=True)
class SkeletonPoint:
    index: int
    text: str


@dataclass(frozen=True)
class Skeleton:
    raw: str
    points: tuple[SkeletonPoint, ...]
    truncated: bool = False


def parse_skeleton(raw: str, cap: int | None = None) -> Skeleton:
    """Extract numbered points from a raw skeleton response.

    Duplicate indices keep the first occurrence; empty-text matches are
    dropped; with a cap, only the first ``cap`` points are kept and the
    result is flagged truncated. Zero usable points raises EmptySkeleton so
    the caller can fall back to normal generation.
    """
    points: list[SkeletonPoint] = []
    seen: set[int] = set()
    truncated = False
    for match in POINT_RE.finditer(raw):
        index = int(match.group(1))
        text = match.group(2).rstrip()
        if not text:
            continue
        if index in seen:
            continue
        if cap is not None and len(points) >= cap:
            truncated = True
            break
        seen.add(index)
        points.append(SkeletonPoint(index=index, text=text))
    if not points:
        raise EmptySkeleton(raw)
    return Skeleton(raw=raw, points=tuple(points), truncated=truncated)


def point_count(s: Skeleton) -> int:
    return len(s.points)


def format_points(points: tuple[SkeletonPoint, ...] | list[SkeletonPoint]) -> str:
    """Canonical one-point-per-line serialization; reparsing is lossless."""
    return "".join(f"{p.index}. {p.text}\n" for p in points)
