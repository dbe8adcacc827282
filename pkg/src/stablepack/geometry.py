"""Exact integer arithmetic on axis-aligned boxes.

A box is anchored at its front-left-bottom (FLB) corner ``(x, y, z)`` and has
extents ``(l, w, h)`` along X, Y and Z.  Every predicate here works on Python
ints, so contact and overlap tests never need a tolerance.
"""

from __future__ import annotations

from itertools import permutations
from typing import NamedTuple

from .errors import InvalidInputError

Dims = tuple[int, int, int]


class Box(NamedTuple):
    x: int
    y: int
    z: int
    l: int
    w: int
    h: int

    @property
    def volume(self) -> int:
        return self.l * self.w * self.h

    @property
    def base_area(self) -> int:
        return self.l * self.w

    @property
    def top(self) -> int:
        return self.z + self.h

    @property
    def dims(self) -> Dims:
        return (self.l, self.w, self.h)

    @property
    def corner(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)


def make_box(x, y, z, l, w, h) -> Box:
    """Build a Box after checking that all fields are ints and extents are positive."""
    fields = (x, y, z, l, w, h)
    for v in fields:
        if isinstance(v, bool) or not isinstance(v, int):
            raise InvalidInputError(f"box fields must be integers, got {fields!r}")
    if l <= 0 or w <= 0 or h <= 0:
        raise InvalidInputError(f"box extents must be positive, got {(l, w, h)!r}")
    return Box(x, y, z, l, w, h)


def orientations(dims: Dims) -> list[Dims]:
    """Distinct axis-aligned permutations of ``dims``, lexicographically descending."""
    if len(dims) != 3:
        raise InvalidInputError(f"expected three dimensions, got {dims!r}")
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, int) or d <= 0:
            raise InvalidInputError(f"dimensions must be positive integers, got {dims!r}")
    return sorted(set(permutations(dims)), reverse=True)


def overlaps(a: Box, b: Box) -> bool:
    # strict inequalities: touching faces or edges do not count
    return (
        a.x < b.x + b.l and a.x + a.l > b.x
        and a.y < b.y + b.w and a.y + a.w > b.y
        and a.z < b.z + b.h and a.z + a.h > b.z
    )


def contains(outer: Box, inner: Box) -> bool:
    return (
        outer.x <= inner.x and inner.x + inner.l <= outer.x + outer.l
        and outer.y <= inner.y and inner.y + inner.w <= outer.y + outer.w
        and outer.z <= inner.z and inner.z + inner.h <= outer.z + outer.h
    )


def footprint_overlap(a: Box, b: Box) -> int:
    """Area of the XY intersection of two boxes' footprints (0 when disjoint)."""
    dx = min(a.x + a.l, b.x + b.l) - max(a.x, b.x)
    if dx <= 0:
        return 0
    dy = min(a.y + a.w, b.y + b.w) - max(a.y, b.y)
    if dy <= 0:
        return 0
    return dx * dy


def horizontal_contact_area(upper: Box, lower: Box) -> int:
    """Contact area between ``upper``'s bottom face and ``lower``'s top face."""
    if upper.z != lower.z + lower.h:
        return 0
    return footprint_overlap(upper, lower)
