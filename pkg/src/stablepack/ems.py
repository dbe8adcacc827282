"""Empty maximal space (EMS) maintenance and the screening order.

The free volume of a bin is represented by the set of all maximal empty boxes.
Placing an item splits every space it intersects into at most six residual
slabs (left/right, front/back, below/above the item).  Residuals that are
contained in another space are discarded, which keeps the set exactly equal to
the maximal empty boxes.

The stack is a tuple sorted in screening order; element 0 is the top.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InvalidInputError
from .geometry import Box

SpaceStack = tuple[Box, ...]


def screening_key(s: Box):
    # lowest layer first, then row (y), then x; larger volume first on ties
    return (s[2], s[1], s[0], -(s[3] * s[4] * s[5]), s[3], s[4], s[5])


def screening_order(spaces: Iterable[Box]) -> list[Box]:
    return sorted(spaces, key=screening_key)


def initial_spaces(bin_box: Box) -> SpaceStack:
    if bin_box.l <= 0 or bin_box.w <= 0 or bin_box.h <= 0:
        raise InvalidInputError(f"bin must have positive dimensions, got {bin_box!r}")
    return (Box(0, 0, 0, bin_box.l, bin_box.w, bin_box.h),)


def split_space(space: Box, placed: Box) -> list[Box]:
    """Residual slabs of ``space`` left free by ``placed`` (zero-extent slabs dropped)."""
    sx, sy, sz, sl, sw, sh = space
    px, py, pz, pl, pw, ph = placed
    sx2, sy2, sz2 = sx + sl, sy + sw, sz + sh
    px2, py2, pz2 = px + pl, py + pw, pz + ph
    out = []
    if px > sx:
        out.append(Box(sx, sy, sz, px - sx, sw, sh))
    if px2 < sx2:
        out.append(Box(px2, sy, sz, sx2 - px2, sw, sh))
    if py > sy:
        out.append(Box(sx, sy, sz, sl, py - sy, sh))
    if py2 < sy2:
        out.append(Box(sx, py2, sz, sl, sy2 - py2, sh))
    if pz > sz:
        out.append(Box(sx, sy, sz, sl, sw, pz - sz))
    if pz2 < sz2:
        out.append(Box(sx, sy, pz2, sl, sw, sz2 - pz2))
    return out


def _prune_py(fresh: list[Box], kept: list[Box]) -> list[Box]:
    out = []
    for i, r in enumerate(fresh):
        rx, ry, rz, rl, rw, rh = r
        rx2, ry2, rz2 = rx + rl, ry + rw, rz + rh
        dominated = False
        for ox, oy, oz, ol, ow, oh in kept:
            if (ox <= rx and oy <= ry and oz <= rz and rx2 <= ox + ol
                    and ry2 <= oy + ow and rz2 <= oz + oh):
                dominated = True
                break
        if not dominated:
            for j, (ox, oy, oz, ol, ow, oh) in enumerate(fresh):
                if (j != i and ox <= rx and oy <= ry and oz <= rz and rx2 <= ox + ol
                        and ry2 <= oy + ow and rz2 <= oz + oh):
                    dominated = True
                    break
        if not dominated:
            out.append(r)
    return out


def _prune_np(fresh: list[Box], kept: list[Box]) -> list[Box]:
    k = len(fresh)
    a = np.array(fresh + kept, dtype=np.int64).T
    x, y, z = a[0], a[1], a[2]
    x2, y2, z2 = x + a[3], y + a[4], z + a[5]
    inside = (
        (x <= x[:k, None]) & (y <= y[:k, None]) & (z <= z[:k, None])
        & (x2[:k, None] <= x2) & (y2[:k, None] <= y2) & (z2[:k, None] <= z2)
    )
    np.fill_diagonal(inside[:, :k], False)
    return [r for r, d in zip(fresh, inside.any(axis=1).tolist()) if not d]


_NUMPY_CUTOFF = 200


def update_after_placement(stack: Iterable[Box], placed: Box) -> SpaceStack:
    """Return the maximal-space stack after ``placed`` is put into the bin."""
    px, py, pz, pl, pw, ph = placed
    px2, py2, pz2 = px + pl, py + pw, pz + ph
    kept: list[Box] = []
    fresh: list[Box] = []
    for s in stack:
        sx, sy, sz, sl, sw, sh = s
        if sx < px2 and px < sx + sl and sy < py2 and py < sy + sw and sz < pz2 and pz < sz + sh:
            fresh.extend(split_space(s, placed))
        else:
            kept.append(s)
    # Untouched spaces stay maximal; only residuals can be dominated.
    fresh = list(dict.fromkeys(fresh))
    if len(fresh) * (len(fresh) + len(kept)) > _NUMPY_CUTOFF:
        survivors = _prune_np(fresh, kept)
    else:
        survivors = _prune_py(fresh, kept)
    kept.extend(survivors)
    kept.sort(key=screening_key)
    return tuple(kept)
