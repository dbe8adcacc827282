"""The packing MDP.

States are immutable values.  ``step`` returns a fresh successor so search
code can branch from any state without copying.  Each state carries its
current space and valid actions, computed once when the state is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .ems import SpaceStack, initial_spaces, update_after_placement
from .errors import ContractViolation, InvalidInputError
from .geometry import Box, Dims, orientations
from .stability import StabilityParams

DEFAULT_ALPHA1 = 1.0
DEFAULT_ALPHA2 = 0.1
GAMMA = 1.0


@dataclass(frozen=True)
class ItemType:
    l: int
    w: int
    h: int
    weight: float
    remaining: int

    def __post_init__(self):
        for d in (self.l, self.w, self.h):
            if isinstance(d, bool) or not isinstance(d, int) or d <= 0:
                raise InvalidInputError(f"item dimensions must be positive integers: {self!r}")
        if self.remaining < 0:
            raise InvalidInputError(f"remaining quantity cannot be negative: {self!r}")
        if not self.weight > 0:
            raise InvalidInputError(f"item weight must be positive: {self!r}")

    @property
    def dims(self) -> Dims:
        return (self.l, self.w, self.h)

    @property
    def volume(self) -> int:
        return self.l * self.w * self.h


class PlacementAction(NamedTuple):
    item: int
    dims: Dims


class Placement(NamedTuple):
    box: Box
    weight: float
    item: int


@dataclass(frozen=True)
class StepReward:
    r_lr: float
    r_hd: float
    total: float
    alpha1: float
    alpha2: float


@dataclass(frozen=True)
class PackingState:
    bin: Box
    placements: tuple[Placement, ...]
    item_types: tuple[ItemType, ...]
    space_stack: SpaceStack
    current_space: Box | None
    actions: tuple[PlacementAction, ...]
    H_t: int
    H_t_prime: int
    params: StabilityParams
    step_count: int
    packed_volume: int

    @property
    def done(self) -> bool:
        return not self.actions

    @property
    def height_gap(self) -> int:
        return self.H_t - self.H_t_prime

    def placed_pairs(self) -> list[tuple[Box, float]]:
        return [(p.box, p.weight) for p in self.placements]


@lru_cache(maxsize=None)
def _orients(dims: Dims) -> tuple[Dims, ...]:
    return tuple(orientations(dims))


def _scan(placements, item_types, spaces, params):
    """Walk the stack from the top; return the first space with valid actions."""
    live = [(i, _orients((t.l, t.w, t.h))) for i, t in enumerate(item_types) if t.remaining > 0]
    if not live:
        return None, ()
    check_support = params.support_enabled
    check_weight = params.weight_enabled
    if check_support:
        rs_num, rs_den = params.r_s.numerator, params.r_s.denominator
    if check_weight:
        rw_num, rw_den = params.r_w.numerator, params.r_w.denominator
    for space in spaces:
        sx, sy, sz, sl, sw, sh = space
        cands = [
            (i, o) for i, ors in live for o in ors
            if o[0] <= sl and o[1] <= sw and o[2] <= sh
        ]
        if not cands:
            continue
        if sz == 0:
            return space, tuple(PlacementAction(i, o) for i, o in cands)
        # items whose top forms the floor of this space
        sx2, sy2 = sx + sl, sy + sw
        under = []
        for p in placements:
            bx, by, bz, bl, bw, bh = p.box
            if bz + bh == sz and bx < sx2 and sx < bx + bl and by < sy2 and sy < by + bw:
                under.append((bx, by, bx + bl, by + bw, p.weight))
        if not under:
            continue
        if not (check_support or check_weight):
            return space, tuple(PlacementAction(i, o) for i, o in cands)
        acts = []
        for i, o in cands:
            l, w, _ = o
            cx2, cy2 = sx + l, sy + w
            area = 0
            n_sup = 0
            sup_weight = 0.0
            for ux, uy, ux2, uy2, uw in under:
                dx = min(cx2, ux2) - max(sx, ux)
                if dx <= 0:
                    continue
                dy = min(cy2, uy2) - max(sy, uy)
                if dy <= 0:
                    continue
                area += dx * dy
                n_sup += 1
                sup_weight = uw
            if check_support and area * rs_den < rs_num * l * w:
                continue
            if check_weight and n_sup == 1:
                if item_types[i].weight * rw_den > rw_num * sup_weight:
                    continue
            acts.append(PlacementAction(i, o))
        if acts:
            return space, tuple(acts)
    return None, ()


def _build(bin_box, placements, item_types, spaces, params, H_t, H_t_prime, step_count, volume):
    current, acts = _scan(placements, item_types, spaces, params)
    return PackingState(
        bin=bin_box,
        placements=placements,
        item_types=item_types,
        space_stack=spaces,
        current_space=current,
        actions=acts,
        H_t=H_t,
        H_t_prime=H_t_prime,
        params=params,
        step_count=step_count,
        packed_volume=volume,
    )


def reset(bin_dims: Sequence[int], item_types: Sequence[ItemType],
          params: StabilityParams | None = None) -> PackingState:
    """Initial state for an empty bin of size ``(L, W, H)``."""
    L, W, H = bin_dims
    bin_box = Box(0, 0, 0, L, W, H)
    spaces = initial_spaces(bin_box)
    return _build(bin_box, (), tuple(item_types), spaces,
                  params or StabilityParams(), 0, 0, 0, 0)


def reset_instance(instance, params: StabilityParams | None = None) -> PackingState:
    return reset((instance.L, instance.W, instance.H), instance.item_types,
                 instance.params if params is None else params)


def valid_actions(state: PackingState) -> tuple[Box | None, list[PlacementAction]]:
    return state.current_space, list(state.actions)


def advance(state: PackingState, action: PlacementAction) -> PackingState:
    """Successor state without reward bookkeeping."""
    if action not in state.actions:
        raise ContractViolation(f"action {action!r} is not valid in this state")
    sx, sy, sz = state.current_space[:3]
    l, w, h = action.dims
    box = Box(sx, sy, sz, l, w, h)
    t = state.item_types[action.item]
    types = list(state.item_types)
    types[action.item] = ItemType(t.l, t.w, t.h, t.weight, t.remaining - 1)
    placements = state.placements + (Placement(box, t.weight, action.item),)
    spaces = update_after_placement(state.space_stack, box)
    H_t, H_p = push_top(state.H_t, state.H_t_prime, sz + h)
    return _build(state.bin, placements, tuple(types), spaces, state.params,
                  H_t, H_p, state.step_count + 1, state.packed_volume + l * w * h)


def push_top(H_t: int, H_t_prime: int, top: int) -> tuple[int, int]:
    """Largest and second-largest item tops after adding one more top.

    Tops are counted with multiplicity, so two items ending at the same
    height give ``H_t == H_t_prime`` and a zero gap.
    """
    if top >= H_t:
        return top, H_t
    return H_t, max(H_t_prime, top)


def loading_rate(volume: int, L: int, W: int, top: int) -> float:
    if top == 0:
        return 0.0
    return volume / (L * W * top)


def reward(prev: PackingState, next: PackingState,
           alpha1: float = DEFAULT_ALPHA1, alpha2: float = DEFAULT_ALPHA2) -> StepReward:
    L, W, H_bin = prev.bin.l, prev.bin.w, prev.bin.h
    return step_reward(prev.packed_volume, prev.H_t, prev.H_t_prime,
                       next.packed_volume, next.H_t, next.H_t_prime,
                       L, W, H_bin, alpha1, alpha2)


def step_reward(vol_prev, H_prev, Hp_prev, vol_next, H_next, Hp_next,
                L, W, H_bin, alpha1=DEFAULT_ALPHA1, alpha2=DEFAULT_ALPHA2) -> StepReward:
    """Loading-rate gain plus the (negated, height-normalised) change in top gap."""
    r_lr = loading_rate(vol_next, L, W, H_next) - loading_rate(vol_prev, L, W, H_prev)
    r_hd = -((H_next - Hp_next) - (H_prev - Hp_prev)) / H_bin
    return StepReward(r_lr, r_hd, alpha1 * r_lr + alpha2 * r_hd, alpha1, alpha2)


def step(state: PackingState, action: PlacementAction,
         alpha1: float = DEFAULT_ALPHA1, alpha2: float = DEFAULT_ALPHA2):
    """Apply ``action``; return ``(next_state, StepReward, done)``."""
    nxt = advance(state, action)
    return nxt, reward(state, nxt, alpha1, alpha2), nxt.done


def utilization(state: PackingState) -> float:
    if not state.placements:
        raise InvalidInputError("utilization is undefined for an empty layout")
    return loading_rate(state.packed_volume, state.bin.l, state.bin.w, state.H_t)


def final_eta(state: PackingState) -> float:
    """Utilization, or 0.0 when nothing was placed."""
    return loading_rate(state.packed_volume, state.bin.l, state.bin.w, state.H_t)


def encode_state(state: PackingState) -> tuple[np.ndarray, np.ndarray]:
    """Matrix encoding of a state.

    Returns ``(s_bin, s_valid_items)``.  ``s_bin`` is ``(n + 2) x 7`` with
    columns x, y, z, l, w, h, weight: row 0 is the bin, row 1 the current
    space (zeros when there is none), then one row per placed item.
    ``s_valid_items`` is ``k x 5`` with columns l, w, h, remaining, weight for
    the item types that have at least one valid action.
    """
    n = len(state.placements)
    s_bin = np.zeros((n + 2, 7), dtype=np.float64)
    s_bin[0, 3:6] = state.bin.dims
    if state.current_space is not None:
        s_bin[1, :6] = tuple(state.current_space)
    for r, p in enumerate(state.placements, start=2):
        s_bin[r, :6] = tuple(p.box)
        s_bin[r, 6] = p.weight
    valid = sorted({a.item for a in state.actions})
    s_items = np.zeros((len(valid), 5), dtype=np.float64)
    for r, i in enumerate(valid):
        t = state.item_types[i]
        s_items[r] = (t.l, t.w, t.h, t.remaining, t.weight)
    return s_bin, s_items
