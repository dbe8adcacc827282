import math
import random
from fractions import Fraction

import numpy as np
import pytest

from stablepack.env import (
    ItemType,
    PlacementAction,
    advance,
    encode_state,
    final_eta,
    reset,
    reset_instance,
    step,
    step_reward,
    utilization,
    valid_actions,
)
from stablepack.errors import ContractViolation, InvalidInputError
from stablepack.geometry import Box, contains, overlaps
from stablepack.instances import generate_instance
from stablepack.stability import StabilityParams, is_stable_placement


def run_episode(state, rng, alpha1=1.0, alpha2=0.1):
    rewards, actions = [], []
    while not state.done:
        a = rng.choice(state.actions)
        state, r, _ = step(state, a, alpha1, alpha2)
        rewards.append(r)
        actions.append(a)
    return state, rewards, actions


def test_single_cube_in_empty_bin():
    s = reset((10, 10, 10), [ItemType(4, 4, 4, 1, 1)])
    space, acts = valid_actions(s)
    assert space == Box(0, 0, 0, 10, 10, 10)
    assert acts == [PlacementAction(0, (4, 4, 4))]


def test_terminal_state_has_no_actions():
    s = reset((10, 10, 10), [ItemType(4, 4, 4, 1, 1)])
    s = advance(s, s.actions[0])
    assert valid_actions(s) == (None, [])
    assert s.done


def test_oversized_item_has_no_action():
    s = reset((10, 10, 10), [ItemType(12, 4, 4, 1, 1)])
    assert valid_actions(s) == (None, [])


def test_first_reward_and_done():
    s = reset((10, 10, 10), [ItemType(5, 5, 5, 1, 1)])
    nxt, r, done = step(s, s.actions[0])
    assert r.r_lr == pytest.approx(0.25, abs=1e-15)
    assert done
    assert utilization(nxt) == 0.25


def test_flat_gap_reward():
    r = step_reward(0, 10, 6, 0, 10, 10, 10, 10, 20, alpha1=1.0, alpha2=1.0)
    assert r.r_hd == pytest.approx(0.2)


def test_flatter_action_scores_higher():
    # a 10x5x4 slab is already in place; two identical 10x5x4 items remain,
    # lying flat matches its top, standing up makes a 5-high step
    s = reset((10, 10, 20), [ItemType(10, 5, 4, 1, 3)])
    s = advance(s, PlacementAction(0, (10, 5, 4)))
    flat, upright = PlacementAction(0, (10, 5, 4)), PlacementAction(0, (10, 4, 5))
    assert s.current_space[:3] == (0, 5, 0)
    _, r_flat, _ = step(s, flat, 1.0, 0.1)
    n_up, r_up, _ = step(s, upright, 1.0, 0.1)
    assert n_up.H_t == 5 and n_up.H_t_prime == 4
    # both raise the top by the same amount relative to the placed volume
    assert r_flat.total > r_up.total
    assert r_flat.r_hd > r_up.r_hd


def test_equal_tops_give_zero_gap():
    s = reset((10, 10, 20), [ItemType(5, 10, 4, 1, 2)])
    s = advance(s, s.actions[0])
    assert (s.H_t, s.H_t_prime) == (4, 0)
    s = advance(s, PlacementAction(0, (10, 5, 4)))
    assert s.height_gap == 0


def test_invalid_action_raises():
    s = reset((10, 10, 10), [ItemType(5, 5, 5, 1, 1)])
    with pytest.raises(ContractViolation):
        step(s, PlacementAction(0, (5, 5, 6)))
    with pytest.raises(ContractViolation):
        step(s, PlacementAction(1, (5, 5, 5)))


def test_utilization_cases():
    s = reset((10, 10, 30), [ItemType(10, 10, 5, 1, 2)])
    with pytest.raises(InvalidInputError):
        utilization(s)
    assert final_eta(s) == 0.0
    while not s.done:
        s = advance(s, s.actions[0])
    assert utilization(s) == 1.0


def test_replay_is_identical():
    inst = generate_instance("S1_10", 4)
    rng = random.Random(0)
    end, rewards, actions = run_episode(reset_instance(inst), rng)
    s = reset_instance(inst)
    replayed = []
    for a in actions:
        s, r, _ = step(s, a)
        replayed.append(r)
    assert s == end
    assert replayed == rewards


@pytest.mark.parametrize("seed", range(40))
def test_episode_invariants(seed):
    rng = random.Random(seed)
    scheme = rng.choice(["S1_10", "S2_10", "M_10", "CASE"])
    inst = generate_instance(scheme, seed)
    params = StabilityParams.make(r_s=Fraction(66, 100), r_w=3) if seed % 2 else None
    s = reset_instance(inst, params)
    assert (s.H_t, s.H_t_prime) == (0, 0)
    prev = s
    r_lr, r_hd = [], []
    while not s.done:
        a = rng.choice(s.actions)
        nxt, r, _ = step(s, a)
        placed = nxt.placements[-1]
        assert contains(s.bin, placed.box)
        assert not any(overlaps(placed.box, p.box) for p in s.placements)
        assert is_stable_placement((placed.box, placed.weight), s.placed_pairs(), s.params)
        assert nxt.H_t_prime <= nxt.H_t
        r_lr.append(r.r_lr)
        r_hd.append(r.r_hd)
        s = nxt
    assert s.step_count == len(s.placements) == len(r_lr)
    assert abs(math.fsum(r_lr) - final_eta(s)) < 1e-12
    assert math.fsum(r_hd) == pytest.approx(-(s.H_t - s.H_t_prime) / s.bin.h, abs=1e-12)
    assert prev.step_count == 0


def test_encoding_shapes():
    s = reset((10, 8, 20), [ItemType(4, 4, 2, 7, 2), ItemType(3, 2, 1, 1.5, 1)])
    s = advance(s, s.actions[0])
    s_bin, s_items = encode_state(s)
    assert s_bin.shape == (3, 7)
    assert list(s_bin[0]) == [0, 0, 0, 10, 8, 20, 0]
    assert s_bin[1, 6] == 0
    assert list(s_bin[2]) == list(s.placements[0].box) + [7]
    assert s_items.shape == (2, 5)
    assert list(s_items[0]) == [4, 4, 2, 1, 7]
    assert np.all(np.isfinite(s_bin))


def test_states_are_immutable():
    s = reset((10, 10, 10), [ItemType(5, 5, 5, 1, 2)])
    before = (s.placements, s.item_types)
    advance(s, s.actions[0])
    assert (s.placements, s.item_types) == before
    with pytest.raises(Exception):
        s.H_t = 3
