"""Solvers: corner-point greedy, uniform rollouts, best-of-K sampling and UCT search."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .env import PackingState, PlacementAction, advance, final_eta, reset_instance
from .errors import InvalidInputError
from .geometry import Box, orientations
from .stability import StabilityParams

Policy = Callable[[PackingState], Sequence[float]]


@dataclass
class SolveResult:
    eta: float
    placements: list[tuple[int, Box]]
    solver: str
    wall_time: float = 0.0
    samples: int = 1
    params: StabilityParams = field(default_factory=StabilityParams)
    actions: list[PlacementAction] | None = None
    weights: list[float] = field(default_factory=list)


def _result_from_state(state: PackingState, solver: str, samples: int, t0: float) -> SolveResult:
    return SolveResult(
        eta=final_eta(state),
        placements=[(p.item, p.box) for p in state.placements],
        solver=solver,
        wall_time=time.perf_counter() - t0,
        samples=samples,
        params=state.params,
        actions=[PlacementAction(p.item, p.box.dims) for p in state.placements],
        weights=[p.weight for p in state.placements],
    )


def greedy_order(instance) -> list[tuple[int, object]]:
    items = instance.expanded_items()
    # volume descending, then longest side descending; sorted() is stable
    return sorted(items, key=lambda it: (-it[1].volume, -max(it[1].dims)))


def greedy_solve(instance) -> SolveResult:
    """Corner-point greedy over volume-sorted items.

    Corners are kept in a set seeded with the origin.  For each item the
    corners are tried in ascending ``(z, y, x)`` order and, at each corner,
    every rotation; the first in-bounds, non-overlapping position wins and
    replaces its corner with the three corners it exposes.  A corner is only
    removed when it is used, so stale corners stay in the set.  Items that fit
    nowhere are skipped.  No stability constraint is applied.
    """
    t0 = time.perf_counter()
    L, W, H = instance.L, instance.W, instance.H
    corners = {(0, 0, 0)}
    placed: list[tuple[int, int, int, int, int, int]] = []
    out: list[tuple[int, Box]] = []
    weights = []
    V = 0
    H_max = 0
    for type_idx, item in greedy_order(instance):
        rots = orientations(item.dims)
        done = False
        for c in sorted(corners, key=lambda p: (p[2], p[1], p[0])):
            x, y, z = c
            for l, w, h in rots:
                if x + l > L or y + w > W or z + h > H:
                    continue
                x2, y2, z2 = x + l, y + w, z + h
                hit = False
                for px, py, pz, px2, py2, pz2 in placed:
                    if x < px2 and x2 > px and y < py2 and y2 > py and z < pz2 and z2 > pz:
                        hit = True
                        break
                if hit:
                    continue
                placed.append((x, y, z, x2, y2, z2))
                out.append((type_idx, Box(x, y, z, l, w, h)))
                weights.append(item.weight)
                V += l * w * h
                H_max = max(H_max, z2)
                corners.discard(c)
                corners.update(((x2, y, z), (x, y2, z), (x, y, z2)))
                done = True
                break
            if done:
                break
    eta = V / (L * W * H_max) if H_max else 0.0
    return SolveResult(eta=eta, placements=out, solver="greedy",
                       wall_time=time.perf_counter() - t0, samples=1,
                       params=StabilityParams(), weights=weights)


def random_rollout(state: PackingState, rng: random.Random) -> PackingState:
    """Play uniformly random valid actions until the episode ends."""
    while state.actions:
        acts = state.actions
        state = advance(state, acts[rng.randrange(len(acts))])
    return state


def _pick(state: PackingState, policy: Policy | None, rng: random.Random) -> int:
    n = len(state.actions)
    if policy is None:
        return rng.randrange(n)
    probs = policy(state)
    if len(probs) != n:
        raise InvalidInputError(f"policy returned {len(probs)} probabilities for {n} actions")
    u = rng.random() * math.fsum(probs)
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return n - 1


def uniform_policy(state: PackingState) -> list[float]:
    n = len(state.actions)
    return [1.0 / n] * n


class _Trie:
    """Successor cache shared by the episodes of one sampling run."""

    __slots__ = ("state", "kids")

    def __init__(self, state):
        self.state = state
        self.kids: dict[int, _Trie] = {}

    def child(self, i: int) -> "_Trie":
        node = self.kids.get(i)
        if node is None:
            node = _Trie(advance(self.state, self.state.actions[i]))
            self.kids[i] = node
        return node


def sample_best_of_k(instance, policy: Policy | None = None, k: int = 128, rng_seed=0,
                     params: StabilityParams | None = None,
                     on_episode: Callable[[PackingState], None] | None = None) -> SolveResult:
    """Run ``k`` sampled episodes from one seeded stream and keep the best.

    ``policy`` maps a state to probabilities over ``state.actions``; ``None``
    samples uniformly.  Episode ``j`` only depends on the seed and on the
    episodes before it, so the first episodes of a larger ``k`` replay a
    smaller one.
    """
    if k < 1:
        raise InvalidInputError(f"k must be at least 1, got {k}")
    t0 = time.perf_counter()
    rng = random.Random(rng_seed)
    root = _Trie(reset_instance(instance, params))
    best = None
    best_eta = -1.0
    for _ in range(k):
        node = root
        while node.state.actions:
            node = node.child(_pick(node.state, policy, rng))
        eta = final_eta(node.state)
        if on_episode is not None:
            on_episode(node.state)
        if eta > best_eta:
            best, best_eta = node.state, eta
    return _result_from_state(best, "sample", k, t0)


class _Node:
    __slots__ = ("state", "children", "untried", "n", "total")

    def __init__(self, state: PackingState):
        self.state = state
        self.children: list[_Node] = []
        self.untried = list(state.actions)
        self.n = 0
        self.total = 0.0


def mcts_solve(instance, rollouts: int = 2000, exploration_c: float = math.sqrt(2),
               rng_seed=0, params: StabilityParams | None = None) -> SolveResult:
    """UCT search over the packing MDP with uniform random rollouts.

    Each simulation descends by UCT, expands one untried action chosen
    uniformly at random, rolls out to the end of the episode and backs up the
    final utilization.  The best complete episode seen is returned.
    """
    if rollouts < 1:
        raise InvalidInputError(f"rollouts must be at least 1, got {rollouts}")
    t0 = time.perf_counter()
    rng = random.Random(rng_seed)
    root = _Node(reset_instance(instance, params))
    best = None
    best_eta = -1.0
    for _ in range(rollouts):
        node = root
        path = [node]
        while not node.untried and node.children:
            log_n = math.log(node.n)
            node = max(
                node.children,
                key=lambda ch: ch.total / ch.n + exploration_c * math.sqrt(log_n / ch.n),
            )
            path.append(node)
        if node.untried:
            i = rng.randrange(len(node.untried))
            action = node.untried[i]
            node.untried[i] = node.untried[-1]
            node.untried.pop()
            child = _Node(advance(node.state, action))
            node.children.append(child)
            node = child
            path.append(node)
        terminal = random_rollout(node.state, rng)
        eta = final_eta(terminal)
        if eta > best_eta:
            best, best_eta = terminal, eta
        for n in path:
            n.n += 1
            n.total += eta
    return _result_from_state(best, "mcts", rollouts, t0)


def run_solver(name: str, instance, *, rollouts: int = 2000, k: int = 128,
               exploration_c: float = math.sqrt(2), seed=0,
               params: StabilityParams | None = None) -> SolveResult:
    if name == "greedy":
        return greedy_solve(instance)
    if name == "mcts":
        return mcts_solve(instance, rollouts, exploration_c, seed, params)
    if name == "sample":
        return sample_best_of_k(instance, None, k, seed, params)
    if name == "random":
        res = sample_best_of_k(instance, None, 1, seed, params)
        res.solver = "random"
        return res
    raise InvalidInputError(f"unknown solver {name!r}")
