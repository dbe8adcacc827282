"""File formats, solution records and their re-verification.

Instance and solution sets are JSON lines.  Every line carries a ``schema``
field of the form ``stablepack/<kind>@<major>.<minor>``; readers refuse other
kinds and unknown major versions.

A solution record embeds its instance, so a solutions file can be verified
without the instance file it came from.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .env import (
    DEFAULT_ALPHA1,
    DEFAULT_ALPHA2,
    PlacementAction,
    advance,
    loading_rate,
    push_top,
    reset_instance,
    step_reward,
)
from .errors import ContractViolation, SchemaVersionError, VerificationError
from .geometry import Box, contains, orientations, overlaps
from .instances import InstanceSpec
from .solvers import SolveResult
from .stability import StabilityParams, audit_layout

SCHEMA_MAJOR = 1
SCHEMA_MINOR = 0
INSTANCE_SCHEMA = f"stablepack/instance@{SCHEMA_MAJOR}.{SCHEMA_MINOR}"
SOLUTION_SCHEMA = f"stablepack/solution@{SCHEMA_MAJOR}.{SCHEMA_MINOR}"
LAYOUT_SCHEMA = f"stablepack/layout@{SCHEMA_MAJOR}.{SCHEMA_MINOR}"
ETA_TOL = 1e-12

# solvers whose placements come from the packing MDP and can be replayed through it
ENV_SOLVERS = {"mcts", "sample", "random"}


def check_schema(obj: dict, kind: str) -> None:
    tag = obj.get("schema")
    if not isinstance(tag, str) or "@" not in tag:
        raise SchemaVersionError(f"missing or malformed schema tag: {tag!r}")
    name, _, version = tag.partition("@")
    if name != f"stablepack/{kind}":
        raise SchemaVersionError(f"expected a {kind} record, got {name!r}")
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise SchemaVersionError(f"malformed schema version {version!r}") from None
    if major != SCHEMA_MAJOR:
        raise SchemaVersionError(f"unsupported {kind} schema major version {major}")


def instance_to_json(inst: InstanceSpec) -> dict:
    return {"schema": INSTANCE_SCHEMA, **inst.to_dict()}


def instance_from_json(obj: dict) -> InstanceSpec:
    check_schema(obj, "instance")
    return InstanceSpec.from_dict(obj)


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: Path | str, objs: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for obj in objs:
            fh.write(dumps(obj))
            fh.write("\n")
            n += 1
    return n


def iter_jsonl(path: Path | str) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


@dataclass
class SolverConfig:
    name: str
    rollouts: int = 2000
    k: int = 128
    exploration_c: float = math.sqrt(2)
    seed: int = 0
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2

    def to_dict(self) -> dict:
        d = {"name": self.name, "seed": self.seed, "alpha1": self.alpha1, "alpha2": self.alpha2}
        if self.name == "mcts":
            d.update(rollouts=self.rollouts, exploration_c=self.exploration_c)
        elif self.name == "sample":
            d.update(k=self.k)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(
            name=d["name"],
            rollouts=d.get("rollouts", 2000),
            k=d.get("k", 128),
            exploration_c=d.get("exploration_c", math.sqrt(2)),
            seed=d.get("seed", 0),
            alpha1=d.get("alpha1", DEFAULT_ALPHA1),
            alpha2=d.get("alpha2", DEFAULT_ALPHA2),
        )


@dataclass
class PlacementStep:
    item: int
    dims: tuple[int, int, int]
    position: tuple[int, int, int]
    weight: float
    support_ratio: Fraction

    @property
    def box(self) -> Box:
        return Box(*self.position, *self.dims)


@dataclass
class SolutionRecord:
    instance: InstanceSpec
    solver: SolverConfig
    params: StabilityParams
    eta: float
    steps: list[PlacementStep]
    rewards: list[tuple[float, float, float]]
    wall_time: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def boxes(self) -> list[Box]:
        return [s.box for s in self.steps]

    def to_json(self) -> dict:
        d = {
            "schema": SOLUTION_SCHEMA,
            "instance": self.instance.to_dict(),
            "solver": self.solver.to_dict(),
            "params": self.params.to_dict(),
            "eta": self.eta,
            "steps": [
                {
                    "item": s.item,
                    "dims": list(s.dims),
                    "position": list(s.position),
                    "weight": s.weight,
                    "support_ratio": str(s.support_ratio),
                }
                for s in self.steps
            ],
            "rewards": [{"r_lr": a, "r_hd": b, "total": c} for a, b, c in self.rewards],
        }
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, obj: dict, verify: bool = True) -> "SolutionRecord":
        check_schema(obj, "solution")
        rec = cls(
            instance=InstanceSpec.from_dict(obj["instance"]),
            solver=SolverConfig.from_dict(obj["solver"]),
            params=StabilityParams.from_dict(obj["params"]),
            eta=float(obj["eta"]),
            steps=[
                PlacementStep(
                    item=int(s["item"]),
                    dims=tuple(int(v) for v in s["dims"]),
                    position=tuple(int(v) for v in s["position"]),
                    weight=s["weight"],
                    support_ratio=Fraction(s["support_ratio"]),
                )
                for s in obj["steps"]
            ],
            rewards=[(r["r_lr"], r["r_hd"], r["total"]) for r in obj["rewards"]],
            wall_time=obj.get("wall_time"),
        )
        if verify:
            verify_record(rec)
        return rec


def layout_rewards(boxes: list[Box], L: int, W: int, H_bin: int,
                   alpha1: float, alpha2: float) -> list[tuple[float, float, float]]:
    """Per-step rewards of a placement sequence, whatever produced it."""
    out = []
    vol = H = Hp = 0
    for b in boxes:
        top = b.z + b.h
        nvol = vol + b.volume
        nH, nHp = push_top(H, Hp, top)
        r = step_reward(vol, H, Hp, nvol, nH, nHp, L, W, H_bin, alpha1, alpha2)
        out.append((r.r_lr, r.r_hd, r.total))
        vol, H, Hp = nvol, nH, nHp
    return out


def layout_eta(boxes: list[Box], L: int, W: int) -> float:
    top = max((b.z + b.h for b in boxes), default=0)
    return loading_rate(sum(b.volume for b in boxes), L, W, top)


def build_record(instance: InstanceSpec, result: SolveResult, config: SolverConfig,
                 wall_time: float | None = None) -> SolutionRecord:
    boxes = [b for _, b in result.placements]
    pairs = list(zip(boxes, result.weights))
    audit = audit_layout(pairs, result.params)
    steps = [
        PlacementStep(item, b.dims, b.corner, w, ratio)
        for (item, b), w, ratio in zip(result.placements, result.weights, audit.support_ratios)
    ]
    rewards = layout_rewards(boxes, instance.L, instance.W, instance.H, config.alpha1, config.alpha2)
    return SolutionRecord(instance, config, result.params, result.eta, steps, rewards, wall_time)


def verify_record(rec: SolutionRecord) -> None:
    """Re-derive everything checkable in a record; raise VerificationError on mismatch."""
    inst = rec.instance
    bin_box = Box(0, 0, 0, inst.L, inst.W, inst.H)
    boxes = rec.boxes
    used = [0] * len(inst.item_types)
    for i, s in enumerate(rec.steps):
        if not 0 <= s.item < len(inst.item_types):
            raise VerificationError(f"step {i}: unknown item type {s.item}")
        t = inst.item_types[s.item]
        if tuple(s.dims) not in orientations(t.dims):
            raise VerificationError(f"step {i}: dims {s.dims} are not a rotation of {t.dims}")
        if s.weight != t.weight:
            raise VerificationError(f"step {i}: weight {s.weight} differs from item weight {t.weight}")
        used[s.item] += 1
        if used[s.item] > t.remaining:
            raise VerificationError(f"step {i}: more copies of item {s.item} than available")
        if not contains(bin_box, s.box):
            raise VerificationError(f"step {i}: {s.box} sticks out of the bin")
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if overlaps(boxes[i], boxes[j]):
                raise VerificationError(f"steps {i} and {j} overlap")

    audit = audit_layout([(s.box, s.weight) for s in rec.steps], rec.params)
    if audit.violations:
        raise VerificationError(
            f"stability violations: support at {audit.support_violations}, "
            f"weight at {audit.weight_violations}"
        )
    for i, (s, ratio) in enumerate(zip(rec.steps, audit.support_ratios)):
        if s.support_ratio != ratio:
            raise VerificationError(f"step {i}: recorded support ratio {s.support_ratio} != {ratio}")

    eta = layout_eta(boxes, inst.L, inst.W)
    if abs(eta - rec.eta) > ETA_TOL:
        raise VerificationError(f"recorded eta {rec.eta!r} != recomputed {eta!r}")

    expected = layout_rewards(boxes, inst.L, inst.W, inst.H, rec.solver.alpha1, rec.solver.alpha2)
    if len(expected) != len(rec.rewards):
        raise VerificationError("reward count does not match step count")
    for i, (a, b) in enumerate(zip(expected, rec.rewards)):
        if any(abs(x - y) > ETA_TOL for x, y in zip(a, b)):
            raise VerificationError(f"step {i}: recorded reward {b} != recomputed {a}")
    if boxes and abs(math.fsum(r[0] for r in rec.rewards) - eta) > ETA_TOL:
        raise VerificationError("loading-rate rewards do not telescope to eta")

    if rec.solver.name in ENV_SOLVERS:
        replay_through_env(rec)


def replay_through_env(rec: SolutionRecord) -> None:
    """Check every step is a valid action placed where the MDP would put it."""
    state = reset_instance(rec.instance, rec.params)
    for i, s in enumerate(rec.steps):
        try:
            nxt = advance(state, PlacementAction(s.item, tuple(s.dims)))
        except ContractViolation as exc:
            raise VerificationError(f"step {i}: {exc}") from None
        if nxt.placements[-1].box != s.box:
            raise VerificationError(f"step {i}: MDP places {nxt.placements[-1].box}, record says {s.box}")
        state = nxt
    if not state.done:
        raise VerificationError("episode stops while valid actions remain")


def layout_document(records: list[SolutionRecord]) -> dict:
    return {"schema": LAYOUT_SCHEMA, "solutions": [r.to_json() for r in records]}


def records_from_layout(doc: dict) -> list[SolutionRecord]:
    check_schema(doc, "layout")
    return [SolutionRecord.from_json(obj) for obj in doc["solutions"]]


_CUBE_FACES = ((1, 2, 3, 4), (5, 8, 7, 6), (1, 5, 6, 2), (2, 6, 7, 3), (3, 7, 8, 4), (5, 1, 4, 8))


def wavefront_obj(records: list[SolutionRecord]) -> str:
    """One ``o`` object (8 vertices, 6 quads) per placed cuboid."""
    lines = [f"# {LAYOUT_SCHEMA}"]
    base = 0
    for r_idx, rec in enumerate(records):
        for s_idx, b in enumerate(rec.boxes):
            lines.append(f"o solution{r_idx}_step{s_idx}_item{rec.steps[s_idx].item}")
            x0, y0, z0 = b.x, b.y, b.z
            x1, y1, z1 = b.x + b.l, b.y + b.w, b.z + b.h
            for v in ((x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
                      (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)):
                lines.append("v %d %d %d" % v)
            for f in _CUBE_FACES:
                lines.append("f " + " ".join(str(base + i) for i in f))
            base += 8
    return "\n".join(lines) + "\n"
