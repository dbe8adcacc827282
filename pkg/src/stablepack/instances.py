"""Seeded instance generation.

Scheme tags have the form ``<bin>_<count>``:

* bin ``S1`` is a 100 x 100 footprint, ``S2`` is 300 x 200, ``B1``/``B2``/``B3``
  are the fixed benchmark bins, ``M`` and ``BM`` draw every bin dimension
  uniformly from [100, 450].
* count is either a fixed number of items (``S1_30``) or ``M``, meaning item
  types are appended until their total volume exceeds ``r_volume`` times the
  nominal bin volume, with ``r_volume ~ U[0.8, 1.2]``.

``CASE`` produces seven item types with explicit weights on a 100 x 100 bin.

The final bin height is always large enough to stack every item on its
longest side, so every instance is feasible.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field

from .env import ItemType
from .errors import InvalidInputError
from .stability import StabilityParams

DIM_RANGE = (100, 450)
QUANTITY_RANGE = (1, 10)
R_VOLUME_RANGE = (0.8, 1.2)
CASE_TYPES = 7
CASE_WEIGHT_RANGE = (1, 100)

# (L, W, nominal H); footprints are stored with L >= W
FIXED_BINS = {
    "S1": (100, 100, 100),
    "S2": (300, 200, 200),
    "B1": (230, 150, 180),
    "B2": (176, 153, 203),
    "B3": (298, 103, 159),
}
RANDOM_BINS = ("M", "BM")

_SCHEME_RE = re.compile(r"^(S1|S2|B1|B2|B3|M|BM)_(\d+|M)$")


@dataclass(frozen=True)
class InstanceSpec:
    L: int
    W: int
    H: int
    item_types: tuple[ItemType, ...]
    params: StabilityParams = field(default_factory=StabilityParams)
    seed: int | None = None
    scheme: str = "custom"
    nominal_H: int | None = None
    r_volume: float | None = None

    @property
    def n_items(self) -> int:
        return sum(t.remaining for t in self.item_types)

    @property
    def total_volume(self) -> int:
        return sum(t.volume * t.remaining for t in self.item_types)

    def expanded_items(self) -> list[tuple[int, ItemType]]:
        """One ``(type index, type)`` pair per physical item."""
        return [(i, t) for i, t in enumerate(self.item_types) for _ in range(t.remaining)]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "bin": [self.L, self.W, self.H],
            "nominal_H": self.nominal_H,
            "r_volume": self.r_volume,
            "params": self.params.to_dict(),
            "items": [
                {"l": t.l, "w": t.w, "h": t.h, "quantity": t.remaining, "weight": t.weight}
                for t in self.item_types
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceSpec":
        L, W, H = (int(v) for v in d["bin"])
        types = tuple(
            ItemType(int(it["l"]), int(it["w"]), int(it["h"]), it["weight"], int(it["quantity"]))
            for it in d["items"]
        )
        return cls(
            L=L, W=W, H=H,
            item_types=types,
            params=StabilityParams.from_dict(d["params"]) if d.get("params") else StabilityParams(),
            seed=d.get("seed"),
            scheme=d.get("scheme", "custom"),
            nominal_H=d.get("nominal_H"),
            r_volume=d.get("r_volume"),
        )


def parse_scheme(scheme: str) -> tuple[str, int | None]:
    """Split a scheme tag into ``(bin tag, item count or None)``."""
    if scheme == "CASE":
        return "CASE", None
    m = _SCHEME_RE.match(scheme)
    if m is None:
        raise InvalidInputError(f"unknown scheme {scheme!r}")
    count = None if m.group(2) == "M" else int(m.group(2))
    if count is not None and count < 1:
        raise InvalidInputError(f"scheme {scheme!r} asks for no items")
    return m.group(1), count


def item_bounds(L: int) -> tuple[int, int]:
    """Integer range for item length/width: ``[0.05 L, 0.4 L]``."""
    lo = max(1, L * 5 // 100)
    hi = max(lo, L * 4 // 10)
    return lo, hi


def sample_item_dims(rng: random.Random, L: int) -> tuple[int, int, int]:
    lo, hi = item_bounds(L)
    l = rng.randint(lo, hi)
    w = rng.randint(lo, hi)
    h_lo = max(-(-l // 10), lo)  # h >= 0.1 l, never flatter than the floor bound
    h = rng.randint(h_lo, hi)
    return l, w, h


def _bin_for(tag: str, rng: random.Random) -> tuple[int, int, int]:
    if tag in FIXED_BINS:
        return FIXED_BINS[tag]
    dims = sorted((rng.randint(*DIM_RANGE) for _ in range(3)), reverse=True)
    return dims[0], dims[1], dims[2]


def generate_instance(scheme: str, seed: int) -> InstanceSpec:
    tag, count = parse_scheme(scheme)
    rng = random.Random(seed)
    if tag == "CASE":
        return _case_instance(rng, seed)
    L, W, H_nom = _bin_for(tag, rng)
    # item bounds scale with the longest bin side (L itself for sampled bins)
    size_ref = max(L, W, H_nom)

    types: list[ItemType] = []
    r_volume = None
    if count is not None:
        n = 0
        while n < count:
            l, w, h = sample_item_dims(rng, size_ref)
            q = min(rng.randint(*QUANTITY_RANGE), count - n)
            types.append(ItemType(l, w, h, l * w * h, q))
            n += q
    else:
        r_volume = rng.uniform(*R_VOLUME_RANGE)
        target = r_volume * L * W * H_nom
        vol = 0
        while vol <= target:
            l, w, h = sample_item_dims(rng, size_ref)
            q = rng.randint(*QUANTITY_RANGE)
            types.append(ItemType(l, w, h, l * w * h, q))
            vol += l * w * h * q

    H = sum(max(t.dims) * t.remaining for t in types)
    return InstanceSpec(L=L, W=W, H=H, item_types=tuple(types), seed=seed, scheme=scheme,
                        nominal_H=H_nom, r_volume=r_volume)


def _case_instance(rng: random.Random, seed: int) -> InstanceSpec:
    L, W = 100, 100
    types = []
    for _ in range(CASE_TYPES):
        l, w, h = sample_item_dims(rng, L)
        q = rng.randint(*QUANTITY_RANGE)
        types.append(ItemType(l, w, h, rng.randint(*CASE_WEIGHT_RANGE), q))
    n = sum(t.remaining for t in types)
    # tallest item on its longest side, times the number of items
    H = max(max(t.dims) for t in types) * n
    return InstanceSpec(L=L, W=W, H=H, item_types=tuple(types), seed=seed, scheme="CASE",
                        nominal_H=H)


def derive_seed(master_seed: int, scheme: str, index: int) -> int:
    digest = hashlib.sha256(f"{scheme}/{master_seed}/{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def generate_set(scheme: str, count: int, master_seed: int) -> list[InstanceSpec]:
    if count < 1:
        raise InvalidInputError(f"count must be at least 1, got {count}")
    parse_scheme(scheme)
    return [generate_instance(scheme, derive_seed(master_seed, scheme, i)) for i in range(count)]
