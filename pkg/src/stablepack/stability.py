"""Support and weight constraints.

Support: the summed contact area F between an item's bottom face and the tops
of the items directly beneath it must satisfy ``F >= r_s * f`` where f is the
item's bottom area.  Items on the bin floor are fully supported.

Weight: when an item rests on exactly one item, its weight may not exceed
``r_w`` times the weight of that item.  Items resting on several items are not
constrained.

Ratios are held as :class:`fractions.Fraction` so ``F * den >= num * f`` is an
exact integer comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidInputError
from .geometry import Box, footprint_overlap, horizontal_contact_area

Placed = tuple[Box, float]


def as_fraction(value) -> Fraction:
    """Exact rational for ints, strings, Fractions and (via their repr) floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class StabilityParams:
    r_s: Fraction = Fraction(0)
    r_w: Fraction = Fraction(1)
    support_enabled: bool = False
    weight_enabled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "r_s", as_fraction(self.r_s))
        object.__setattr__(self, "r_w", as_fraction(self.r_w))
        if not 0 <= self.r_s <= 1:
            raise InvalidInputError(f"support ratio must lie in [0, 1], got {self.r_s}")
        if self.r_w <= 0:
            raise InvalidInputError(f"weight ratio must be positive, got {self.r_w}")

    @property
    def any_enabled(self) -> bool:
        return self.support_enabled or self.weight_enabled

    @classmethod
    def unconstrained(cls) -> "StabilityParams":
        return cls()

    @classmethod
    def make(cls, r_s=None, r_w=None) -> "StabilityParams":
        """Enable exactly the constraints whose ratio is given."""
        return cls(
            r_s=Fraction(0) if r_s is None else r_s,
            r_w=Fraction(1) if r_w is None else r_w,
            support_enabled=r_s is not None,
            weight_enabled=r_w is not None,
        )

    def to_dict(self) -> dict:
        return {
            "r_s": str(self.r_s),
            "r_w": str(self.r_w),
            "support_enabled": self.support_enabled,
            "weight_enabled": self.weight_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityParams":
        return cls(
            r_s=Fraction(d["r_s"]),
            r_w=Fraction(d["r_w"]),
            support_enabled=bool(d["support_enabled"]),
            weight_enabled=bool(d["weight_enabled"]),
        )


def support_area(candidate: Box, placements: Iterable[Placed]) -> int:
    return sum(horizontal_contact_area(candidate, b) for b, _ in placements)


def support_ratio(candidate: Box, placements: Iterable[Placed]) -> Fraction:
    if candidate.z == 0:
        return Fraction(1)
    return Fraction(support_area(candidate, placements), candidate.l * candidate.w)


def meets_support(area: int, base: int, r_s: Fraction) -> bool:
    return area * r_s.denominator >= r_s.numerator * base


def weight_ok(weight, supporter_weight, r_w: Fraction) -> bool:
    # G_j <= r_w * G_i, cross-multiplied to stay exact for integer weights
    return weight * r_w.denominator <= r_w.numerator * supporter_weight


def check_weight(candidate: Placed, placements: Iterable[Placed], r_w=3) -> bool:
    box, weight = candidate
    supporters = [w for b, w in placements if horizontal_contact_area(box, b) > 0]
    if len(supporters) != 1:
        return True
    return weight_ok(weight, supporters[0], as_fraction(r_w))


def is_stable_placement(candidate: Placed, placements: Sequence[Placed],
                        params: StabilityParams) -> bool:
    box, _ = candidate
    if params.support_enabled and box.z > 0:
        if not meets_support(support_area(box, placements), box.l * box.w, params.r_s):
            return False
    if params.weight_enabled and box.z > 0:
        if not check_weight(candidate, placements, params.r_w):
            return False
    return True


def is_stable_space(space: Box, placements: Iterable[Placed]) -> bool:
    """True if the space's floor is the bin floor or touches some item top."""
    if space.z == 0:
        return True
    for b, _ in placements:
        if b.z + b.h == space.z and footprint_overlap(space, b) > 0:
            return True
    return False


@dataclass
class StabilityAudit:
    """Post-hoc check of a finished layout against a set of constraints."""

    support_violations: list[int] = field(default_factory=list)
    weight_violations: list[int] = field(default_factory=list)
    support_ratios: list[Fraction] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.support_violations) + len(self.weight_violations)


def audit_layout(placements: Sequence[Placed], params: StabilityParams) -> StabilityAudit:
    """Re-check every placement against the items placed before it.

    Support ratios are always recorded; violations only for enabled constraints.
    """
    audit = StabilityAudit()
    for i, (box, weight) in enumerate(placements):
        earlier = placements[:i]
        ratio = support_ratio(box, earlier)
        audit.support_ratios.append(ratio)
        if params.support_enabled and box.z > 0 and ratio < params.r_s:
            audit.support_violations.append(i)
        if params.weight_enabled and not check_weight((box, weight), earlier, params.r_w):
            audit.weight_violations.append(i)
    return audit
