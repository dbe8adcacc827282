"""Entropy-control arithmetic for policy-gradient training on packing episodes.

Everything here operates on recorded probability vectors, so an external
learner can dump its decisions and audit them with these functions.

* ``entropy`` and ``logp_advantage_covariance`` give the first-order entropy
  change of a softmax policy: moving the logits by ``beta * A`` changes the
  entropy by ``-beta * Cov_{a~pi}(log pi(a), A(a))`` to first order.
* ``clipped_ratios`` zeroes the importance ratio of a small share of the
  high-covariance decisions so they receive no gradient.
* ``drift_adjusted_objective`` penalises the log-ratio drift at first-step
  decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidRecordError

PROB_TOL = 1e-9


def _as_distribution(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInputError("a distribution must be a non-empty 1-D sequence")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidInputError("probabilities must be finite and non-negative")
    if abs(math.fsum(p.tolist()) - 1.0) > PROB_TOL:
        raise InvalidInputError(f"probabilities sum to {p.sum()!r}, expected 1")
    return p


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def entropy(probs) -> float:
    """Shannon entropy in nats, with ``0 * ln 0 = 0``."""
    p = _as_distribution(probs)
    nz = p[p > 0]
    return float(-math.fsum((nz * np.log(nz)).tolist()))


def logp_advantage_covariance(probs, advantages) -> float:
    """Covariance of ``(ln pi(a), A(a))`` under ``a ~ pi``.

    Zero-probability actions carry no mass and are left out.
    """
    p = _as_distribution(probs)
    adv = np.asarray(advantages, dtype=np.float64)
    if adv.shape != p.shape:
        raise InvalidInputError(f"length mismatch: {p.size} probabilities vs {adv.size} advantages")
    mask = p > 0
    p, adv = p[mask], adv[mask]
    logp = np.log(p)
    mu = math.fsum((p * logp).tolist())
    nu = math.fsum((p * adv).tolist())
    return math.fsum((p * (logp - mu) * (adv - nu)).tolist())


def entropy_delta_estimate(probs, advantages, beta: float) -> float:
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta!r}")
    return -beta * logp_advantage_covariance(probs, advantages)


@dataclass
class DecisionRecord:
    """One sampled decision: old and new policies over the same action set.

    ``advantage`` is the advantage of the chosen action.  When the learner
    also knows the advantage of every action, ``action_advantages`` holds
    them and the node covariance is computed exactly over the action set.
    """

    probs_old: Sequence[float]
    probs_new: Sequence[float]
    action: int
    advantage: float
    is_first_step: bool = False
    action_advantages: Sequence[float] | None = None

    def __post_init__(self):
        old = _as_distribution(self.probs_old)
        new = _as_distribution(self.probs_new)
        if old.shape != new.shape:
            raise InvalidInputError("old and new policies cover different action sets")
        if not 0 <= self.action < old.size:
            raise InvalidInputError(f"action index {self.action} out of range")

    def ratio(self) -> float:
        old = self.probs_old[self.action]
        if old <= 0:
            raise InvalidRecordError("old policy gives the chosen action zero probability")
        return self.probs_new[self.action] / old

    def to_dict(self) -> dict:
        d = {
            "probs_old": list(map(float, self.probs_old)),
            "probs_new": list(map(float, self.probs_new)),
            "action": self.action,
            "advantage": float(self.advantage),
            "is_first_step": self.is_first_step,
        }
        if self.action_advantages is not None:
            d["action_advantages"] = list(map(float, self.action_advantages))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionRecord":
        return cls(
            probs_old=d["probs_old"],
            probs_new=d["probs_new"],
            action=int(d["action"]),
            advantage=float(d["advantage"]),
            is_first_step=bool(d.get("is_first_step", False)),
            action_advantages=d.get("action_advantages"),
        )


def node_covariances(records: Sequence[DecisionRecord]) -> list[float]:
    """Per-decision covariance between log-probability and advantage.

    Records with ``action_advantages`` use the exact covariance over their
    action set.  The others use the sampled estimate
    ``(ln pi_old(a_t) - mean) * (A_t - mean)``, centred over the batch.
    """
    if not records:
        return []
    logps = []
    for r in records:
        p = r.probs_old[r.action]
        if p <= 0:
            raise InvalidRecordError("old policy gives the chosen action zero probability")
        logps.append(math.log(p))
    mean_logp = math.fsum(logps) / len(records)
    mean_adv = math.fsum(r.advantage for r in records) / len(records)
    out = []
    for r, lp in zip(records, logps):
        if r.action_advantages is not None:
            out.append(logp_advantage_covariance(r.probs_old, r.action_advantages))
        else:
            out.append((lp - mean_logp) * (r.advantage - mean_adv))
    return out


def high_covariance_nodes(covs: Sequence[float]) -> list[int]:
    """Indices whose covariance is strictly above the batch median."""
    if not covs:
        return []
    med = float(np.median(covs))
    return [i for i, c in enumerate(covs) if c > med]


def clipped_nodes(records: Sequence[DecisionRecord], phi: float) -> list[int]:
    """Indices of the ``ceil(phi * |high|)`` highest-covariance decisions."""
    if not 0 <= phi <= 1:
        raise InvalidInputError(f"phi must lie in [0, 1], got {phi!r}")
    covs = node_covariances(records)
    high = high_covariance_nodes(covs)
    n = math.ceil(phi * len(high))
    # stable sort keeps record order among equal covariances
    ranked = sorted(high, key=lambda i: -covs[i])
    return sorted(ranked[:n])


def clipped_ratios(records: Sequence[DecisionRecord], phi: float) -> list[float]:
    """Importance ratios with the selected high-covariance decisions set to 0."""
    ratios = [r.ratio() for r in records]
    for i in clipped_nodes(records, phi):
        ratios[i] = 0.0
    return ratios


def drift_penalty(record: DecisionRecord) -> float:
    old = record.probs_old[record.action]
    new = record.probs_new[record.action]
    if old <= 0 or new <= 0:
        raise InvalidRecordError("chosen action has zero probability under one of the policies")
    return abs(math.log(new / old))


def drift_adjusted_objective(J_t: float, record: DecisionRecord, beta: float) -> float:
    penalty = drift_penalty(record)
    if not record.is_first_step:
        return J_t
    return J_t - beta * penalty
