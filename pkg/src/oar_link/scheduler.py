"""Bandwidth-constrained choice of which semantic streams to send."""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

# mask component order follows priority: object, relation, attribute
LEVEL_MASKS = {1: (True, False, False), 2: (True, True, False), 3: (True, True, True)}
DEFAULT_POLICY = ((-math.inf, 960), (4.0, 1920), (8.0, 2880))


class SchedulerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StreamProfile:
    u_obj: float = 10.0
    u_rel: float = 3.0
    u_attr: float = 2.0
    r_obj: int = 960
    r_rel: int = 960
    r_attr: int = 960

    def __post_init__(self):
        if not self.u_obj > self.u_rel > self.u_attr > 0:
            raise SchedulerConfigError("utilities must satisfy u_obj > u_rel > u_attr > 0")
        if min(self.r_obj, self.r_rel, self.r_attr) <= 0:
            raise SchedulerConfigError("stream rates must be positive")

    @property
    def utilities(self) -> tuple[float, float, float]:
        return self.u_obj, self.u_rel, self.u_attr

    @property
    def rates(self) -> tuple[int, int, int]:
        return self.r_obj, self.r_rel, self.r_attr


@dataclass(frozen=True)
class TransmissionMask:
    m_obj: bool = True
    m_rel: bool = False
    m_attr: bool = False
    over_budget: bool = False
    # smallest multiplier making this mask optimal for the relaxed objective;
    # None when no multiplier supports it
    lagrange: float | None = None

    def __post_init__(self):
        if not self.m_obj:
            raise ValueError("the object stream is always scheduled")

    @property
    def bits(self) -> tuple[bool, bool, bool]:
        return self.m_obj, self.m_rel, self.m_attr

    def symbols(self, profile: StreamProfile) -> int:
        return sum(r for m, r in zip(self.bits, profile.rates) if m)

    def utility(self, profile: StreamProfile) -> float:
        return sum(u for m, u in zip(self.bits, profile.utilities) if m)

    def streams(self) -> tuple[str, ...]:
        # stream names in codec order
        return tuple(s for s, m in (("obj", self.m_obj), ("attr", self.m_attr), ("rel", self.m_rel)) if m)

    @classmethod
    def for_level(cls, level: int) -> "TransmissionMask":
        return cls(*LEVEL_MASKS[level])


def _value(bits, vec):
    return sum(x for m, x in zip(bits, vec) if m)


def _priority_key(bits):
    # lower levels first: fewer high-priority gaps
    return tuple(not b for b in bits)


def _lagrange(best, candidates, profile) -> float | None:
    u_star, r_star = _value(best, profile.utilities), _value(best, profile.rates)
    lo, hi = 0.0, math.inf
    for bits in candidates:
        u, r = _value(bits, profile.utilities), _value(bits, profile.rates)
        if r > r_star:
            lo = max(lo, (u - u_star) / (r - r_star))
        elif r < r_star:
            hi = min(hi, (u_star - u) / (r_star - r))
        elif u > u_star:
            return None
    return lo if lo <= hi else None


def optimize_mask(profile: StreamProfile, budget: float) -> TransmissionMask:
    """Exhaustive search of the eight stream masks for maximum utility within ``budget``.

    Masks without the object stream are never admissible. Ties go to fewer
    symbols, then to the lower level. Below the object-stream rate the object
    stream is still sent and the result is flagged over budget.
    """
    if budget < 0:
        raise SchedulerConfigError("budget must be >= 0")
    masks = [bits for bits in itertools.product((True, False), repeat=3) if bits[0]]
    if budget < profile.r_obj:
        return TransmissionMask(True, False, False, over_budget=True, lagrange=None)
    feasible = [b for b in masks if _value(b, profile.rates) <= budget]
    best = min(feasible, key=lambda b: (-_value(b, profile.utilities),
                                        _value(b, profile.rates), _priority_key(b)))
    return TransmissionMask(*best, over_budget=False, lagrange=_lagrange(best, masks, profile))


def mask_to_level(mask: TransmissionMask | Sequence[bool]) -> int | str:
    bits = mask.bits if isinstance(mask, TransmissionMask) else tuple(bool(b) for b in mask)
    for level, lm in LEVEL_MASKS.items():
        if bits == lm:
            return level
    return "nonstandard"


def validate_policy(policy: Sequence[tuple[float, int]]) -> tuple[tuple[float, int], ...]:
    if not policy:
        raise SchedulerConfigError("CSI policy is empty")
    out = tuple((float(t), int(b)) for t, b in policy)
    thresholds = [t for t, _ in out]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise SchedulerConfigError("CSI policy thresholds must be strictly increasing")
    if any(b < 0 for _, b in out):
        raise SchedulerConfigError("CSI policy budgets must be >= 0")
    return out


def csi_to_budget(snr_db: float, policy: Sequence[tuple[float, int]] = DEFAULT_POLICY) -> int:
    """Piecewise-constant budget lookup on lower-inclusive SNR intervals.

    SNR below the first threshold maps to the first budget.
    """
    policy = validate_policy(policy)
    thresholds = [t for t, _ in policy]
    idx = bisect.bisect_right(thresholds, snr_db) - 1
    return policy[max(idx, 0)][1]
