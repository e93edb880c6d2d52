"""Closed-form fairness guarantees as functions of the priority-weighted load."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..model import Instance, load_summary


@dataclass(frozen=True)
class BoundSet:
    r_beta: float
    horizon: int
    general: float
    stationary_exact: float
    stationary_floor: float


def general_bound(r: float) -> float:
    """Best guarantee for arbitrary time-varying arrivals, ``1/(1+r)``."""
    return 1.0 / (1.0 + r)


def stationary_exact(r: float, horizon: int) -> float:
    """``(1 - (1 - r/T)^T) / r``, equal to 1 at ``r = 0``.

    Evaluated through ``expm1``/``log1p`` so large horizons keep full precision.
    """
    if r == 0:
        return 1.0
    x = r / horizon
    if x < 1:
        return -math.expm1(horizon * math.log1p(-x)) / r
    return (1.0 - (1.0 - x) ** horizon) / r


def stationary_floor(r: float) -> float:
    """Horizon-free lower bound ``(1 - e^{-r}) / r``, equal to 1 at ``r = 0``."""
    if r == 0:
        return 1.0
    return -math.expm1(-r) / r


def capped_growth(x: float, horizon: int) -> float:
    """``g(x) = 1 - (1 - x/T)^T``; the probability of at least one hit in T slots of rate x/T."""
    return 1.0 - (1.0 - x / horizon) ** horizon


def bounds_for(r_beta: float, horizon: int) -> BoundSet:
    r = float(r_beta)
    return BoundSet(r, horizon, general_bound(r), stationary_exact(r, horizon), stationary_floor(r))


def bounds(instance: Instance) -> BoundSet:
    return bounds_for(load_summary(instance).r_beta, instance.horizon)
