"""Counter-based uniform draws.

Every uniform used by a simulation is a pure function of
``(master_seed, trial, slot, stream)``: trials are independent and can run in
any order or on any worker without shared generator state. Stream 0 of each
slot is the arrival draw, streams 1 and 2 are the policy draws, and stream 3
of slot 0 is the single pre-horizon draw (lottery policies).
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
ARRIVAL = 0
PRE_HORIZON = 3

_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _MUL1) & MASK64
    x = ((x ^ (x >> 27)) * _MUL2) & MASK64
    return x ^ (x >> 31)


def seed_key(seed: int) -> int:
    return splitmix64(seed & MASK64)


def trial_key(seed: int, trial: int) -> int:
    return splitmix64(seed_key(seed) ^ (trial & MASK64))


def uniform(seed: int, trial: int, slot: int, stream: int) -> float:
    """Uniform in [0, 1) with 53 random bits."""
    h = splitmix64(trial_key(seed, trial) ^ ((slot << 2) | stream))
    return (h >> 11) * 2.0**-53


@njit(cache=True, inline="always")
def _mix(x):
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MUL1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MUL2)
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def jit_trial_key(seed_k, trial):
    return _mix(seed_k ^ np.uint64(trial))


@njit(cache=True, inline="always")
def jit_uniform(trial_k, slot, stream):
    h = _mix(trial_k ^ ((np.uint64(slot) << np.uint64(2)) | np.uint64(stream)))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)
