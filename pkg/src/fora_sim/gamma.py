"""Forward dynamic program over the residual-budget distribution.

For the unit-priority threshold policy, ``gamma[t, j-1] = E[min(B_t / j, 1)]``
where ``B_t`` is the budget left at the start of slot ``t`` when the policy
itself is run. Each slot's distribution is pushed forward with three terms:
an accepted request of size ``k - k'`` moves the budget from ``k`` down to
``k'``; a rejected request or an empty slot leaves it unchanged; everything
else (requests that exhaust the budget) lands on ``B = 0`` as the residual.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Instance, load_summary


class NonUnitPriorities(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GammaTable:
    """Budget distributions and gamma values, 0-based in ``t``.

    ``budget_dist[t, b]`` is ``P(B_t = b)``; ``gamma[t, j-1]`` and
    ``accept[t, j-1]`` (the clamped acceptance probability
    ``1/((1+R) gamma)``) are indexed by demand. Arrays hold floats, or
    Fractions (object dtype) when built with ``exact=True``.
    """

    budget_dist: np.ndarray
    gamma: np.ndarray
    accept: np.ndarray
    load_used: float | Fraction
    exact: bool = False

    @property
    def horizon(self) -> int:
        return self.gamma.shape[0]

    @property
    def capacity(self) -> int:
        return self.gamma.shape[1]


def expected_budget(table: GammaTable, t: int):
    """``E[B_t] = sum_b b * P(B_t = b)``."""
    row = table.budget_dist[t]
    return sum((b * row[b] for b in range(len(row))), row[0] * 0)


def compute_gamma(instance: Instance, *, exact: bool = False) -> GammaTable:
    """Gamma table for an instance with unit priorities (pass ``instance.virtual()`` otherwise).

    Results are cached per (instance, exact); the returned arrays are read-only.
    """
    if not instance.unit_priorities:
        raise NonUnitPriorities(
            "gamma recursion needs unit priorities; use the screened virtual instance"
        )
    return _compute_cached(instance, exact)


@functools.lru_cache(maxsize=64)
def _compute_cached(instance: Instance, exact: bool) -> GammaTable:
    table = _gamma_exact(instance) if exact else _gamma_float(instance)
    for arr in (table.budget_dist, table.gamma, table.accept):
        arr.setflags(write=False)
    return table


def _accept_prob(load, gamma):
    q = 1 / ((1 + load) * gamma)
    return min(q, type(q)(1))


def _gamma_float(instance: Instance) -> GammaTable:
    K, T = instance.capacity, instance.horizon
    load = float(load_summary(instance).r_unit)
    mass = instance.dense.sum(axis=1)  # (T, K) total arrival mass per demand size
    levels = np.arange(K + 1)
    demands = np.arange(1, K + 1)

    dist = np.zeros((T, K + 1))
    gamma = np.zeros((T, K))
    accept = np.zeros((T, K))
    dist[0, K] = 1.0
    gamma[0, :] = 1.0
    for t in range(T):
        accept[t] = np.minimum(1.0 / ((1.0 + load) * gamma[t]), 1.0)
        if t == T - 1:
            break
        taken = mass[t] * accept[t]  # taken[g-1]: accepted request of size g
        stay = float(np.sum((1.0 - accept[t]) * mass[t])) + max(0.0, 1.0 - float(mass[t].sum()))
        # moves[k'] = sum_g dist[k'+g] * taken[g-1], a direct O(K^2) convolution
        conv = np.convolve(dist[t, ::-1], taken)
        nxt = dist[t] * stay
        nxt[:K] += conv[K - 1::-1]
        nxt[0] = max(0.0, 1.0 - float(nxt[1:].sum()))
        dist[t + 1] = nxt
        # gamma_j = P(B >= j) + sum_{k<j} (k/j) P(B = k)
        tail = np.cumsum(nxt[::-1])[::-1][1:]
        below = np.cumsum(levels * nxt)[:-1]
        gamma[t + 1] = tail + below / demands
    return GammaTable(dist, gamma, accept, load, exact=False)


def _gamma_exact(instance: Instance) -> GammaTable:
    K, T = instance.capacity, instance.horizon
    load = load_summary(instance, exact=True).r_unit
    zero, one = Fraction(0), Fraction(1)

    dist = [[zero] * (K + 1) for _ in range(T)]
    gamma = [[one] * K for _ in range(T)]
    accept = [[one] * K for _ in range(T)]
    dist[0][K] = one
    for t in range(T):
        accept[t] = [_accept_prob(load, g) for g in gamma[t]]
        if t == T - 1:
            break
        mass = [zero] * (K + 1)
        for _, j, p in instance.slot_entries(t):
            mass[j] += p
        total = sum(mass, zero)
        stay = sum(((1 - accept[t][j - 1]) * mass[j] for j in range(1, K + 1)), zero)
        stay += max(zero, 1 - total)
        prev = dist[t]
        nxt = [zero] * (K + 1)
        for k2 in range(1, K + 1):
            acc = zero
            for k in range(k2 + 1, K + 1):
                g = k - k2
                acc += prev[k] * mass[g] * accept[t][g - 1]
            nxt[k2] = acc + prev[k2] * stay
        nxt[0] = max(zero, 1 - sum(nxt[1:], zero))
        dist[t + 1] = nxt
        gamma[t + 1] = [
            sum((nxt[k] for k in range(j, K + 1)), zero)
            + sum((Fraction(k, j) * nxt[k] for k in range(j)), zero)
            for j in range(1, K + 1)
        ]
    obj = lambda rows: np.array(rows, dtype=object)  # noqa: E731
    return GammaTable(obj(dist), obj(gamma), obj(accept), load, exact=True)
