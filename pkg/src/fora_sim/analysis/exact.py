"""Exact expectations by full traversal of the outcome tree.

Every slot has finitely many arrival outcomes and every policy declares the
breakpoints of its uniform draws, so the tree of (arrival, draw-cell) choices
is finite. States reached with identical sufficient statistics (the policy
state, plus realized allocation/demand tallies when fill rates are requested)
are merged, turning the tree into one layer per slot.

Float mode accumulates with :func:`math.fsum`; ``exact=True`` runs the
whole traversal in :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from ..model import ArrivalEvent, Instance, expected_demand
from ..policies import Policy, make_policy

DEFAULT_STATE_LIMIT = 10**7


class StateSpaceExceeded(RuntimeError):
    def __init__(self, projected: int, limit: int):
        self.projected = projected
        self.limit = limit
        super().__init__(f"projected {projected} transitions exceeds the state limit {limit}")


@dataclass(frozen=True)
class ExactReport:
    policy: str
    exact: bool
    expected_alloc: tuple
    expected_demand: tuple
    priorities: tuple
    conditional: dict
    budget_dist: tuple
    unit_alloc: tuple | None
    fill_rate: tuple | None
    leaf_mass: Any
    max_layer: int
    transitions: int
    leaves: int

    @property
    def fe_fr_beta(self) -> tuple:
        """Per-group ``E[A_i] / (beta_i E[D_i])``; None where expected demand is zero."""
        return tuple(
            a / (b * d) if d > 0 else None
            for a, b, d in zip(self.expected_alloc, self.priorities, self.expected_demand)
        )

    @property
    def min_fe_fr_beta(self):
        vals = [v for v in self.fe_fr_beta if v is not None]
        return min(vals) if vals else None


class _Acc:
    def __init__(self, exact: bool):
        self.exact = exact
        self.parts: defaultdict[Any, list] = defaultdict(list)

    def add(self, key, value) -> None:
        self.parts[key].append(value)

    def resolve(self) -> dict:
        if self.exact:
            return {k: sum(v, Fraction(0)) for k, v in self.parts.items()}
        return {k: math.fsum(v) for k, v in self.parts.items()}


def _cells(coords: tuple[tuple, ...], num) -> list[tuple[Any, tuple]]:
    """Product of per-draw intervals as ``(probability, midpoint draws)``."""
    per_axis = []
    zero, one = num(0), num(1)
    for bps in coords:
        edges = [zero, *sorted(num(b) for b in bps), one]
        per_axis.append([(hi - lo, (lo + hi) / 2) for lo, hi in zip(edges, edges[1:]) if hi > lo])
    out = []
    for combo in itertools.product(*per_axis):
        w = one
        for width, _ in combo:
            w *= width
        out.append((w, tuple(mid for _, mid in combo)))
    return out


def _projection(instance: Instance, policy: Policy, fill_rate: bool) -> int:
    T, K, N = instance.horizon, instance.capacity, instance.groups
    states = policy.state_bound()
    if fill_rate:
        dmax = [0] * N
        for t in range(T):
            best: dict[int, int] = {}
            for i, j, _ in instance.slot_entries(t):
                best[i] = max(best.get(i, 0), j)
            for i, j in best.items():
                dmax[i] += j
        for i in range(N):
            states *= (K + 1) * (dmax[i] + 1)
    pre = policy.pre_breakpoints()
    tree = len(pre) + 1 if pre is not None else 1
    cells = policy.cell_bound()
    total = 0
    for t in range(T):
        fan = len(instance.slot_entries(t)) * cells + 1
        total += min(states, tree) * fan
        tree *= fan
    return total


def exact_evaluate(instance: Instance, policy: Policy | str, state_limit: int = DEFAULT_STATE_LIMIT,
                   *, exact: bool = False, fill_rate: bool = False,
                   deny=()) -> ExactReport:
    """Exact per-group expectations of ``policy`` on ``instance``.

    ``policy`` may be a name, in which case it is built in the requested
    arithmetic. Raises :class:`StateSpaceExceeded` when the projected number
    of transitions is above ``state_limit``.
    """
    if isinstance(policy, str):
        policy = make_policy(policy, instance, exact=exact, deny=deny)
    elif policy.exact != exact:
        raise ValueError("policy arithmetic does not match the requested mode")
    projected = _projection(instance, policy, fill_rate)
    if projected > state_limit:
        raise StateSpaceExceeded(projected, state_limit)

    num = Fraction if exact else float
    T, K, N = instance.horizon, instance.capacity, instance.groups
    zero = num(0)

    pre = policy.pre_breakpoints()
    empty = (0,) * (2 * N) if fill_rate else ()
    start = _Acc(exact)
    if pre is None:
        start.add((policy.start(), empty), num(1))
    else:
        for w, (mid,) in _cells((pre,), num):
            start.add((policy.start(mid), empty), w)
    layer = start.resolve()

    alloc = _Acc(exact)
    cond = _Acc(exact)
    units = _Acc(exact)
    budget_rows = []
    transitions = 0
    max_layer = len(layer)

    def budget_row(lay):
        acc = _Acc(exact)
        for (state, _), ps in lay.items():
            acc.add(state.budget, ps)
        got = acc.resolve()
        return tuple(got.get(b, zero) for b in range(K + 1))

    for t in range(T):
        budget_rows.append(budget_row(layer))
        events = instance.slot_entries(t)
        none = num(instance.no_arrival(t))
        nxt = _Acc(exact)
        for key, ps in layer.items():
            state, tallies = key
            if none > 0:
                nxt.add(key, ps * none)
            for i, j, p in events:
                ev = ArrivalEvent(t, i, j)
                pe = ps * num(p)
                for w, draws in _cells(policy.breakpoints(state, ev), num):
                    d = policy.decide(state, ev, draws)
                    mass = pe * w
                    transitions += 1
                    if d.allocation:
                        alloc.add(i, mass * d.allocation)
                        cond.add((t, i, j), ps * w * d.allocation)
                        for u in d.audit.get("units", ()):
                            units.add((i, u - 1), mass)
                    else:
                        cond.add((t, i, j), zero)
                    if fill_rate:
                        tl = list(tallies)
                        tl[i] += d.allocation
                        tl[N + i] += j
                        nkey = (d.state, tuple(tl))
                    else:
                        nkey = (d.state, tallies)
                    nxt.add(nkey, mass)
        layer = nxt.resolve()
        max_layer = max(max_layer, len(layer))
    budget_rows.append(budget_row(layer))

    got_alloc = alloc.resolve()
    expected_alloc = tuple(got_alloc.get(i, zero) for i in range(N))
    leaf = _Acc(exact)
    for ps in layer.values():
        leaf.add(0, ps)
    leaf_mass = leaf.resolve().get(0, zero)

    unit_alloc = None
    if policy.tracks_units:
        got = units.resolve()
        unit_alloc = tuple(tuple(got.get((i, u), zero) for u in range(K)) for i in range(N))

    fill = None
    if fill_rate:
        acc = _Acc(exact)
        for (_, tl), ps in layer.items():
            for i in range(N):
                a, dem = tl[i], tl[N + i]
                acc.add(i, ps * (num(a) / dem if dem > 0 else num(1)))
        got = acc.resolve()
        fill = tuple(got.get(i, zero) for i in range(N))

    return ExactReport(
        policy=policy.name,
        exact=exact,
        expected_alloc=expected_alloc,
        expected_demand=tuple(expected_demand(instance, exact=exact)),
        priorities=tuple(num(b) for b in instance.priorities),
        conditional=cond.resolve(),
        budget_dist=tuple(budget_rows),
        unit_alloc=unit_alloc,
        fill_rate=fill,
        leaf_mass=leaf_mass,
        max_layer=max_layer,
        transitions=transitions,
        leaves=len(layer),
    )
