"""Online allocation policies behind one interface.

A policy is built once per instance and is stateless itself; the evolving
residual budget (and free-unit set for the cyclic-block policies) lives in an
immutable :class:`PolicyState`. ``decide`` is a pure function of
``(state, event, draws)`` and returns the allocation together with the next
state, so the same code path serves Monte Carlo trials and exact enumeration.

Per-arrival draw budget (uniforms in [0, 1)):

==================  =====  ==================================
policy              draws  meaning
==================  =====  ==================================
threshold-unit      1      acceptance coin
threshold-weighted  2      screening coin, acceptance coin
rcb                 1      start index ``1 + floor(u * K)``
rcb-weighted        2      screening coin, start index
aon-lottery         0      (one draw before slot 1 picks the lucky group)
aon-greedy          0
greedy-fcfs         0
denylist-greedy     0
==================  =====  ==================================

Weighted policies consume both draws on every arrival whatever the screening
outcome, which keeps random streams aligned across policies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .gamma import GammaTable, compute_gamma
from .model import ArrivalEvent, Instance


class MissingGammaTable(RuntimeError):
    pass


class UnknownPolicy(ValueError):
    pass


@dataclass(frozen=True)
class PolicyState:
    """Residual budget plus policy-specific bookkeeping.

    ``free`` is a bitmask of free units (bit ``u`` set means unit ``u + 1`` is
    free) for cyclic-block policies; ``lucky``/``done`` belong to the lottery.
    """

    budget: int
    free: int | None = None
    lucky: int | None = None
    done: bool = False


@dataclass(frozen=True)
class Decision:
    allocation: int
    state: PolicyState
    audit: Mapping[str, Any] = field(default_factory=dict)


class Policy:
    name = ""
    code = -1
    draws_per_arrival = 0
    all_or_nothing = False
    tracks_units = False

    def __init__(self, instance: Instance, *, exact: bool = False):
        self.instance = instance
        self.exact = exact
        self.K = instance.capacity

    def _num(self, x):
        return Fraction(x) if self.exact else float(x)

    def start(self, pre_draw=None) -> PolicyState:
        return PolicyState(budget=self.K)

    def pre_breakpoints(self) -> tuple | None:
        """Breakpoints of the pre-horizon draw, or None when no such draw is used."""
        return None

    def breakpoints(self, state: PolicyState, event: ArrivalEvent) -> tuple[tuple, ...]:
        """Per-draw points where ``decide`` may change its output.

        Between consecutive breakpoints of every coordinate the decision is
        constant, which lets exact enumeration integrate over the draws.
        """
        return ((),) * self.draws_per_arrival

    def state_bound(self) -> int:
        return self.K + 1

    def cell_bound(self) -> int:
        """Upper bound on the number of draw cells per arrival."""
        return 2 ** self.draws_per_arrival

    def decide(self, state: PolicyState, event: ArrivalEvent, draws: Sequence[float]) -> Decision:
        raise NotImplementedError

    def _take(self, state: PolicyState, amount: int, **audit) -> Decision:
        return Decision(amount, replace(state, budget=state.budget - amount), audit)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class ThresholdUnit(Policy):
    """Accept with probability ``1/((1+R) gamma_tj)`` and then serve ``min(B_t, j)``."""

    name = "threshold-unit"
    code = 0
    draws_per_arrival = 1

    def __init__(self, instance, *, exact=False, table: GammaTable | None = None, precompute=True):
        super().__init__(instance, exact=exact)
        if table is None and precompute:
            table = compute_gamma(self._calibration_instance(), exact=exact)
        self.table = table

    def _calibration_instance(self) -> Instance:
        return self.instance.with_unit_priorities()

    def accept_prob(self, t: int, j: int):
        if self.table is None:
            raise MissingGammaTable(f"{self.name} has no gamma table")
        if self.table.gamma.shape != (self.instance.horizon, self.K):
            raise MissingGammaTable("gamma table does not match the instance dimensions")
        return self.table.accept[t, j - 1]

    def _coin(self, state, event, u):
        q = self.accept_prob(event.slot, event.demand)
        if u < q:
            return self._take(state, min(state.budget, event.demand), accepted=True)
        return self._take(state, 0, accepted=False)

    def decide(self, state, event, draws):
        return self._coin(state, event, draws[0])

    def breakpoints(self, state, event):
        return (_inner(self.accept_prob(event.slot, event.demand)),)


class ThresholdWeighted(ThresholdUnit):
    """Screen with ``Bernoulli(beta_i)``, then run the threshold rule on the virtual instance."""

    name = "threshold-weighted"
    code = 1
    draws_per_arrival = 2

    def _calibration_instance(self) -> Instance:
        return self.instance.virtual()

    def decide(self, state, event, draws):
        beta = self.instance.priorities[event.group]
        if not draws[0] < self._num(beta):
            return self._take(state, 0, screened=False)
        d = self._coin(state, event, draws[1])
        return Decision(d.allocation, d.state, {"screened": True, **d.audit})

    def breakpoints(self, state, event):
        beta = self._num(self.instance.priorities[event.group])
        return (_inner(beta), _inner(self.accept_prob(event.slot, event.demand)))


class RandomCyclicBlocks(Policy):
    """Units sit on a cycle; a request of size j claims the free units of a uniformly rotated block."""

    name = "rcb"
    code = 2
    draws_per_arrival = 1
    tracks_units = True

    def start(self, pre_draw=None):
        return PolicyState(budget=self.K, free=(1 << self.K) - 1)

    def state_bound(self):
        return 1 << self.K

    def cell_bound(self):
        return self.K * 2 ** (self.draws_per_arrival - 1)

    def _block(self, state, event, u):
        K = self.K
        s0 = min(int(u * K), K - 1)
        free = state.free
        units = []
        for m in range(event.demand):
            unit = (s0 + m) % K
            if free >> unit & 1:
                units.append(unit + 1)
                free &= ~(1 << unit)
        n = len(units)
        return Decision(n, PolicyState(state.budget - n, free),
                        {"start": s0 + 1, "units": tuple(units)})

    def _grid(self):
        K = self.K
        return tuple(Fraction(k, K) if self.exact else k / K for k in range(1, K))

    def decide(self, state, event, draws):
        return self._block(state, event, draws[0])

    def breakpoints(self, state, event):
        return (self._grid(),)


class WeightedRandomCyclicBlocks(RandomCyclicBlocks):
    name = "rcb-weighted"
    code = 3
    draws_per_arrival = 2

    def decide(self, state, event, draws):
        beta = self.instance.priorities[event.group]
        if not draws[0] < self._num(beta):
            return Decision(0, state, {"screened": False})
        d = self._block(state, event, draws[1])
        return Decision(d.allocation, d.state, {"screened": True, **d.audit})

    def breakpoints(self, state, event):
        beta = self._num(self.instance.priorities[event.group])
        return (_inner(beta), self._grid())


class AllOrNothingLottery(Policy):
    """Pick one group uniformly before the horizon; serve its first request in full, nothing else."""

    name = "aon-lottery"
    code = 4
    all_or_nothing = True

    def start(self, pre_draw=None):
        N = self.instance.groups
        lucky = min(int(pre_draw * N), N - 1)
        return PolicyState(budget=self.K, lucky=lucky, done=False)

    def pre_breakpoints(self):
        N = self.instance.groups
        return tuple(Fraction(k, N) if self.exact else k / N for k in range(1, N))

    def state_bound(self):
        return 2 * self.instance.groups * (self.K + 1)

    def decide(self, state, event, draws):
        if state.done or event.group != state.lucky:
            return Decision(0, state, {})
        served = state.budget >= event.demand
        amount = event.demand if served else 0
        return Decision(amount, replace(state, budget=state.budget - amount, done=True),
                        {"served": served})


class AllOrNothingGreedy(Policy):
    name = "aon-greedy"
    code = 5
    all_or_nothing = True

    def decide(self, state, event, draws):
        amount = event.demand if state.budget >= event.demand else 0
        return self._take(state, amount)


class GreedyFCFS(Policy):
    name = "greedy-fcfs"
    code = 6

    def decide(self, state, event, draws):
        return self._take(state, min(state.budget, event.demand))


class DenylistGreedy(GreedyFCFS):
    """Greedy for allowed groups; denied groups always get zero."""

    name = "denylist-greedy"
    code = 7

    def __init__(self, instance, *, exact=False, deny: Iterable[int] = ()):
        super().__init__(instance, exact=exact)
        self.deny = frozenset(deny)
        bad = [g for g in self.deny if not 0 <= g < instance.groups]
        if bad:
            raise ValueError(f"denied groups out of range: {sorted(g + 1 for g in bad)}")

    def decide(self, state, event, draws):
        if event.group in self.deny:
            return self._take(state, 0, denied=True)
        return super().decide(state, event, draws)


POLICIES: dict[str, type[Policy]] = {
    cls.name: cls
    for cls in (ThresholdUnit, ThresholdWeighted, RandomCyclicBlocks, WeightedRandomCyclicBlocks,
                AllOrNothingLottery, AllOrNothingGreedy, GreedyFCFS, DenylistGreedy)
}


def make_policy(name: str, instance: Instance, *, exact: bool = False,
                deny: Iterable[int] = ()) -> Policy:
    """Build a policy by its CLI name. ``deny`` holds 0-based group indices."""
    try:
        cls = POLICIES[name]
    except KeyError:
        raise UnknownPolicy(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}") from None
    if cls is DenylistGreedy:
        return cls(instance, exact=exact, deny=deny)
    if deny:
        raise ValueError("--deny only applies to denylist-greedy")
    return cls(instance, exact=exact)


def _inner(p) -> tuple:
    """Breakpoint tuple for a ``u < p`` coin, dropping degenerate ends."""
    return (p,) if 0 < p < 1 else ()
