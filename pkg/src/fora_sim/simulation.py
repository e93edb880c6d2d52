"""Monte Carlo estimation of per-group fairness ratios.

Trial ``k`` of a run draws every uniform from ``(seed, k, slot, stream)``
(see :mod:`fora_sim.rng`), so results do not depend on worker count or trial
order, and two policies run under one seed see identical arrival sequences.
Tallies are integers; ratios and their delta-method intervals are formed
once at the end.

Two engines share that contract: ``"kernel"`` (compiled, parallel) and
``"reference"`` (plain Python through :meth:`Policy.decide`). They agree
bit for bit; the reference engine exists to prove it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import _kernel, rng
from .analysis.bounds import BoundSet, bounds
from .model import ArrivalEvent, Instance, NoArrival, expected_demand, load_summary, sample_slot
from .policies import DenylistGreedy, Policy, ThresholdUnit, make_policy

Z95 = NormalDist().inv_cdf(0.975)
BATCH = 1 << 16


class ZeroExpectedDemandGroup(ValueError):
    pass


@dataclass(frozen=True)
class TrialRecord:
    """One horizon: per-group allocation ``A_i`` and demand ``D_i``.

    ``events`` lists ``(t, i, j, allocation)`` per arrival when tracked.
    """

    alloc: tuple[int, ...]
    demand: tuple[int, ...]
    events: tuple[tuple[int, int, int, int], ...] | None = None


@dataclass(frozen=True)
class GroupEstimate:
    group: int
    beta: float
    mean_alloc: float
    mean_demand: float
    fe_fr_beta: float | None
    se: float | None
    ci_lo: float | None
    ci_hi: float | None
    fill_rate: float
    flag: str


@dataclass(frozen=True)
class RfeEstimate:
    slot: int
    group: int
    demand: int
    count: int
    mean: float
    se: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class EstimateReport:
    policy: str
    trials: int
    seed: int
    groups: tuple[GroupEstimate, ...]
    bounds: BoundSet
    time_invariant: bool
    rfe: tuple[RfeEstimate, ...] | None = None

    @property
    def min_fe_fr_beta(self) -> float | None:
        vals = [g.fe_fr_beta for g in self.groups if g.fe_fr_beta is not None]
        return min(vals) if vals else None

    @property
    def min_fill_rate(self) -> float:
        return min(g.fill_rate for g in self.groups)


@dataclass
class _Tally:
    """Exact integer sums across trials (merge order is irrelevant)."""

    groups: int
    trials: int = 0
    sum_a: list = field(default_factory=list)
    sum_d: list = field(default_factory=list)
    sum_aa: list = field(default_factory=list)
    sum_dd: list = field(default_factory=list)
    sum_ad: list = field(default_factory=list)
    fill_parts: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("sum_a", "sum_d", "sum_aa", "sum_dd", "sum_ad"):
            setattr(self, name, [0] * self.groups)
        self.fill_parts = [[] for _ in range(self.groups)]

    def add_arrays(self, A: np.ndarray, D: np.ndarray) -> None:
        self.trials += A.shape[0]
        A = A.astype(np.int64)
        D = D.astype(np.int64)
        for i in range(self.groups):
            a, d = A[:, i], D[:, i]
            self.sum_a[i] += int(a.sum())
            self.sum_d[i] += int(d.sum())
            self.sum_aa[i] += int((a * a).sum())
            self.sum_dd[i] += int((d * d).sum())
            self.sum_ad[i] += int((a * d).sum())
            # batches are cut by trial index, so this partial sum is worker-independent
            ratio = np.divide(a, d, out=np.ones(len(a)), where=d > 0)
            self.fill_parts[i].append(math.fsum(ratio))

    def fill_rate(self, i: int) -> float:
        return math.fsum(self.fill_parts[i]) / self.trials


def _variance(n: int, s: int, ss: int) -> float:
    """Unbiased sample variance from exact integer sums."""
    if n < 2:
        return float("nan")
    return (n * ss - s * s) / (n * (n - 1))


def _covariance(n: int, sx: int, sy: int, sxy: int) -> float:
    if n < 2:
        return float("nan")
    return (n * sxy - sx * sy) / (n * (n - 1))


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("FORA_SIM_WORKERS")
        workers = int(env) if env else (os.cpu_count() or 1)
    from numba import config
    return max(1, min(int(workers), config.NUMBA_NUM_THREADS))


class _KernelInputs:
    def __init__(self, instance: Instance, policy: Policy):
        if policy.exact:
            raise ValueError("simulation needs a floating point policy (exact=False)")
        T, K, N = instance.horizon, instance.capacity, instance.groups
        width = max(1, max(len(instance.slot_entries(t)) for t in range(T)))
        self.ev_count = np.zeros(T, np.int64)
        self.ev_group = np.zeros((T, width), np.int64)
        self.ev_demand = np.ones((T, width), np.int64)
        self.ev_cdf = np.ones((T, width), np.float64)
        for t in range(T):
            row = instance.slot_entries(t)
            m = len(row)
            self.ev_count[t] = m
            if m:
                self.ev_group[t, :m] = [i for i, _, _ in row]
                self.ev_demand[t, :m] = [j for _, j, _ in row]
                self.ev_cdf[t, :m] = instance.slot_cdf[t]
        if isinstance(policy, ThresholdUnit):
            self.accept = np.ascontiguousarray(policy.table.accept, dtype=np.float64)
        else:
            self.accept = np.zeros((T, K))
        self.beta = instance.beta.copy()
        self.deny = np.zeros(N, np.bool_)
        if isinstance(policy, DenylistGreedy):
            for g in policy.deny:
                self.deny[g] = True
        self.width = width


def _kernel_batches(instance, policy, trials, seed, track, workers, first_trial=0):
    """Yield ``(trial0, A, D, rec_ev, rec_alloc)`` per batch of trials."""
    from numba import set_num_threads

    set_num_threads(_resolve_workers(workers))
    inp = _KernelInputs(instance, policy)
    T, K, N = instance.horizon, instance.capacity, instance.groups
    seed_k = np.uint64(rng.seed_key(seed))
    for lo in range(0, trials, BATCH):
        n = min(BATCH, trials - lo)
        A = np.zeros((n, N), np.int64)
        D = np.zeros((n, N), np.int64)
        shape = (n, T) if track else (1, 1)
        rec_ev = np.zeros(shape, np.int32)
        rec_alloc = np.zeros(shape, np.int32)
        _kernel.run_batch(policy.code, K, T, N, inp.ev_count, inp.ev_group, inp.ev_demand,
                          inp.ev_cdf, inp.accept, inp.beta, inp.deny, seed_k,
                          np.int64(first_trial + lo), A, D, rec_ev, rec_alloc, track)
        yield first_trial + lo, A, D, (rec_ev if track else None), (rec_alloc if track else None)


def simulate_trial(instance: Instance, policy: Policy, seed: int, trial: int,
                   *, track: bool = False) -> TrialRecord:
    """Run one horizon through :meth:`Policy.decide` (reference engine)."""
    N = instance.groups
    pre = None
    if policy.pre_breakpoints() is not None:
        pre = rng.uniform(seed, trial, 0, rng.PRE_HORIZON)
    state = policy.start(pre)
    alloc = [0] * N
    demand = [0] * N
    events = []
    for t in range(instance.horizon):
        ev = sample_slot(instance, t, rng.uniform(seed, trial, t, rng.ARRIVAL))
        if isinstance(ev, NoArrival):
            continue
        draws = [rng.uniform(seed, trial, t, s) for s in range(1, policy.draws_per_arrival + 1)]
        d = policy.decide(state, ev, draws)
        state = d.state
        alloc[ev.group] += d.allocation
        demand[ev.group] += ev.demand
        if track:
            events.append((t, ev.group, ev.demand, d.allocation))
    return TrialRecord(tuple(alloc), tuple(demand), tuple(events) if track else None)


def _reference_batches(instance, policy, trials, seed, track, first_trial=0):
    T, N = instance.horizon, instance.groups
    index = [{(i, j): k for k, (i, j, _) in enumerate(instance.slot_entries(t))} for t in range(T)]
    for lo in range(0, trials, BATCH):
        n = min(BATCH, trials - lo)
        A = np.zeros((n, N), np.int64)
        D = np.zeros((n, N), np.int64)
        rec_ev = np.full((n, T), -1, np.int32) if track else None
        rec_alloc = np.zeros((n, T), np.int32) if track else None
        for b in range(n):
            rec = simulate_trial(instance, policy, seed, first_trial + lo + b, track=track)
            A[b] = rec.alloc
            D[b] = rec.demand
            if track:
                for t, i, j, a in rec.events:
                    rec_ev[b, t] = index[t][(i, j)]
                    rec_alloc[b, t] = a
        yield first_trial + lo, A, D, rec_ev, rec_alloc


def _batches(instance, policy, trials, seed, track, workers, engine):
    if engine == "kernel":
        return _kernel_batches(instance, policy, trials, seed, track, workers)
    if engine == "reference":
        return _reference_batches(instance, policy, trials, seed, track)
    raise ValueError(f"unknown engine {engine!r}")


def _as_policy(instance, policy, deny) -> Policy:
    if isinstance(policy, str):
        return make_policy(policy, instance, deny=deny)
    return policy


def run_trials(instance: Instance, policy: Policy | str, trials: int, seed: int = 0, *,
               track_rfe_fr: bool = False, workers: int | None = None,
               engine: str = "kernel", deny=()) -> EstimateReport:
    """Estimate per-group FE-FR-beta (ratio of means) with 95% delta-method intervals."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    policy = _as_policy(instance, policy, deny)
    T, N = instance.horizon, instance.groups
    tally = _Tally(N)
    width = max(1, max(len(instance.slot_entries(t)) for t in range(T)))
    rfe_count = np.zeros(T * width, np.int64)
    rfe_sum = np.zeros(T * width, np.int64)
    rfe_sq = np.zeros(T * width, np.int64)
    slot_offset = (np.arange(T) * width)[None, :]
    for _, A, D, rec_ev, rec_alloc in _batches(instance, policy, trials, seed, track_rfe_fr,
                                                workers, engine):
        tally.add_arrays(A, D)
        if track_rfe_fr:
            hit = rec_ev >= 0
            keys = (rec_ev + slot_offset)[hit]
            vals = rec_alloc[hit].astype(np.int64)
            rfe_count += np.bincount(keys, minlength=T * width)
            rfe_sum += np.bincount(keys, weights=vals, minlength=T * width).astype(np.int64)
            rfe_sq += np.bincount(keys, weights=vals * vals, minlength=T * width).astype(np.int64)
    rfe = None
    if track_rfe_fr:
        rows = []
        for t in range(T):
            for k, (i, j, _) in enumerate(instance.slot_entries(t)):
                c = int(rfe_count[t * width + k])
                if c == 0:
                    continue
                s, ss = int(rfe_sum[t * width + k]), int(rfe_sq[t * width + k])
                var = _variance(c, s, ss)
                se = math.sqrt(var / c) if c > 1 else float("nan")
                mean = s / c
                rows.append(RfeEstimate(t, i, j, c, mean, se, mean - Z95 * se, mean + Z95 * se))
        rfe = tuple(rows)
    return _report(instance, policy.name, seed, tally, rfe)


def _report(instance: Instance, name: str, seed: int, tally: _Tally, rfe) -> EstimateReport:
    M = tally.trials
    exp_demand = expected_demand(instance, exact=True)
    rows = []
    for i in range(instance.groups):
        beta = float(instance.priorities[i])
        sa, sd = tally.sum_a[i], tally.sum_d[i]
        mean_a, mean_d = sa / M, sd / M
        fill = tally.fill_rate(i)
        if exp_demand[i] == 0 or sd == 0:
            rows.append(GroupEstimate(i, beta, mean_a, mean_d, None, None, None, None, fill, "n/a"))
            continue
        ratio = sa / sd
        var_a = _variance(M, sa, tally.sum_aa[i])
        var_d = _variance(M, sd, tally.sum_dd[i])
        cov = _covariance(M, sa, sd, tally.sum_ad[i])
        lin = var_a - 2 * ratio * cov + ratio * ratio * var_d
        se = math.sqrt(max(lin, 0.0) / M) / (beta * mean_d) if M > 1 else float("nan")
        fe = ratio / beta
        rows.append(GroupEstimate(i, beta, mean_a, mean_d, fe, se, fe - Z95 * se, fe + Z95 * se,
                                  fill, "ok"))
    return EstimateReport(name, M, seed, tuple(rows), bounds(instance),
                          instance.time_invariant, rfe)


def estimate_rfe_fr(instance: Instance, policy: Policy | str, trials: int, seed: int = 0,
                    **kwargs) -> tuple[RfeEstimate, ...]:
    """Conditional mean allocation per (slot, group, demand) with at least one observed arrival."""
    return run_trials(instance, policy, trials, seed, track_rfe_fr=True, **kwargs).rfe


@dataclass(frozen=True)
class LongRunTrace:
    """Cumulative ``sum A_i / (beta_i sum D_i)`` after each day (NaN before any demand)."""

    policy: str
    seed: int
    ratios: np.ndarray  # (days, N)

    @property
    def final(self) -> np.ndarray:
        return self.ratios[-1]


def run_long_run(instance: Instance, policy: Policy | str, days: int, seed: int = 0, *,
                 workers: int | None = None, engine: str = "kernel", deny=()) -> LongRunTrace:
    """Treat each trial as one day and trace the cumulative realized ratio per group."""
    if any(d == 0 for d in expected_demand(instance, exact=True)):
        raise ZeroExpectedDemandGroup("every group needs positive expected demand")
    if days < 1:
        raise ValueError("days must be >= 1")
    policy = _as_policy(instance, policy, deny)
    A_parts, D_parts = [], []
    for _, A, D, _, _ in _batches(instance, policy, days, seed, False, workers, engine):
        A_parts.append(A)
        D_parts.append(D)
    cum_a = np.cumsum(np.concatenate(A_parts), axis=0)
    cum_d = np.cumsum(np.concatenate(D_parts), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(cum_d > 0, cum_a / (instance.beta[None, :] * cum_d), np.nan)
    return LongRunTrace(policy.name, seed, ratios)


def trial_record(instance: Instance, policy: Policy | str, seed: int, trial: int,
                 *, deny=()) -> TrialRecord:
    return simulate_trial(instance, _as_policy(instance, policy, deny), seed, trial, track=True)


__all__ = [
    "ArrivalEvent", "EstimateReport", "GroupEstimate", "LongRunTrace", "RfeEstimate",
    "TrialRecord", "ZeroExpectedDemandGroup", "estimate_rfe_fr", "load_summary",
    "run_long_run", "run_trials", "simulate_trial", "trial_record",
]
