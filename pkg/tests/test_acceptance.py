"""Acceptance suite: one group of tests per criterion, summarized as PASS/FAIL lines."""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from fora_sim.analysis.audit import upper_bound_audit
from fora_sim.analysis.bounds import (bounds_for, general_bound, stationary_exact,
                                      stationary_floor)
from fora_sim.analysis.exact import exact_evaluate
from fora_sim.analysis.hardgen import aon_general, full_support, general_tight
from fora_sim.gamma import compute_gamma
from fora_sim.model import Instance, load_summary
from fora_sim.simulation import run_long_run, run_trials

import oracles


def crit(n, title):
    return pytest.mark.criterion(n, title)


# 1 ------------------------------------------------------------------------

C1 = "threshold-unit conditional allocation equals j/(1+R) on 50 fuzzed instances"


def _fuzz_unit(count=50, seed=101):
    rng = random.Random(seed)
    return [oracles.random_instance(rng, max_k=4, max_t=4, max_n=3) for _ in range(count)]


@crit(1, C1)
def test_c1_conditional_float():
    start = time.perf_counter()
    checked = 0
    for inst in _fuzz_unit():
        R = float(load_summary(inst).r_unit)
        rep = exact_evaluate(inst, "threshold-unit")
        for t in range(inst.horizon):
            for i, j, _ in inst.slot_entries(t):
                assert abs(rep.conditional[(t, i, j)] - j / (1 + R)) <= 1e-12
                checked += 1
    assert checked > 50
    assert time.perf_counter() - start < 60


@crit(1, C1)
def test_c1_conditional_rational():
    start = time.perf_counter()
    for inst in _fuzz_unit():
        R = load_summary(inst, exact=True).r_unit
        rep = exact_evaluate(inst, "threshold-unit", exact=True)
        for t in range(inst.horizon):
            for i, j, _ in inst.slot_entries(t):
                assert abs(rep.conditional[(t, i, j)] - j / (1 + R)) <= Fraction(1, 10**15)
    assert time.perf_counter() - start < 60


@crit(1, C1)
def test_c1_oracle_agrees():
    for inst in _fuzz_unit()[:20]:
        _, _, cond = oracles.threshold_oracle(inst)
        rep = exact_evaluate(inst, "threshold-unit", exact=True)
        for key, v in cond.items():
            assert rep.conditional[key] == v


# 2 ------------------------------------------------------------------------

C2 = "threshold-weighted on the late-top-group instance: exact FE-FR-beta 0.5 per group, Monte Carlo within 4 SE"


@crit(2, C2)
def test_c2_exact(late_top):
    assert load_summary(late_top, exact=True).r_beta == 1
    for exact in (False, True):
        rep = exact_evaluate(late_top, "threshold-weighted", exact=exact)
        for v in rep.fe_fr_beta:
            assert abs(v - Fraction(1, 2)) <= 1e-12


@crit(2, C2)
def test_c2_monte_carlo(late_top):
    est = run_trials(late_top, "threshold-weighted", 10**6, seed=2024)
    for g in est.groups:
        assert abs(g.fe_fr_beta - 0.5) <= 4 * g.se, g


# 3 ------------------------------------------------------------------------

C3 = "rcb on the paired-request instance: FE-FR 0.625, unit law 0.9375 matches closed form, rotational symmetry"


@crit(3, C3)
def test_c3_pair3(pair3):
    rep = exact_evaluate(pair3, "rcb", exact=True)
    s = load_summary(pair3, exact=True)
    R, T = s.r_unit, pair3.horizon
    assert rep.fe_fr_beta[0] == Fraction(5, 8) == (1 - (1 - R / T) ** T) / R
    W = s.w_beta
    q = Fraction(3, 4)
    closed = q * (1 - (1 - W) ** T) / W
    assert closed == Fraction(15, 16)
    assert all(u == Fraction(15, 16) for u in rep.unit_alloc[0])
    flt = exact_evaluate(pair3, "rcb")
    assert abs(flt.fe_fr_beta[0] - 0.625) <= 1e-12
    assert all(abs(u - 0.9375) <= 1e-12 for u in flt.unit_alloc[0])


@crit(3, C3)
def test_c3_symmetry_and_unit_law():
    rng = random.Random(303)
    for _ in range(25):
        inst = oracles.random_instance(rng, max_k=6, max_t=3, max_n=2, stationary=True)
        rep = exact_evaluate(inst, "rcb")
        K, T = inst.capacity, inst.horizon
        q = [sum(float(p) * j for g, j, p in inst.slot_entries(0) if g == i) / K
             for i in range(inst.groups)]
        W = sum(q)
        for i, row in enumerate(rep.unit_alloc):
            assert max(row) - min(row) < 1e-12
            closed = q[i] * (1 - (1 - W) ** T) / W if W > 0 else 0.0
            assert all(abs(u - closed) <= 1e-12 for u in row)
        alloc, _ = oracles.rcb_oracle(inst)
        assert all(abs(a - float(b)) <= 1e-12 for a, b in zip(rep.expected_alloc, alloc))


# 4 ------------------------------------------------------------------------

C4 = "gamma >= 1/(1+R) on 1000 fuzzed instances, rows sum to 1, budget law matches oracle"


@crit(4, C4)
def test_c4_gamma_fuzz():
    rng = random.Random(404)
    small = 0
    for _ in range(1000):
        inst = oracles.random_instance(rng, max_k=10, max_t=10, max_n=4)
        table = compute_gamma(inst)
        R = float(load_summary(inst).r_unit)
        assert table.gamma.min() >= 1 / (1 + R) - 1e-12
        assert np.all(np.abs(table.budget_dist.sum(axis=1) - 1) <= 1e-9)
        if inst.capacity <= 4:
            small += 1
            rows, _, _ = oracles.threshold_oracle(inst)
            for t in range(inst.horizon):
                ref = np.array([float(x) for x in rows[t]])
                assert np.abs(table.budget_dist[t] - ref).max() <= 1e-12
    assert small >= 100


@crit(4, C4)
def test_c4_matches_enumeration():
    rng = random.Random(405)
    for _ in range(40):
        inst = oracles.random_instance(rng, max_k=4, max_t=5, max_n=3)
        table = compute_gamma(inst)
        rep = exact_evaluate(inst, "threshold-unit")
        for t in range(inst.horizon):
            assert np.abs(table.budget_dist[t] - np.array(rep.budget_dist[t])).max() <= 1e-12


# 5 ------------------------------------------------------------------------

C5 = "all-or-nothing separation on the K=6, T=4 family and on the paired-request instance"


@crit(5, C5)
def test_c5_aon_general():
    inst = aon_general(Fraction(1, 6), 4)
    assert inst.capacity == 6
    R = load_summary(inst, exact=True).r_unit
    assert R == Fraction(8, 3)
    lottery = exact_evaluate(inst, "aon-lottery", exact=True)
    assert all(v == Fraction(1, 4) for v in lottery.fe_fr_beta)
    greedy = exact_evaluate(inst, "aon-greedy")
    assert greedy.min_fe_fr_beta <= 0.25 + 1e-12
    assert abs(general_bound(float(R)) - 3 / 11) < 1e-15
    assert general_bound(float(R)) > 0.25
    # decimal epsilon lands on the same even capacity
    assert aon_general(1 / 6, 4).capacity == 6


@crit(5, C5)
def test_c5_pair3(pair3):
    best = oracles.best_all_or_nothing_single_group(pair3)
    assert best == Fraction(1, 2)
    assert exact_evaluate(pair3, "aon-greedy", exact=True).fe_fr_beta[0] == Fraction(1, 2)
    rcb = exact_evaluate(pair3, "rcb", exact=True).fe_fr_beta[0]
    floor = stationary_floor(1.5)
    assert abs(floor - 0.5179132265677134) < 1e-12
    assert best < rcb and best < floor
    assert float(rcb) == 0.625


# 6 ------------------------------------------------------------------------

C6 = "ceiling audits pass on general-tight and full-support over a 3x3 (rho, eps) grid"
GRID = [(rho, eps) for rho in ("0.5", "1", "2") for eps in ("0.05", "0.1", "0.2")]
AUDITED = ("threshold-weighted", "threshold-unit", "rcb-weighted", "rcb", "greedy-fcfs",
           "aon-greedy", "aon-lottery")


@crit(6, C6)
@pytest.mark.parametrize("rho,eps", GRID)
def test_c6_general_tight(rho, eps):
    inst = general_tight(["0.5", "1"], rho, eps, horizon=6, capacity=3)
    assert load_summary(inst, exact=True).r_beta == Fraction(rho)
    for name in AUDITED:
        verdict = upper_bound_audit(inst, exact_evaluate(inst, name))
        assert "general-tight" in [c.name for c in verdict.checks]
        assert verdict.passed, [c.line() for c in verdict.checks]
    best = exact_evaluate(inst, "threshold-weighted").min_fe_fr_beta
    assert abs(best - 1 / (1 + float(rho))) <= 1e-12


@crit(6, C6)
@pytest.mark.parametrize("rho,eps", GRID)
def test_c6_full_support(rho, eps):
    inst = full_support(["0.5", "1"], rho, eps, horizon=4, capacity=3)
    assert abs(float(load_summary(inst, exact=True).r_beta) - float(rho)) <= 1e-12
    assert all(p > 0 for *_, p in inst.entries) and len(inst.entries) == 2 * 3
    for name in AUDITED:
        verdict = upper_bound_audit(inst, exact_evaluate(inst, name))
        assert {"full-support", "full-support-lipschitz"} <= {c.name for c in verdict.checks}
        assert verdict.passed, [c.line() for c in verdict.checks]


# 7 ------------------------------------------------------------------------

C7 = "bound ordering on the load x horizon grid and the large-horizon limit"


@crit(7, C7)
def test_c7_ordering():
    checked = 0
    for k in range(1, 51):
        r = k / 10
        for T in (1, 2, 5, 10, 100):
            if r > T:
                continue  # per-slot load above one is not a valid stationary instance
            b = bounds_for(r, T)
            assert b.stationary_exact >= b.stationary_floor
            assert b.stationary_floor - b.general > 1e-9
            assert all(0 < v <= 1 for v in (b.general, b.stationary_exact, b.stationary_floor))
            checked += 1
    assert checked == 250 - 40 - 30
    zero = bounds_for(0.0, 3)
    assert (zero.general, zero.stationary_exact, zero.stationary_floor) == (1.0, 1.0, 1.0)


@crit(7, C7)
def test_c7_limit():
    for k in range(1, 51):
        r = k / 10
        assert abs(stationary_exact(r, 10**6) - (1 - math.exp(-r)) / r) <= 1e-6
    assert abs(stationary_exact(1.0, 10**6) - (1 - math.exp(-1))) <= 1e-6


# 8 ------------------------------------------------------------------------

C8 = "fill-rate pathology: min E[F_i] = 0.75 while group 2 gets FE-FR 0"


@crit(8, C8)
def test_c8_pathology(pathology):
    for exact in (False, True):
        rep = exact_evaluate(pathology, "denylist-greedy", exact=exact, fill_rate=True, deny=(1,))
        assert abs(min(rep.fill_rate) - Fraction(3, 4)) <= 1e-12
        assert rep.fe_fr_beta[1] == 0
        assert rep.fe_fr_beta[0] == 1
    K = pathology.capacity
    assert Fraction(3, 4) == 1 - Fraction(1, K - 1)


# 9 ------------------------------------------------------------------------

C9 = "long-run cumulative ratio of threshold-weighted on the late-top-group instance ends within 0.02 of 0.5"


@crit(9, C9)
def test_c9_long_run(late_top):
    for seed in range(10):
        trace = run_long_run(late_top, "threshold-weighted", 10**5, seed)
        assert trace.ratios.shape == (10**5, 2)
        assert np.all(np.abs(trace.final - 0.5) <= 0.02), (seed, trace.final)
    again = run_long_run(late_top, "threshold-weighted", 10**5, 9)
    assert np.array_equal(again.ratios, trace.ratios, equal_nan=True)


# 10 -----------------------------------------------------------------------

C10 = "performance: 1e6 rcb-weighted trials (T=50, K=100, N=5) < 60 s; gamma (T=100, K=200, N=10) < 10 s"


def _perf_instance():
    rng = np.random.default_rng(10)
    T, K, N = 50, 100, 5
    beta = [Fraction(1, 5), Fraction(2, 5), Fraction(3, 5), Fraction(4, 5), 1]
    entries = []
    for t in range(T):
        for i in range(N):
            for j in sorted(set(rng.integers(1, K + 1, size=4).tolist())):
                entries.append((t, i, j, Fraction(1, 40)))
    return Instance.create(K, T, N, beta, entries, kind="time_varying")


@crit(10, C10)
def test_c10_simulation_speed():
    inst = _perf_instance()
    run_trials(inst, "rcb-weighted", 1000, seed=0)  # compile outside the clock
    start = time.perf_counter()
    est = run_trials(inst, "rcb-weighted", 10**6, seed=1)
    elapsed = time.perf_counter() - start
    assert est.trials == 10**6
    assert elapsed < 60, elapsed


@crit(10, C10)
def test_c10_gamma_speed():
    T, K, N = 100, 200, 10
    p = Fraction(1, N * K * 2)
    inst = Instance.create(K, T, N, [1] * N,
                           [(t, i, j, p) for t in range(T) for i in range(N) for j in range(1, K + 1)],
                           kind="time_varying")
    start = time.perf_counter()
    table = compute_gamma(inst)
    elapsed = time.perf_counter() - start
    assert table.gamma.shape == (T, K)
    assert elapsed < 10, elapsed
