"""Compiled trial loop. Mirrors ``Policy.decide`` for every policy code."""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .rng import jit_trial_key, jit_uniform

THRESHOLD_UNIT = 0
THRESHOLD_WEIGHTED = 1
RCB = 2
RCB_WEIGHTED = 3
AON_LOTTERY = 4
AON_GREEDY = 5
GREEDY_FCFS = 6
DENYLIST_GREEDY = 7


@njit(parallel=True, cache=True)
def run_batch(code, K, T, N, ev_count, ev_group, ev_demand, ev_cdf, accept, beta, deny,
              seed_k, trial0, out_A, out_D, rec_ev, rec_alloc, track):
    n = out_A.shape[0]
    for b in prange(n):
        tk = jit_trial_key(seed_k, trial0 + b)
        budget = K
        free = np.ones(K if (code == RCB or code == RCB_WEIGHTED) else 1, np.bool_)
        lucky = -1
        done = False
        if code == AON_LOTTERY:
            lucky = int(jit_uniform(tk, 0, 3) * N)
            if lucky >= N:
                lucky = N - 1
        for t in range(T):
            m = ev_count[t]
            k = np.searchsorted(ev_cdf[t, :m], jit_uniform(tk, t, 0), side="right")
            if k >= m:
                if track:
                    rec_ev[b, t] = -1
                    rec_alloc[b, t] = 0
                continue
            i = ev_group[t, k]
            j = ev_demand[t, k]
            out_D[b, i] += j
            alloc = 0
            if code == THRESHOLD_UNIT:
                if jit_uniform(tk, t, 1) < accept[t, j - 1]:
                    alloc = min(budget, j)
            elif code == THRESHOLD_WEIGHTED:
                z = jit_uniform(tk, t, 1)
                a = jit_uniform(tk, t, 2)
                if z < beta[i] and a < accept[t, j - 1]:
                    alloc = min(budget, j)
            elif code == RCB or code == RCB_WEIGHTED:
                ok = True
                if code == RCB:
                    s = jit_uniform(tk, t, 1)
                else:
                    ok = jit_uniform(tk, t, 1) < beta[i]
                    s = jit_uniform(tk, t, 2)
                if ok and budget > 0:
                    s0 = int(s * K)
                    if s0 >= K:
                        s0 = K - 1
                    for step in range(j):
                        u = s0 + step
                        if u >= K:
                            u -= K
                        if free[u]:
                            free[u] = False
                            alloc += 1
            elif code == AON_LOTTERY:
                if not done and i == lucky:
                    done = True
                    if budget >= j:
                        alloc = j
            elif code == AON_GREEDY:
                if budget >= j:
                    alloc = j
            elif code == GREEDY_FCFS:
                alloc = min(budget, j)
            elif code == DENYLIST_GREEDY:
                if not deny[i]:
                    alloc = min(budget, j)
            budget -= alloc
            out_A[b, i] += alloc
            if track:
                rec_ev[b, t] = k
                rec_alloc[b, t] = alloc
