"""Generators for the hard instance families.

``general-tight``
    Lower-priority groups request the whole capacity early; the top-priority
    group may request it in the last slot only. Any policy is capped at
    ``1/(1 + rho - eps)``.
``full-support``
    Time-invariant, every (group, demand) cell positive, ``R_beta = rho``;
    nearly all mass sits on one full-capacity request.
``aon-general``
    ``T`` groups, group ``t`` requests ``K/2 + 1`` units in slot ``t`` for
    sure; all-or-nothing policies serve at most one request.
``aon-stationary``
    The same demand in both of two slots for a single group.

Arithmetic runs in fractions, so decimal parameters give exact loads. The
family name and parameters ride along in ``Instance.meta`` for the audit.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from ..model import TIME_INVARIANT, TIME_VARYING, Instance

FAMILIES = ("general-tight", "full-support", "aon-general", "aon-stationary")


class InfeasibleParams(ValueError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _check_beta(beta: Sequence) -> list[Fraction]:
    beta = [_frac(b) for b in beta]
    if not beta:
        raise InfeasibleParams("beta must be non-empty")
    if any(not 0 < b <= 1 for b in beta):
        raise InfeasibleParams("every priority must lie in (0, 1]")
    if max(beta) != 1:
        raise InfeasibleParams("priorities must be normalized so that max(beta) = 1")
    return beta


def general_tight(beta: Sequence, rho, eps, horizon: int, capacity: int = 4) -> Instance:
    """Time-varying family whose ceiling ``1/(1 + rho - eps)`` tends to ``1/(1 + R_beta)``.

    The top-priority group is the last index with ``beta_i = 1``; every other
    group arrives with probability ``(rho - eps) / ((T - 1) * sum(beta_others))``
    in each of the first ``T - 1`` slots, the top group with ``eps`` in the last.
    """
    beta = _check_beta(beta)
    rho, eps = _frac(rho), _frac(eps)
    N, T, K = len(beta), int(horizon), int(capacity)
    if N < 2:
        raise InfeasibleParams("need N >= 2 groups")
    if T < 2:
        raise InfeasibleParams("need horizon T >= 2")
    if K < 1:
        raise InfeasibleParams("capacity must be positive")
    if rho <= 0:
        raise InfeasibleParams("need rho > 0")
    if not 0 < eps < min(Fraction(1), rho):
        raise InfeasibleParams("need 0 < eps < min(1, rho)")
    top = max(i for i, b in enumerate(beta) if b == 1)
    others = [i for i in range(N) if i != top]
    p_early = (rho - eps) / ((T - 1) * sum(beta[i] for i in others))
    if (N - 1) * p_early > 1:
        raise InfeasibleParams(
            f"slot mass (N-1)(rho-eps)/((T-1) sum beta) = {float((N - 1) * p_early):.6g} > 1; "
            "increase T"
        )
    entries = [(t, i, K, p_early) for t in range(T - 1) for i in others]
    entries.append((T - 1, top, K, eps))
    meta = {"name": "general-tight", "rho": str(rho), "eps": str(eps), "top_group": top + 1}
    return Instance.create(K, T, N, beta, entries, kind=TIME_VARYING, meta=meta)


def full_support(beta: Sequence, rho, eps, horizon: int, capacity: int, lam=None) -> Instance:
    """Time-invariant full-support family with ``R_beta = rho``.

    ``lam`` defaults to ``rho * eps / Gamma`` so that the policy-independent
    ceiling exceeds the finite-horizon guarantee by at most ``eps``.
    """
    beta = _check_beta(beta)
    rho, eps = _frac(rho), _frac(eps)
    N, T, K = len(beta), int(horizon), int(capacity)
    if T < 1 or K < 1:
        raise InfeasibleParams("horizon and capacity must be positive")
    if not 0 < rho < T:
        raise InfeasibleParams("need 0 < rho < T")
    if eps <= 0:
        raise InfeasibleParams("need eps > 0")
    k = beta.index(Fraction(1))
    cells = [(i, j) for i in range(N) for j in range(1, K + 1) if (i, j) != (k, K)]
    A = sum((beta[i] * j / K for i, j in cells), Fraction(0))
    Gamma = sum((1 - beta[i] * j / K for i, j in cells), Fraction(0))
    if lam is None:
        lam = rho * eps / Gamma if Gamma > 0 else Fraction(0)
    lam = _frac(lam)
    if cells and lam <= 0:
        raise InfeasibleParams("need lambda > 0")
    if not rho - lam * A > 0:
        raise InfeasibleParams("need rho - lambda * A > 0")
    if rho + lam * Gamma > T:
        raise InfeasibleParams("need rho + lambda * Gamma <= T")
    entries = [(i, j, lam / T) for i, j in cells]
    entries.append((k, K, (rho - lam * A) / T))
    meta = {"name": "full-support", "rho": str(rho), "eps": str(eps), "lambda": str(lam),
            "A": str(A), "Gamma": str(Gamma)}
    return Instance.create(K, T, N, beta, sorted(entries), kind=TIME_INVARIANT, meta=meta)


def _even_capacity(eps: Fraction) -> int:
    if eps <= 0:
        raise InfeasibleParams("need eps > 0")
    # tolerate decimal renderings such as 0.16666666666666666 for 1/6
    K = math.ceil(1 / eps - Fraction(1, 10**9))
    return K + (K % 2)


def aon_general(eps, horizon: int) -> Instance:
    """``T`` groups, one deterministic request of ``K/2 + 1`` units per slot."""
    eps = _frac(eps)
    T = int(horizon)
    if T < 1:
        raise InfeasibleParams("need horizon T >= 1")
    K = _even_capacity(eps)
    d = K // 2 + 1
    if d > K:
        raise InfeasibleParams("need K >= 2, i.e. eps <= 1/2")
    entries = [(t, t, d, Fraction(1)) for t in range(T)]
    meta = {"name": "aon-general", "eps": str(eps), "demand": d}
    return Instance.create(K, T, T, [1] * T, entries, kind=TIME_VARYING, meta=meta)


def aon_stationary(eps) -> Instance:
    """One group, two slots, ``K/2 + 1`` units requested in each for sure (needs ``eps <= 1/4``)."""
    eps = _frac(eps)
    if eps > Fraction(1, 4):
        raise InfeasibleParams("need eps <= 0.25 so that K >= 4")
    K = _even_capacity(eps)
    d = K // 2 + 1
    meta = {"name": "aon-stationary", "eps": str(eps), "demand": d}
    return Instance.create(K, 2, 1, [1], [(0, d, Fraction(1))], kind=TIME_INVARIANT, meta=meta)


def hardgen(family: str, **params) -> Instance:
    if family == "general-tight":
        return general_tight(**params)
    if family == "full-support":
        return full_support(**params)
    if family == "aon-general":
        return aon_general(**params)
    if family == "aon-stationary":
        return aon_stationary(**params)
    raise InfeasibleParams(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
