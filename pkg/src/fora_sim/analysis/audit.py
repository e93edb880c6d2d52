"""Check evaluated policies against the policy-independent fairness ceilings.

A ceiling here holds for *every* online policy on the given instance, so an
evaluation above it means some computation is wrong.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..model import Instance, load_summary
from ..policies import POLICIES
from .bounds import capped_growth, stationary_exact

EXACT_TOL = 1e-12
MC_SIGMAS = 4.0


class CeilingViolated(AssertionError):
    pass


@dataclass(frozen=True)
class AuditCheck:
    name: str
    value: float
    ceiling: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.value <= self.ceiling + self.slack

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: min fe_fr_beta {self.value:.12g} <= ceiling {self.ceiling:.12g}"


@dataclass(frozen=True)
class AuditVerdict:
    policy: str
    family: str | None
    checks: tuple[AuditCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def require(self) -> None:
        bad = [c.line() for c in self.checks if not c.passed]
        if bad:
            raise CeilingViolated("; ".join(bad))


def _any_arrival_prob(instance: Instance) -> float:
    none = 1.0
    for t in range(instance.horizon):
        none *= float(instance.no_arrival(t))
    return 1.0 - none


def ceilings(instance: Instance, *, all_or_nothing: bool = False) -> list[tuple[str, float]]:
    """Applicable ``(name, ceiling)`` pairs for ``instance``.

    The ``capacity`` ceiling applies to any instance: total allocation is at
    most ``K`` and zero when nothing arrives, so the smallest ratio is at most
    ``P(any arrival) / R_beta``. Family ceilings come from ``instance.meta``.
    """
    out: list[tuple[str, float]] = []
    r_beta = float(load_summary(instance).r_beta)
    if r_beta > 0:
        out.append(("capacity", _any_arrival_prob(instance) / r_beta))
    meta = instance.meta or {}
    family = meta.get("name")
    T = instance.horizon
    if family == "general-tight":
        rho, eps = Fraction(meta["rho"]), Fraction(meta["eps"])
        out.append(("general-tight", float(1 / (1 + rho - eps))))
    elif family == "full-support":
        rho, lam, gam = Fraction(meta["rho"]), Fraction(meta["lambda"]), Fraction(meta["Gamma"])
        slack = float(lam * gam)
        out.append(("full-support", capped_growth(float(rho) + slack, T) / float(rho)))
        out.append(("full-support-lipschitz",
                    stationary_exact(float(rho), T) + slack / float(rho)))
    elif family in ("aon-general", "aon-stationary") and all_or_nothing:
        out.append((f"{family}-all-or-nothing", 1.0 / T))
    return out


def upper_bound_audit(instance: Instance, report) -> AuditVerdict:
    """Compare the smallest per-group ratio in ``report`` with every applicable ceiling.

    ``report`` is an :class:`~fora_sim.analysis.exact.ExactReport` (checked to
    1e-12) or a :class:`~fora_sim.simulation.EstimateReport` (checked with
    four standard errors of slack).
    """
    cls = POLICIES.get(report.policy)
    aon = bool(cls and cls.all_or_nothing)
    if hasattr(report, "groups"):
        rows = [g for g in report.groups if g.fe_fr_beta is not None]
        if not rows:
            return AuditVerdict(report.policy, None, ())
        worst = min(rows, key=lambda g: g.fe_fr_beta)
        value, slack = worst.fe_fr_beta, MC_SIGMAS * worst.se + EXACT_TOL
    else:
        value = report.min_fe_fr_beta
        if value is None:
            return AuditVerdict(report.policy, None, ())
        value, slack = float(value), EXACT_TOL
    checks = tuple(AuditCheck(name, value, ceil, slack)
                   for name, ceil in ceilings(instance, all_or_nothing=aon))
    family = (instance.meta or {}).get("name")
    return AuditVerdict(report.policy, family, checks)
