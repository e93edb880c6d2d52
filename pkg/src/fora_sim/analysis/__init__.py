"""Analytic bounds, exact evaluation, hard-instance families and ceiling audits."""

from .audit import AuditVerdict, CeilingViolated, ceilings, upper_bound_audit
from .bounds import BoundSet, bounds, bounds_for, stationary_exact, stationary_floor
from .exact import DEFAULT_STATE_LIMIT, ExactReport, StateSpaceExceeded, exact_evaluate
from .hardgen import FAMILIES, InfeasibleParams, hardgen

__all__ = [
    "AuditVerdict", "BoundSet", "CeilingViolated", "DEFAULT_STATE_LIMIT", "ExactReport",
    "FAMILIES", "InfeasibleParams", "StateSpaceExceeded", "bounds", "bounds_for", "ceilings",
    "exact_evaluate", "hardgen", "stationary_exact", "stationary_floor", "upper_bound_audit",
]
