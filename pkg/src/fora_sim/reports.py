"""CSV writers for estimates, exact results, traces, gamma tables and guarantee curves."""

from __future__ import annotations

import csv
from typing import IO, Iterable, Sequence

from .analysis.bounds import bounds, general_bound, stationary_exact, stationary_floor
from .analysis.exact import ExactReport
from .gamma import GammaTable
from .model import Instance
from .simulation import EstimateReport, LongRunTrace, RfeEstimate

ESTIMATE_COLUMNS = ("group", "beta", "mean_alloc", "mean_demand", "fe_fr_beta", "se",
                    "ci_lo", "ci_hi", "bound_general", "bound_stationary", "flag")
RFE_COLUMNS = ("t", "group", "demand", "arrivals", "mean_alloc", "se", "ci_lo", "ci_hi", "ratio")
CURVE_COLUMNS = ("r_beta", "t", "general", "stationary_exact", "stationary_floor")


def fmt(x) -> str:
    """Shortest round-tripping decimal; blank for None."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _bound_cells(instance: Instance) -> tuple[str, str]:
    b = bounds(instance)
    stationary = fmt(b.stationary_exact) if instance.time_invariant else "n/a"
    return fmt(b.general), stationary


def write_estimate(report: EstimateReport, instance: Instance, fh: IO[str],
                   *, fill_rate: bool = False) -> None:
    cols = list(ESTIMATE_COLUMNS) + (["fill_rate"] if fill_rate else [])
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    general, stationary = _bound_cells(instance)
    for g in report.groups:
        row = [g.group + 1, fmt(g.beta), fmt(g.mean_alloc), fmt(g.mean_demand)]
        if g.fe_fr_beta is None:
            row += ["n/a"] * 4
        else:
            row += [fmt(g.fe_fr_beta), fmt(g.se), fmt(g.ci_lo), fmt(g.ci_hi)]
        row += [general, stationary, g.flag]
        if fill_rate:
            row.append(fmt(g.fill_rate))
        w.writerow(row)


def write_exact(report: ExactReport, instance: Instance, fh: IO[str]) -> None:
    """Same columns as :func:`write_estimate` plus ``source``; standard errors are zero."""
    cols = list(ESTIMATE_COLUMNS) + (["fill_rate"] if report.fill_rate is not None else [])
    cols.append("source")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    general, stationary = _bound_cells(instance)
    for i, fe in enumerate(report.fe_fr_beta):
        row = [i + 1, fmt(report.priorities[i]), fmt(report.expected_alloc[i]),
               fmt(report.expected_demand[i])]
        if fe is None:
            row += ["n/a"] * 4 + [general, stationary, "n/a"]
        else:
            row += [fmt(fe), "0.0", fmt(fe), fmt(fe), general, stationary, "ok"]
        if report.fill_rate is not None:
            row.append(fmt(report.fill_rate[i]))
        row.append("exact")
        w.writerow(row)


def write_rfe(rows: Sequence[RfeEstimate], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RFE_COLUMNS)
    for r in rows:
        w.writerow([r.slot + 1, r.group + 1, r.demand, r.count, fmt(r.mean), fmt(r.se),
                    fmt(r.ci_lo), fmt(r.ci_hi), fmt(r.mean / r.demand)])


def write_trace(trace: LongRunTrace, fh: IO[str], *, stride: int = 1) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("day", "group", "cumulative_ratio"))
    days, groups = trace.ratios.shape
    keep = list(range(stride - 1, days, stride))
    if not keep or keep[-1] != days - 1:
        keep.append(days - 1)
    for d in keep:
        for i in range(groups):
            v = trace.ratios[d, i]
            w.writerow((d + 1, i + 1, "n/a" if v != v else fmt(v)))


def write_gamma(table: GammaTable, fh: IO[str]) -> None:
    """Budget distribution block then gamma block, both 1-based in ``t``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("t", "b", "prob"))
    T, K = table.gamma.shape
    for t in range(T):
        for b in range(K + 1):
            w.writerow((t + 1, b, f"{float(table.budget_dist[t, b]):.17g}"))
    fh.write("\n")
    w.writerow(("t", "j", "gamma", "accept"))
    for t in range(T):
        for j in range(1, K + 1):
            w.writerow((t + 1, j, f"{float(table.gamma[t, j - 1]):.17g}",
                        f"{float(table.accept[t, j - 1]):.17g}"))


def write_curves(r_values: Iterable[float], t_values: Sequence[int] | None, fh: IO[str]) -> None:
    """Guarantee curves. Without horizons only the horizon-free columns are filled."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for r in r_values:
        if not t_values:
            w.writerow((fmt(r), "", fmt(general_bound(r)), "", fmt(stationary_floor(r))))
            continue
        for t in t_values:
            w.writerow((fmt(r), t, fmt(general_bound(r)), fmt(stationary_exact(r, t)),
                        fmt(stationary_floor(r))))
