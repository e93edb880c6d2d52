"""``fora-sim`` command line.

Exit codes: 0 success, 1 internal error or failed audit, 2 invalid input,
3 infeasible generator parameters, 4 enumeration too large.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from . import reports
from .analysis.audit import upper_bound_audit
from .analysis.bounds import bounds
from .analysis.exact import DEFAULT_STATE_LIMIT, StateSpaceExceeded, exact_evaluate
from .analysis.hardgen import FAMILIES, InfeasibleParams, hardgen
from .gamma import compute_gamma
from .model import InstanceError, load_instance, load_summary, parse_index_list, save_instance
from .policies import POLICIES, make_policy
from .simulation import ZeroExpectedDemandGroup, run_long_run, run_trials

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_STATE_SPACE = 4


class UsageError(ValueError):
    pass


@contextlib.contextmanager
def _sink(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _deny(args) -> list[int]:
    if not args.deny:
        return []
    try:
        return parse_index_list(args.deny)
    except ValueError as exc:
        raise UsageError(f"--deny expects comma-separated group numbers: {exc}") from None


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _grid(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma list."""
    if ":" not in text:
        return _floats(text)
    lo, hi, step = (float(x) for x in text.split(":"))
    if step <= 0:
        raise UsageError("grid step must be positive")
    n = int(round((hi - lo) / step))
    return [round(lo + k * step, 12) for k in range(n + 1)]


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    s = load_summary(inst)
    print(f"valid: K={inst.capacity} T={inst.horizon} N={inst.groups} kind={inst.kind} "
          f"r_beta={reports.fmt(s.r_beta)} r={reports.fmt(s.r_unit)} w_beta={reports.fmt(s.w_beta)}")
    return EXIT_OK


def cmd_gamma(args) -> int:
    inst = load_instance(args.instance)
    table = compute_gamma(inst.virtual(), exact=args.exact_rational)
    with _sink(args.output) as fh:
        reports.write_gamma(table, fh)
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    report = run_trials(inst, make_policy(args.policy, inst, deny=_deny(args)), args.trials,
                        args.seed, track_rfe_fr=args.track_rfe_fr, workers=args.workers)
    with _sink(args.output) as fh:
        reports.write_estimate(report, inst, fh, fill_rate=args.fill_rate)
        if args.track_rfe_fr and fh is sys.stdout:
            fh.write("\n")
            reports.write_rfe(report.rfe, fh)
    if args.track_rfe_fr and args.output not in (None, "-"):
        out = Path(args.output)
        with open(out.with_name(f"{out.stem}_rfe.csv"), "w", encoding="utf-8", newline="") as fh:
            reports.write_rfe(report.rfe, fh)
    return EXIT_OK


def cmd_longrun(args) -> int:
    inst = load_instance(args.instance)
    trace = run_long_run(inst, make_policy(args.policy, inst, deny=_deny(args)), args.days,
                         args.seed, workers=args.workers)
    with _sink(args.output) as fh:
        reports.write_trace(trace, fh, stride=args.stride)
    return EXIT_OK


def _exact(args, inst):
    return exact_evaluate(inst, args.policy, args.state_limit, exact=args.exact_rational,
                          fill_rate=getattr(args, "fill_rate", False), deny=_deny(args))


def cmd_exact(args) -> int:
    inst = load_instance(args.instance)
    report = _exact(args, inst)
    with _sink(args.output) as fh:
        reports.write_exact(report, inst, fh)
    low = report.min_fe_fr_beta
    print(f"min fe_fr_beta = {'n/a' if low is None else reports.fmt(low)}", file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args) -> int:
    inst = load_instance(args.instance)
    b = bounds(inst)
    stationary = inst.time_invariant
    print(f"r_beta {reports.fmt(b.r_beta)}")
    print(f"general {reports.fmt(b.general)}")
    print(f"stationary_exact {reports.fmt(b.stationary_exact) if stationary else 'n/a'}")
    print(f"stationary_floor {reports.fmt(b.stationary_floor) if stationary else 'n/a'}")
    return EXIT_OK


def cmd_hardgen(args) -> int:
    fam = args.family
    need = {"general-tight": ("beta", "rho", "eps", "t"), "full-support": ("beta", "rho", "eps", "t", "k"),
            "aon-general": ("eps", "t"), "aon-stationary": ("eps",)}[fam]
    if "beta" in need and args.beta is None and args.n is not None:
        args.beta = ",".join(["1"] * args.n)
    missing = [f"--{name}" for name in need if getattr(args, name) is None]
    if missing:
        raise UsageError(f"{fam} needs {' '.join(missing)}")
    params = {}
    if "beta" in need:
        beta = [s.strip() for s in args.beta.split(",") if s.strip()]
        if args.n is not None and args.n != len(beta):
            raise UsageError(f"--n {args.n} does not match {len(beta)} priorities in --beta")
        params["beta"] = beta
    if "rho" in need:
        params["rho"] = args.rho
    params["eps"] = args.eps
    if "t" in need:
        params["horizon"] = args.t
    if fam == "general-tight" and args.k is not None:
        params["capacity"] = args.k
    if fam == "full-support":
        params["capacity"] = args.k
        if args.lam is not None:
            params["lam"] = args.lam
    inst = hardgen(fam, **params)
    if args.output in (None, "-"):
        json.dump(inst.to_json(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        save_instance(inst, args.output)
    return EXIT_OK


def cmd_audit(args) -> int:
    inst = load_instance(args.instance)
    if args.trials is None:
        report = _exact(args, inst)
    else:
        report = run_trials(inst, make_policy(args.policy, inst, deny=_deny(args)), args.trials,
                            args.seed, workers=args.workers)
    verdict = upper_bound_audit(inst, report)
    if not verdict.checks:
        print(f"no applicable ceiling for {args.policy} on this instance")
    for check in verdict.checks:
        print(check.line())
    return EXIT_OK if verdict.passed else EXIT_INTERNAL


def cmd_report(args) -> int:
    r_values = _grid(args.r)
    if any(r < 0 for r in r_values):
        raise UsageError("loads must be nonnegative")
    t_values = [int(x) for x in args.t.split(",") if x.strip()] if args.t else None
    if t_values and any(t < 1 for t in t_values):
        raise UsageError("horizons must be positive")
    with _sink(args.output) as fh:
        reports.write_curves(r_values, t_values, fh)
    return EXIT_OK


def _add_policy(p, *, default=None):
    p.add_argument("--policy", choices=sorted(POLICIES), default=default, required=default is None)
    p.add_argument("--deny", help="comma-separated groups refused by denylist-greedy (1-based)")


def _add_mc(p, *, trials_default=10**5):
    p.add_argument("--trials", type=int, default=trials_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="threads for the trial loop (default: $FORA_SIM_WORKERS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fora-sim",
                                 description="Fair online allocation of indivisible units.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gamma", help="budget distributions and gamma table of the threshold rule")
    p.add_argument("instance")
    p.add_argument("--exact-rational", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of per-group ratios")
    p.add_argument("instance")
    _add_policy(p)
    _add_mc(p)
    p.add_argument("--track-rfe-fr", action="store_true",
                   help="also estimate mean allocation per (slot, group, demand)")
    p.add_argument("--fill-rate", action="store_true", help="add the mean realized fill rate")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("longrun", help="cumulative ratio trace over many days")
    p.add_argument("instance")
    _add_policy(p)
    p.add_argument("--days", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--stride", type=int, default=1, help="emit every n-th day (the last is always kept)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_longrun)

    p = sub.add_parser("exact", help="exact evaluation by enumerating all randomness")
    p.add_argument("instance")
    _add_policy(p)
    p.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
    p.add_argument("--exact-rational", action="store_true")
    p.add_argument("--fill-rate", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bounds", help="closed-form guarantees at the instance load")
    p.add_argument("instance")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("hardgen", help="write a hard instance")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", help="comma-separated priorities, max must be 1")
    p.add_argument("--rho")
    p.add_argument("--eps")
    p.add_argument("--t", type=int)
    p.add_argument("--k", type=int, help="capacity (general-tight defaults to 4)")
    p.add_argument("--lam", help="full-support weight (default rho*eps/Gamma)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_hardgen)

    p = sub.add_parser("audit", help="compare a policy with the policy-independent ceilings")
    p.add_argument("instance")
    _add_policy(p)
    _add_mc(p, trials_default=None)
    p.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
    p.add_argument("--exact-rational", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("report", help="guarantee curves over a load grid")
    p.add_argument("--r", default="0:5:0.1", help="loads as lo:hi:step or a comma list")
    p.add_argument("--t", default="1,2,5,10,100", help="comma-separated horizons ('' for none)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print("invalid instance:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleParams as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StateSpaceExceeded as exc:
        print(f"state space too large: {exc}", file=sys.stderr)
        return EXIT_STATE_SPACE
    except (UsageError, ZeroExpectedDemandGroup, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
