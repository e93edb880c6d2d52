"""Problem instances: capacity, horizon, groups, priorities and arrival probabilities.

Indices are 0-based inside the library (slot ``t``, group ``i``); demands ``j``
are quantities in ``1..K``. Files and CSV output use 1-based labels.

Probabilities are stored as :class:`fractions.Fraction` so the same instance
can feed both floating point code and the rational exact-evaluation mode.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

TOL = 1e-9

TIME_INVARIANT = "time_invariant"
TIME_VARYING = "time_varying"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class InstanceError(ValueError):
    """Raised by :func:`validate` with every violated constraint attached."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class ArrivalEvent:
    slot: int
    group: int
    demand: int


@dataclass(frozen=True)
class NoArrival:
    slot: int


@dataclass(frozen=True)
class LoadSummary:
    r_beta: float
    r_unit: float
    w_beta: float
    per_group_expected_demand: tuple[float, ...]


@dataclass(frozen=True, eq=True)
class Instance:
    """Immutable instance; build it through :func:`validate` or :meth:`create`.

    ``entries`` holds ``(t, i, j, p)`` with ``t`` set to ``None`` for
    time-invariant instances. Entries are sorted canonically (t, i, j) and
    zero-probability cells are dropped.
    """

    capacity: int
    horizon: int
    groups: int
    priorities: tuple[Fraction, ...]
    kind: str
    entries: tuple[tuple[int | None, int, int, Fraction], ...]
    meta: Mapping[str, Any] | None = field(default=None, compare=False, hash=False)

    @classmethod
    def create(cls, capacity, horizon, groups, priorities, entries, *, kind=None, meta=None):
        """Convenience constructor taking 0-based entries; validates everything.

        ``entries`` is an iterable of ``(i, j, p)`` (time-invariant) or
        ``(t, i, j, p)`` (time-varying). ``kind`` defaults from the tuple width.
        """
        entries = [tuple(e) for e in entries]
        if kind is None:
            kind = TIME_VARYING if entries and len(entries[0]) == 4 else TIME_INVARIANT
        raw_entries = []
        for e in entries:
            if kind == TIME_VARYING:
                t, i, j, p = e
                raw_entries.append({"t": t + 1, "i": i + 1, "j": j, "p": p})
            else:
                i, j, p = e
                raw_entries.append({"i": i + 1, "j": j, "p": p})
        raw = {
            "capacity": capacity,
            "horizon": horizon,
            "groups": groups,
            "priorities": list(priorities),
            "arrivals": {"kind": kind, "entries": raw_entries},
        }
        if meta is not None:
            raw["family"] = meta
        return validate(raw)

    @property
    def time_invariant(self) -> bool:
        return self.kind == TIME_INVARIANT

    @property
    def unit_priorities(self) -> bool:
        return all(b == 1 for b in self.priorities)

    def slot_entries(self, t: int) -> tuple[tuple[int, int, Fraction], ...]:
        """Canonically ordered ``(i, j, p)`` for slot ``t``."""
        return self._slot_table[t]

    def no_arrival(self, t: int) -> Fraction:
        mass = sum((p for _, _, p in self.slot_entries(t)), Fraction(0))
        return max(Fraction(0), 1 - mass)

    @cached_property
    def _slot_table(self) -> tuple[tuple[tuple[int, int, Fraction], ...], ...]:
        if self.time_invariant:
            row = tuple((i, j, p) for _, i, j, p in self.entries)
            return (row,) * self.horizon
        rows: list[list[tuple[int, int, Fraction]]] = [[] for _ in range(self.horizon)]
        for t, i, j, p in self.entries:
            rows[t].append((i, j, p))
        return tuple(tuple(r) for r in rows)

    @cached_property
    def slot_cdf(self) -> tuple[np.ndarray, ...]:
        """Cumulative float probabilities per slot in canonical order."""
        out = []
        for t in range(self.horizon):
            probs = np.array([float(p) for _, _, p in self.slot_entries(t)], dtype=np.float64)
            out.append(np.cumsum(probs))
        return tuple(out)

    @cached_property
    def dense(self) -> np.ndarray:
        """Float array ``p[t, i, j-1]`` of shape (T, N, K)."""
        arr = np.zeros((self.horizon, self.groups, self.capacity))
        for t in range(self.horizon):
            for i, j, p in self.slot_entries(t):
                arr[t, i, j - 1] = float(p)
        return arr

    @cached_property
    def beta(self) -> np.ndarray:
        return np.array([float(b) for b in self.priorities])

    def expand(self) -> Instance:
        """Time-varying copy of a time-invariant instance (identity otherwise)."""
        if not self.time_invariant:
            return self
        entries = tuple(
            (t, i, j, p) for t in range(self.horizon) for _, i, j, p in self.entries
        )
        return Instance(self.capacity, self.horizon, self.groups, self.priorities,
                        TIME_VARYING, entries, self.meta)

    def with_unit_priorities(self) -> Instance:
        ones = tuple(Fraction(1) for _ in self.priorities)
        return Instance(self.capacity, self.horizon, self.groups, ones, self.kind,
                        self.entries, self.meta)

    def virtual(self) -> Instance:
        """Arrival process thinned by priority screening: ``p' = beta_i * p``, unit priorities."""
        entries = tuple((t, i, j, self.priorities[i] * p) for t, i, j, p in self.entries)
        entries = tuple(e for e in entries if e[3] > 0)
        ones = tuple(Fraction(1) for _ in self.priorities)
        return Instance(self.capacity, self.horizon, self.groups, ones, self.kind,
                        entries, self.meta)

    def to_json(self) -> dict[str, Any]:
        out_entries = []
        for t, i, j, p in self.entries:
            e: dict[str, Any] = {}
            if t is not None:
                e["t"] = t + 1
            e.update({"i": i + 1, "j": j, "p": _json_number(p)})
            out_entries.append(e)
        doc: dict[str, Any] = {
            "capacity": self.capacity,
            "horizon": self.horizon,
            "groups": self.groups,
            "priorities": [_json_number(b) for b in self.priorities],
            "arrivals": {"kind": self.kind, "entries": out_entries},
        }
        if self.meta:
            doc["family"] = dict(self.meta)
        return doc


def _json_number(x: Fraction) -> float | int | str:
    """Plain number when its decimal form reads back exactly, else an ``"a/b"`` string."""
    if x.denominator == 1:
        return int(x)
    f = float(x)
    if Fraction(repr(f)) == x:
        return f
    return f"{x.numerator}/{x.denominator}"


def _as_fraction(x: Any) -> Fraction:
    if isinstance(x, bool):
        raise TypeError("boolean is not a number")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Real):
        if not math.isfinite(float(x)):
            raise ValueError("non-finite number")
        return Fraction(float(x))
    raise TypeError(f"not a number: {x!r}")


def _as_int(x: Any) -> int:
    if isinstance(x, bool):
        raise TypeError("boolean is not an integer")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    raise TypeError(f"not an integer: {x!r}")


def validate(raw: Mapping[str, Any]) -> Instance:
    """Check a parsed instance document and return the normalized :class:`Instance`.

    Raises :class:`InstanceError` listing every violation found. Violation codes:
    ``Malformed``, ``NegativeProbability``, ``SlotMassExceedsOne``,
    ``DemandOutOfRange``, ``PriorityOutOfRange``, ``PriorityNotNormalized``.
    """
    errs: list[Violation] = []

    def bad(code: str, msg: str) -> None:
        errs.append(Violation(code, msg))

    if not isinstance(raw, Mapping):
        raise InstanceError([Violation("Malformed", "instance document must be an object")])

    ints = {}
    for name in ("capacity", "horizon", "groups"):
        try:
            ints[name] = _as_int(raw[name])
            if ints[name] < 1:
                bad("Malformed", f"{name} must be a positive integer")
        except KeyError:
            bad("Malformed", f"missing field {name!r}")
        except TypeError as exc:
            bad("Malformed", f"{name}: {exc}")
    if errs:
        raise InstanceError(errs)
    K, T, N = ints["capacity"], ints["horizon"], ints["groups"]

    priorities: list[Fraction] = []
    pr = raw.get("priorities")
    if not isinstance(pr, (list, tuple)) or len(pr) != N:
        bad("Malformed", f"priorities must be an array of length {N}")
    else:
        for idx, b in enumerate(pr, start=1):
            try:
                b = _as_fraction(b)
            except (TypeError, ValueError) as exc:
                bad("Malformed", f"priority {idx}: {exc}")
                continue
            if b <= 0 or b > 1 + Fraction(TOL):
                bad("PriorityOutOfRange", f"priority of group {idx} is {float(b)}, outside (0, 1]")
            priorities.append(min(b, Fraction(1)))
        if len(priorities) == N and priorities and abs(max(priorities) - 1) > TOL:
            bad("PriorityNotNormalized", f"max priority is {float(max(priorities))}, expected 1")

    arrivals = raw.get("arrivals")
    kind = None
    cells: dict[tuple[int | None, int, int], Fraction] = {}
    if not isinstance(arrivals, Mapping):
        bad("Malformed", "missing object 'arrivals'")
    else:
        kind = arrivals.get("kind")
        if kind not in (TIME_INVARIANT, TIME_VARYING):
            bad("Malformed", f"arrivals.kind must be {TIME_INVARIANT!r} or {TIME_VARYING!r}")
        entries = arrivals.get("entries", [])
        if not isinstance(entries, (list, tuple)):
            bad("Malformed", "arrivals.entries must be an array")
            entries = []
        for n, e in enumerate(entries, start=1):
            if not isinstance(e, Mapping):
                bad("Malformed", f"entry {n} is not an object")
                continue
            try:
                i = _as_int(e["i"])
                j = _as_int(e["j"])
                p = _as_fraction(e["p"])
            except KeyError as exc:
                bad("Malformed", f"entry {n}: missing {exc.args[0]!r}")
                continue
            except (TypeError, ValueError) as exc:
                bad("Malformed", f"entry {n}: {exc}")
                continue
            t = None
            if kind == TIME_VARYING:
                if "t" not in e:
                    bad("Malformed", f"entry {n}: 't' is required for time-varying arrivals")
                    continue
                try:
                    t = _as_int(e["t"])
                except TypeError as exc:
                    bad("Malformed", f"entry {n}: {exc}")
                    continue
                if not 1 <= t <= T:
                    bad("Malformed", f"entry {n}: slot {t} outside 1..{T}")
                    continue
                t -= 1
            elif kind == TIME_INVARIANT and "t" in e:
                bad("Malformed", f"entry {n}: 't' is not allowed for time-invariant arrivals")
                continue
            if not 1 <= i <= N:
                bad("Malformed", f"entry {n}: group {i} outside 1..{N}")
                continue
            if not 1 <= j <= K:
                bad("DemandOutOfRange", f"entry {n}: demand {j} outside 1..{K}")
                continue
            if p < 0:
                bad("NegativeProbability", f"entry {n}: probability {float(p)} < 0")
                continue
            key = (t, i - 1, j)
            cells[key] = cells.get(key, Fraction(0)) + p

    if kind is not None and not errs:
        slots = [None] if kind == TIME_INVARIANT else list(range(T))
        mass = {s: Fraction(0) for s in slots}
        for (t, _, _), p in cells.items():
            mass[t] += p
        for s, m in mass.items():
            if m > 1 + Fraction(TOL):
                where = "every slot" if s is None else f"slot {s + 1}"
                bad("SlotMassExceedsOne", f"{where}: total arrival probability {float(m)} > 1")

    if errs:
        raise InstanceError(errs)

    def sort_key(item):
        (t, i, j), _ = item
        return (-1 if t is None else t, i, j)

    entries_out = tuple(
        (t, i, j, p) for (t, i, j), p in sorted(cells.items(), key=sort_key) if p > 0
    )
    meta = raw.get("family")
    return Instance(K, T, N, tuple(priorities), kind, entries_out,
                    dict(meta) if isinstance(meta, Mapping) else None)


def load_instance(path: str | Path) -> Instance:
    """Read and validate an instance JSON file (decimals parsed exactly)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceError([Violation("Malformed", f"invalid JSON: {exc}")]) from exc
    return validate(raw)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_json(), indent=2) + "\n", encoding="utf-8")


def expected_demand(instance: Instance, *, exact: bool = False) -> list:
    """Per-group expected total demand ``E[D_i] = sum_t sum_j p_itj * j``."""
    num = Fraction if exact else float
    out = [num(0)] * instance.groups
    reps = instance.horizon if instance.time_invariant else 1
    for _, i, j, p in instance.entries:
        out[i] += num(p) * j * reps
    return out


def load_summary(instance: Instance, *, exact: bool = False) -> LoadSummary:
    """Loads ``R_beta``, ``R`` and ``W_beta = R_beta / T`` plus per-group expected demand."""
    demand = expected_demand(instance, exact=exact)
    num = Fraction if exact else float
    K = instance.capacity
    r_beta = sum((num(b) * d for b, d in zip(instance.priorities, demand)), num(0)) / K
    r_unit = sum(demand, num(0)) / K
    return LoadSummary(r_beta, r_unit, r_beta / instance.horizon, tuple(demand))


def sample_slot(instance: Instance, slot: int, draw: float) -> ArrivalEvent | NoArrival:
    """Map a uniform draw in [0, 1) to the slot's arrival by inverse CDF.

    Pairs are laid out in ascending (group, demand) order starting at 0; the
    residual mass above the last pair is the no-arrival event.
    """
    cdf = instance.slot_cdf[slot]
    k = bisect_right(cdf, draw)
    if k >= len(cdf):
        return NoArrival(slot)
    i, j, _ = instance.slot_entries(slot)[k]
    return ArrivalEvent(slot, i, j)


def positive_demand_groups(instance: Instance) -> list[bool]:
    return [d > 0 for d in expected_demand(instance, exact=True)]


def parse_index_list(text: str | Iterable[int]) -> list[int]:
    """Parse ``"1,3"`` (1-based) into 0-based indices."""
    if not isinstance(text, str):
        return [int(x) for x in text]
    return [int(x) - 1 for x in text.split(",") if x.strip()]
