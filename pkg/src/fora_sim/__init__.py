"""Fair online allocation of indivisible units: policies, simulation and exact checks."""

import os

# the bundled TBB is too old for numba; fall back quietly to the portable layer
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .model import ArrivalEvent, Instance, InstanceError, NoArrival, load_instance, load_summary, validate  # noqa: E402

__all__ = ["ArrivalEvent", "Instance", "InstanceError", "NoArrival", "load_instance",
           "load_summary", "validate"]
__version__ = "0.1.0"
