"""Counting well-separated occupied space-time points in a region of a run."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import Trajectory


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceTimeRegion:
    """Box ``lo <= x <= hi`` (coordinatewise, inclusive) times ``[t0, t1]``."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    t0: float
    t1: float

    def __post_init__(self):
        lo, hi = tuple(int(v) for v in np.atleast_1d(self.lo)), tuple(int(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
            raise RegionError("spatial box is empty")
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 < self.t0:
            raise RegionError("time interval must be finite and nonempty")

    def contains(self, coords: tuple[int, ...]) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, coords, self.hi))


def greedy_points(intervals, t0: float, t1: float, gap: float = 1.0) -> int:
    """Most points in ``[t0, t1]`` lying in ``intervals`` with pairwise spacing ``>= gap``.

    Intervals are half-open ``[s, e)``; an interval reaching past ``t1`` is
    treated as occupied at ``t1`` itself.  Taking the earliest admissible
    point each time is optimal for points on a line.
    """
    count = 0
    last = -math.inf
    for s, e in sorted(intervals):
        closed = e > t1
        s, e = max(s, t0), min(e, t1)
        p = max(s, last + gap)
        while p < e or (closed and p <= e):
            count += 1
            last = p
            p += gap
    return count


def slab_count(trajectory: Trajectory, region: SpaceTimeRegion, species: str = "AB") -> int:
    """Sum over sites of the greedy count of well-separated occupied times."""
    cfg = trajectory.initial
    if len(region.lo) != cfg.dim:
        raise RegionError(f"region has dimension {len(region.lo)}, run has {cfg.dim}")
    if any(v < 0 for v in region.lo) or any(v >= cfg.side for v in region.hi):
        raise RegionError(f"region {region.lo}..{region.hi} leaves the simulated box 0..{cfg.side - 1}")
    if region.t0 < 0 or region.t1 > trajectory.t_end:
        raise RegionError(f"time interval [{region.t0}, {region.t1}] not covered by run [0, {trajectory.t_end}]")
    if species not in ("A", "B", "AB"):
        raise ValueError("species must be A, B or AB")
    total = 0
    for site, iv in trajectory.occupancy_intervals(species).items():
        if region.contains(cfg.coords(site)):
            total += greedy_points(iv, region.t0, region.t1)
    return total
