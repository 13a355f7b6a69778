import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from symbiosim.core import Boundary, LatticeConfiguration, ModelParams, SiteState
from symbiosim.engine import Trajectory, simulate
from symbiosim.rng import GraphicalRandomSource
from symbiosim.slab import RegionError, SpaceTimeRegion, greedy_points, slab_count


def frozen(states, t_end):
    """A run with no events at all."""
    p = ModelParams(lam=0.0, side=len(states), boundary=Boundary.CLOSED)
    init = LatticeConfiguration(1, len(states), Boundary.CLOSED, np.array(states))
    e = np.empty(0)
    return Trajectory(p, init, t_end, e, e.astype(np.int64), e.astype(np.int8),
                      e.astype(np.int64), e.astype(np.uint8))


def test_constant_site_counts_integer_points():
    assert slab_count(frozen([3], 3.5), SpaceTimeRegion((0,), (0,), 0.0, 3.5)) == 4


def test_empty_run_counts_nothing():
    assert slab_count(frozen([0, 0, 0], 5.0), SpaceTimeRegion((0,), (2,), 0.0, 5.0)) == 0


def test_short_stay_counts_once():
    assert greedy_points([(0.0, 0.9)], 0.0, 3.5) == 1


def test_species_selection():
    tr = frozen([1, 2, 3], 2.0)
    reg = SpaceTimeRegion((0,), (2,), 0.0, 2.0)
    assert slab_count(tr, reg, "A") == 2 * 2
    assert slab_count(tr, reg, "B") == 2 * 2
    assert slab_count(tr, reg, "AB") == 2
    with pytest.raises(ValueError):
        slab_count(tr, reg, "C")


def test_region_errors():
    tr = frozen([3, 3], 2.0)
    with pytest.raises(RegionError):
        SpaceTimeRegion((1,), (0,), 0.0, 1.0)
    with pytest.raises(RegionError):
        SpaceTimeRegion((0,), (1,), 2.0, 1.0)
    with pytest.raises(RegionError):
        slab_count(tr, SpaceTimeRegion((0,), (2,), 0.0, 1.0))
    with pytest.raises(RegionError):
        slab_count(tr, SpaceTimeRegion((0,), (1,), 0.0, 3.0))
    with pytest.raises(RegionError):
        slab_count(tr, SpaceTimeRegion((0, 0), (1, 1), 0.0, 1.0))


def brute_force(intervals, t0, t1):
    """Longest chain over candidate points ``start + k`` via dynamic programming.

    Some optimal set always consists of such points: shifting each point left
    until it hits an interval start or the previous point plus one keeps it
    admissible.
    """
    cands = set()
    for s, e in intervals:
        s = max(s, t0)
        k = 0
        while s + k < t1 + 1:
            cands.add(round(s + k, 9))
            k += 1
    ok = sorted(c for c in cands if c <= t1 and any(s <= c < e for s, e in intervals))
    best = []
    for j, c in enumerate(ok):
        prev = [best[i] for i in range(j) if c - ok[i] >= 1 - 1e-9]
        best.append(1 + max(prev, default=0))
    return max(best, default=0)


@settings(max_examples=150)
@given(st.lists(st.tuples(st.floats(0, 8), st.floats(0.01, 2.5)), max_size=6))
def test_greedy_matches_brute_force(raw):
    # disjoint half-open intervals inside [0, 10]
    iv, last = [], 0.0
    for s, w in sorted(raw):
        s = max(s, last)
        e = min(s + w, 10.0)
        if e > s:
            iv.append((round(s, 6), round(e, 6)))
            last = e + 1e-3
    # integer spans between endpoints are float ties; both answers are defensible there
    ends = [v for pair in iv for v in pair]
    assume(all(abs(b - a - round(b - a)) > 1e-7 for a in ends + [0.0, 10.0] for b in ends if a != b))
    assert greedy_points(iv, 0.0, 10.0) == brute_force(iv, 0.0, 10.0)


def test_counts_on_simulated_run_are_consistent():
    p = ModelParams(lam=2.5, mu=0.3, side=15, boundary=Boundary.CLOSED)
    tr = simulate(p, LatticeConfiguration.single(p), GraphicalRandomSource(3), 12.0)
    full = slab_count(tr, SpaceTimeRegion((0,), (14,), 0.0, 12.0))
    halves = slab_count(tr, SpaceTimeRegion((0,), (6,), 0.0, 12.0)) + \
        slab_count(tr, SpaceTimeRegion((7,), (14,), 0.0, 12.0))
    assert full == halves
    assert slab_count(tr, SpaceTimeRegion((0,), (14,), 0.0, 12.0), "A") >= full
    assert slab_count(tr, SpaceTimeRegion((0,), (14,), 0.0, 6.0)) <= full
    assert full >= 1  # the starting AB is counted at time 0
