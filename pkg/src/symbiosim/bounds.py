"""Numerics behind the critical-value bounds: block construction, percolation, supermartingale."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Boundary, LatticeConfiguration, ModelParams, SiteState, Variant, transition_rates
from .engine import Trajectory, run_trials
from .rng import GraphicalRandomSource, hash_uniforms
from .stats import mean_ci, wilson_interval

WET_TARGET = 0.726          # upper bound on the oriented site percolation threshold
CONTOUR_THRESHOLD = 80 / 81  # contour-argument percolation threshold
FAILURE_BUDGET = 1 - WET_TARGET
B0_PRINTED = 0.028281
SMALL_MU = 1 / 1600
# single-type critical values (total birth rate lam split over 2d neighbours), table defaults only
LAMBDA_C1_REFERENCE = 3.29785
LAMBDA_C1_BY_DIM = {1: LAMBDA_C1_REFERENCE, 2: 1.64877}


def b0_log10() -> float:
    """Quarter of the base-10 log of ``1/0.77069``; reproduces the printed ``b0`` to 4e-6."""
    return math.log10(1 / 0.77069) / 4


def b0_natural() -> float:
    """Largest ``b`` with ``1 - exp(-4b) <= 0.22931``."""
    return math.log(1 / 0.77069) / 4


# --------------------------------------------------------------------------- site automaton


def geom_exp_sum(p: float, r: float, n: int, source: GraphicalRandomSource,
                 label: int = 1) -> np.ndarray:
    """``n`` draws of ``X_1 + ... + X_N`` with ``N ~ Geometric(p)`` and ``X_i ~ Exp(r)``."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if r <= 0:
        raise ValueError("r must be positive")
    g = source.generator(label)
    counts = g.geometric(p, size=n)
    x = g.exponential(1 / r, size=int(counts.sum()))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return np.add.reduceat(x, starts)


@dataclass(frozen=True)
class SpreadRates:
    rate1: float
    rate2: float
    lam: float

    def budget(self, c: float) -> float:
        """Time budget ``c`` times the summed means of the two waiting times."""
        return c * (3 * self.lam + 2) / self.lam ** 2

    @staticmethod
    def tail_bound(c: float) -> float:
        return 2 * math.exp(-c)


def ab_spread_rates(lam: float) -> SpreadRates:
    """Exponential rates of the two waiting-time sums for an AB to appear next to an AB."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return SpreadRates(lam * lam / (lam + 2), lam / 2, lam)


@dataclass
class AutomatonSample:
    n: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


def site_automaton(lam: float, trials: int, source: GraphicalRandomSource,
                   label: int = 2) -> AutomatonSample:
    """Simulate a site next to a permanent AB until it becomes AB.

    Empty -> single at rate ``lam``; single -> empty at rate 1; single -> AB at
    rate ``lam/2``.  Returns the number of empty -> single moves and the total
    times spent empty (``t1``) and singly occupied (``t2``).
    """
    g = source.generator(label)
    n = np.zeros(trials, dtype=np.int64)
    t1 = np.zeros(trials)
    t2 = np.zeros(trials)
    live = np.arange(trials)
    up = (lam / 2) / (1 + lam / 2)
    while live.size:
        n[live] += 1
        t1[live] += g.exponential(1 / lam, live.size)
        t2[live] += g.exponential(1 / (1 + lam / 2), live.size)
        live = live[g.random(live.size) >= up]
    return AutomatonSample(n, t1, t2)


# --------------------------------------------------------------------------- block budget


@dataclass(frozen=True)
class BlockBudget:
    c: float
    b: float
    spread_left: float
    spread_right: float
    mu_death: float

    @property
    def failure_bound(self) -> float:
        return self.spread_left + self.spread_right + self.mu_death

    @property
    def satisfied(self) -> bool:
        return self.failure_bound < FAILURE_BUDGET


def block_budget(c: float, b: float) -> BlockBudget:
    if c <= 0 or b <= 0:
        raise ValueError("c and b must be positive")
    return BlockBudget(c, b, 2 * math.exp(-c), 4 * math.exp(-c / 2), -math.expm1(-4 * b))


def block_event_mc(lam: float, mu: float, c: float, trials: int, seed: int,
                   parallelism: int = 1) -> tuple[float, tuple[float, float], int]:
    """Probability that one wet block wets both successors.

    Runs SCP on the closed box ``{-1, 0, 1, 2}`` from an AB at 0 for the block
    time; success means sites -1 and 2 are both AB at that time.  Returns the
    estimate, its one-sided 99% Wilson interval and the success count.
    """
    params = ModelParams(lam=lam, mu=mu, dim=1, side=4, boundary=Boundary.CLOSED)
    if lam == 0:
        return 0.0, (0.0, wilson_interval(0, trials, 0.98)[1]), 0
    t_block = ab_spread_rates(lam).budget(c)
    init = LatticeConfiguration.single(params, SiteState.AB, (1,))
    b = _end_sites(params, init, t_block, trials, seed, parallelism)
    k = int(b.sum())
    return k / trials, wilson_interval(k, trials, 0.98), k


def _end_sites(params, init, t_end, trials, seed, parallelism) -> np.ndarray:
    # the batch kernel reports counts only, so each trial reads the two end sites itself
    idx = np.arange(trials)
    if parallelism <= 1:
        return _end_sites_chunk((params, init, t_end, seed, idx))
    from concurrent.futures import ProcessPoolExecutor

    chunks = np.array_split(idx, parallelism)
    with ProcessPoolExecutor(parallelism) as ex:
        parts = ex.map(_end_sites_chunk, [(params, init, t_end, seed, c) for c in chunks])
    return np.concatenate(list(parts))


def _end_sites_chunk(args):
    params, init, t_end, seed, idx = args
    from .engine import Simulator

    src = GraphicalRandomSource(seed)
    out = np.zeros(idx.size, dtype=bool)
    for j, k in enumerate(idx):
        sim = Simulator(params, init, src, int(k), horizon=t_end)
        sim.advance(t_end)
        out[j] = sim._codes[0] == 3 and sim._codes[3] == 3
    return out


# --------------------------------------------------------------------------- percolation


@dataclass
class PercolationCurve:
    p: float
    width: int
    trials: int
    alive: np.ndarray  # number of trials with a wet site in row k

    @property
    def survival(self) -> np.ndarray:
        return self.alive / self.trials

    def at(self, row: int) -> float:
        return float(self.survival[row])


def oriented_percolation(p: float, rows: int, width: int, trials: int,
                         source: GraphicalRandomSource) -> PercolationCurve:
    """Survival-to-row curve of oriented site percolation from the origin.

    Sites ``(m, n)`` with ``m + n`` even are open with probability ``p``
    using uniforms addressed by absolute coordinates, so curves are coupled
    across ``p`` and nested in ``width`` (columns ``|m| <= width/2``).
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if rows >= 1 << 20 or width >= 1 << 19:
        raise ValueError("rows < 2**20 and width < 2**19 required")
    half = width // 2
    ms = np.arange(-half, half + 1)
    key = int(source.key(0))
    tr = np.arange(trials, dtype=np.int64)[:, None]
    wet = np.zeros((trials, ms.size), dtype=bool)
    wet[:, half] = hash_uniforms(key, _addr(tr[:, 0], np.zeros(1, dtype=np.int64), 0), 0) < p
    alive = np.zeros(rows + 1, dtype=np.int64)
    alive[0] = int(wet.any(axis=1).sum())
    even = (ms % 2) == 0
    for n in range(1, rows + 1):
        reach = np.zeros_like(wet)
        reach[:, 1:] |= wet[:, :-1]
        reach[:, :-1] |= wet[:, 1:]
        reach &= even if n % 2 == 0 else ~even
        if reach.any():
            reach &= hash_uniforms(key, _addr(tr, ms[None, :], n), 0) < p
        wet = reach
        alive[n] = int(wet.any(axis=1).sum())
    return PercolationCurve(p, width, trials, alive)


def _addr(trial, m, n):
    return (np.asarray(trial, dtype=np.int64) << 40) | (np.int64(n) << 20) | (np.asarray(m, dtype=np.int64) + (1 << 19))


# --------------------------------------------------------------------------- lower bound


@dataclass(frozen=True)
class LowerBoundRegion:
    lam: float
    mu: float
    delta_lo: float
    delta_hi: float
    threshold: float
    simplified: float

    @property
    def nonempty(self) -> bool:
        return self.delta_lo < self.delta_hi


def lower_bound_threshold(mu: float) -> float:
    return (-mu + math.sqrt(mu * mu + 8 * mu)) / 4


def lower_bound_simplified(mu: float) -> float:
    return math.sqrt(mu / 2) - mu / 4


def lower_bound_region(lam: float, mu: float) -> LowerBoundRegion:
    """Interval of weights making ``AB + delta*(A + B)`` a supermartingale."""
    if lam <= 0 or mu <= 0:
        raise ValueError("lambda and mu must be positive")
    return LowerBoundRegion(lam, mu, 2 * lam / (lam + 1), mu / (mu + lam),
                            lower_bound_threshold(mu), lower_bound_simplified(mu))


def potential(n_a: np.ndarray, n_b: np.ndarray, n_ab: np.ndarray, delta: float) -> np.ndarray:
    """``M = #AB + delta * (#A-only + #B-only)`` from species counts."""
    return n_ab + delta * ((n_a - n_ab) + (n_b - n_ab))


@dataclass(frozen=True)
class DriftEstimate:
    mean: float
    ci_lo: float
    ci_hi: float
    n: int


def supermartingale_check(trajectories, delta: float) -> DriftEstimate:
    """Mean of ``(M_T - M_0)/T`` over one or more logged trajectories."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    drifts = []
    for tr in trajectories:
        if not isinstance(tr, Trajectory):
            raise TypeError("supermartingale_check needs logged trajectories")
        if tr.t_end <= 0:
            raise ValueError("trajectory has zero length")
        _, c = tr.count_series()
        m = potential(c[:, 0], c[:, 1], c[:, 2], delta)
        drifts.append((m[-1] - m[0]) / tr.t_end)
    m, lo, hi = mean_ci(drifts)
    return DriftEstimate(m, lo, hi, len(drifts))


def potential_path(tr: Trajectory, delta: float) -> np.ndarray:
    _, c = tr.count_series()
    return potential(c[:, 0], c[:, 1], c[:, 2], delta)


def supermartingale_mc(lam: float, mu: float, delta: float, t_end: float, trials: int, seed: int,
                       side: int = 41, parallelism: int = 1) -> DriftEstimate:
    """Drift estimate from ``trials`` runs started from one AB (batch kernel)."""
    params = ModelParams(lam=lam, mu=mu, dim=1, side=side, boundary=Boundary.CLOSED)
    init = LatticeConfiguration.single(params)
    b = run_trials(params, init, t_end, trials, seed, parallelism=parallelism)
    m_end = potential(b.final[:, 0], b.final[:, 1], b.final[:, 2], delta)
    m, lo, hi = mean_ci((m_end - 1.0) / t_end)
    return DriftEstimate(m, lo, hi, trials)


def generator_drift(config: LatticeConfiguration, params: ModelParams, delta: float) -> float:
    """Exact instantaneous drift of ``M`` in ``config`` (sum of rate times jump)."""
    if params.variant is not Variant.SCP:
        raise ValueError("generator drift is defined for SCP")
    weight = np.array([0.0, delta, delta, 1.0])
    total = 0.0
    for i in np.flatnonzero(config.states | _neighbor_any(config)):
        x = config.coords(int(i))
        st = int(config.states[i])
        r = transition_rates(config, x, params)
        for rate, new in ((r.a_birth, st | 1), (r.b_birth, st | 2), (r.a_death, st & 2),
                          (r.b_death, st & 1)):
            if rate:
                total += rate * (weight[new] - weight[st])
    return float(total)


def _neighbor_any(config: LatticeConfiguration) -> np.ndarray:
    nbr = config.neighbors()
    s = np.concatenate([config.states, [0]]).astype(np.uint8)
    occ = (s[nbr] != 0).any(axis=1)
    return occ.astype(np.uint8)


# --------------------------------------------------------------------------- block constant


def block_inequality(a: float, kappa: float, lam: float, d: int) -> float:
    """Log of the left side of the block-constant condition; negative means satisfied."""
    return a * math.log(kappa) + 8 - 4 * math.log(-math.expm1(-lam / (2 * d)))


def block_constant_a(kappa: float, lam: float, d: int = 1) -> float:
    """Smallest ``a`` on a 1e-9 grid that satisfies the block-constant condition strictly."""
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    if lam <= 0 or d < 1:
        raise ValueError("need lambda > 0 and d >= 1")
    raw = (8 - 4 * math.log(-math.expm1(-lam / (2 * d)))) / -math.log(kappa)
    a = math.ceil(raw * 1e9) / 1e9
    while block_inequality(a, kappa, lam, d) >= 0:
        a += 1e-9
    return a


# --------------------------------------------------------------------------- report


def bound_c1(mu: float, d: int = 1) -> float:
    return math.sqrt(8 * mu - 4 * mu * mu) if d == 1 else lower_bound_simplified(mu)


def bound_c2(mu: float, d: int = 1, lambda_c1: float = LAMBDA_C1_REFERENCE) -> float:
    if mu >= SMALL_MU:
        return lambda_c1
    return 40 * math.sqrt(mu) if d == 1 else min(40 * d * math.sqrt(mu), lambda_c1)


REPORT_COLUMNS = ("d", "mu", "C1", "C2", "C2_case", "lambda_c1_proxy")


def bounds_report(mus, dims=(1, 2), lambda_c1: dict | float = LAMBDA_C1_BY_DIM) -> list[dict]:
    """Table of ``C1(mu) <= lambda_c(mu) <= C2(mu)``; ``lambda_c1`` may be per dimension."""
    rows = []
    for d in dims:
        lc = lambda_c1[d] if isinstance(lambda_c1, dict) else lambda_c1
        for mu in map(float, mus):
            rows.append({"d": d, "mu": repr(mu), "C1": repr(bound_c1(mu, d)),
                         "C2": repr(bound_c2(mu, d, lc)),
                         "C2_case": "small-mu" if mu < SMALL_MU else "lambda_c(1)",
                         "lambda_c1_proxy": repr(lc)})
    return rows
