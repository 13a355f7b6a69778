"""Symbiotic biased voter model: the two-front chain, its gap law and edge speed.

Species ``s`` occupies ``(-inf, r_s]``.  Each front advances at rate
``lam/2``.  A front whose site is doubly occupied (trailing or tied) dies at
rate ``mu``; a strictly leading front dies at rate 1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize, stats

from .rng import GraphicalRandomSource, u01


class NonSummableError(ValueError):
    pass


@dataclass(frozen=True)
class FrontState:
    r_A: int
    r_B: int

    @property
    def gap(self) -> int:
        return abs(self.r_A - self.r_B)

    @property
    def edge(self) -> int:
        return max(self.r_A, self.r_B)


@dataclass(frozen=True)
class GapChain:
    lam: float
    mu: float

    def up(self, n: int) -> float:
        return self.lam + 2 * self.mu if n == 0 else self.mu + self.lam / 2

    def down(self, n: int) -> float:
        return 0.0 if n == 0 else 1 + self.lam / 2

    def generator(self, n_max: int) -> np.ndarray:
        """Q-matrix truncated to ``0..n_max`` (upward jumps from ``n_max`` suppressed)."""
        q = np.zeros((n_max + 1, n_max + 1))
        for n in range(n_max + 1):
            if n < n_max:
                q[n, n + 1] = self.up(n)
            if n > 0:
                q[n, n - 1] = self.down(n)
            q[n, n] = -q[n].sum()
        return q


def _norm_const(lam: float, mu: float) -> float:
    return 1.0 / ((1 + lam / 2) / (lam + 2 * mu) + (lam + 2) / (2 * (1 - mu)))


@dataclass(frozen=True)
class GapLaw:
    pi: np.ndarray
    tail: float
    c: float
    ratio: float


def gap_stationary(lam: float, mu: float, n_max: int = 200) -> GapLaw:
    """Stationary law of the gap on ``0..n_max`` plus the mass beyond ``n_max``."""
    if mu >= 1:
        raise NonSummableError(f"gap law is not summable for mu={mu} >= 1")
    if lam < 0 or mu < 0 or lam + 2 * mu <= 0:
        raise ValueError("need lam >= 0, mu >= 0 and lam + 2 mu > 0")
    c = _norm_const(lam, mu)
    ratio = (lam + 2 * mu) / (lam + 2)
    n = np.arange(1, n_max + 1)
    pi = np.empty(n_max + 1)
    pi[0] = c * (1 + lam / 2) / (lam + 2 * mu)
    pi[1:] = c * ratio ** (n - 1)
    tail = c * ratio ** n_max / (1 - ratio)
    return GapLaw(pi, float(tail), c, ratio)


def edge_drift_paper(lam: float, mu: float) -> float:
    """Equilibrium edge drift in the bracketed closed form (zero at ``sqrt(8mu - 4mu^2)``)."""
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    c = _norm_const(lam, mu)
    return c * (1 + lam / 2) * ((lam - 2 * mu) / (lam + 2 * mu) + (lam / 2 - 1) / (1 - mu))


def drift_bracket(lam: float, mu: float) -> float:
    return (lam - 2 * mu) / (lam + 2 * mu) + (lam / 2 - 1) / (1 - mu)


def max_front_drift(lam: float, mu: float) -> float:
    """Equilibrium drift of ``max(r_A, r_B)`` from exact per-state accounting.

    At a tie either front may advance the maximum (rate ``lam``) and a single
    death leaves it in place; with a gap only the leader moves it
    (``+1`` at ``lam/2``, ``-1`` at rate 1).
    """
    pi0 = gap_stationary(lam, mu, 0).pi[0]
    return lam * pi0 + (lam / 2 - 1) * (1 - pi0)


def sbvm_critical(mu: float) -> float:
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    return math.sqrt(8 * mu - 4 * mu * mu)


def max_front_critical(mu: float) -> float:
    """Zero of :func:`max_front_drift` in ``lam``."""
    return optimize.brentq(lambda l: max_front_drift(l, mu), 1e-9, 2.0, xtol=1e-14)


# --------------------------------------------------------------------------- Monte Carlo


@njit(cache=True)
def _front_chain(key, lam, mu, t_end, sample_t, n_cap):
    ra = 0
    rb = 0
    t = 0.0
    occ = np.zeros(n_cap + 1)
    ups = np.zeros(n_cap + 1, dtype=np.int64)
    downs = np.zeros(n_cap + 1, dtype=np.int64)
    pos = np.empty((sample_t.size, 2), dtype=np.int64)
    si = 0
    k = 0
    half = 0.5 * lam
    while True:
        da = mu if ra <= rb else 1.0
        db = mu if rb <= ra else 1.0
        total = 2 * half + da + db
        t_next = t - math.log(u01(key, k, 0, 0)) / total
        while si < sample_t.size and sample_t[si] < t_next and sample_t[si] <= t_end:
            pos[si, 0] = ra
            pos[si, 1] = rb
            si += 1
        n = abs(ra - rb)
        idx = n if n < n_cap else n_cap
        if t_next > t_end:
            occ[idx] += t_end - t
            break
        occ[idx] += t_next - t
        t = t_next
        u = u01(key, k, 1, 0) * total
        if u < half:
            ra += 1
        elif u < 2 * half:
            rb += 1
        elif u < 2 * half + da:
            ra -= 1
        else:
            rb -= 1
        m = abs(ra - rb)
        if m > n:
            ups[idx] += 1
        else:
            downs[idx] += 1
        k += 1
    return pos[:si], occ, ups, downs, k


@dataclass
class FrontRun:
    lam: float
    mu: float
    t_end: float
    sample_t: np.ndarray
    r_A: np.ndarray
    r_B: np.ndarray
    gap_time: np.ndarray
    gap_up: np.ndarray
    gap_down: np.ndarray
    n_events: int
    speed: float
    speed_ci: tuple[float, float]
    speed_A: float
    speed_B: float

    @property
    def edge(self) -> np.ndarray:
        return np.maximum(self.r_A, self.r_B)

    def occupation(self) -> np.ndarray:
        """Fraction of time spent at each gap (last bin is ``>= n_cap``)."""
        return self.gap_time / self.gap_time.sum()

    def empirical_rates(self) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.gap_up / self.gap_time, self.gap_down / self.gap_time


def _slope(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(t, y, 1)[0])


def simulate_front(lam: float, mu: float, t_end: float, source: GraphicalRandomSource,
                   trial: int = 0, n_samples: int = 2000, n_cap: int = 400,
                   batches: int = 20) -> FrontRun:
    """Exact simulation of the front pair started tied at the origin.

    The speed is the least-squares slope of ``max(r_A, r_B)`` over the second
    half of the run; its 95% interval comes from batch means of the
    displacement over that half.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if lam < 0 or not 0 <= mu <= 1:
        raise ValueError("need lam >= 0 and mu in [0, 1]")
    st = np.linspace(0.0, t_end, n_samples + 1)
    pos, occ, ups, downs, k = _front_chain(np.uint64(source.key(trial)), float(lam), float(mu),
                                           float(t_end), st, n_cap)
    st = st[: pos.shape[0]]
    ra, rb = pos[:, 0].astype(float), pos[:, 1].astype(float)
    edge = np.maximum(ra, rb)
    sel = st >= t_end / 2
    speed = _slope(st[sel], edge[sel])
    ts, es = st[sel], edge[sel]
    cuts = np.linspace(0, ts.size - 1, batches + 1).astype(int)
    v = np.array([(es[b] - es[a]) / (ts[b] - ts[a]) for a, b in zip(cuts[:-1], cuts[1:]) if b > a])
    half = float(stats.t.ppf(0.975, v.size - 1)) * v.std(ddof=1) / math.sqrt(v.size)
    return FrontRun(lam, mu, t_end, st, pos[:, 0], pos[:, 1], occ, ups, downs, int(k), speed,
                    (speed - half, speed + half), _slope(st[sel], ra[sel]),
                    _slope(st[sel], rb[sel]))


def mc_zero_crossing(mu: float, t_end: float, source: GraphicalRandomSource, lo: float = 0.5,
                     hi: float = 2.5, tol: float = 0.01, trial: int = 0) -> tuple[float, float]:
    """Bracket the sign change of the simulated edge speed in ``lam``.

    All evaluations share the same random stream (common random numbers).
    """
    f = lambda l: simulate_front(l, mu, t_end, source, trial).speed
    if f(lo) >= 0 or f(hi) <= 0:
        raise ValueError(f"speed does not change sign on [{lo}, {hi}] at mu={mu}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


SBVM_CSV_COLUMNS = ("lambda", "mu", "pi0", "ratio", "drift_paper", "lambda_c_formula", "mc_speed",
                    "mc_ci_lo", "mc_ci_hi")


def sbvm_row(lam: float, mu: float, run: FrontRun | None = None) -> dict:
    law = gap_stationary(lam, mu, 0)
    row = {"lambda": repr(lam), "mu": repr(mu), "pi0": repr(float(law.pi[0])),
           "ratio": repr(law.ratio), "drift_paper": repr(edge_drift_paper(lam, mu)),
           "lambda_c_formula": repr(sbvm_critical(mu)), "mc_speed": "", "mc_ci_lo": "",
           "mc_ci_hi": ""}
    if run is not None:
        row.update(mc_speed=repr(run.speed), mc_ci_lo=repr(run.speed_ci[0]),
                   mc_ci_hi=repr(run.speed_ci[1]))
    return row


def write_sbvm_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SBVM_CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
