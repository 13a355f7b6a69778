"""Exact event-driven simulation of SCP, SCPD and the single-type contact process."""
from __future__ import annotations

import base64
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .core import Boundary, LatticeConfiguration, ModelParams, SiteState, Variant, neighbor_table
from .rng import GraphicalRandomSource
from .stats import wilson_interval

log = logging.getLogger(__name__)

EVENT_NAMES = ("birth_A", "birth_B", "death_mu_A", "death_mu_B",
               "death_solo_A", "death_solo_B", "stir_A", "stir_B")


class Absorbed(RuntimeError):
    """No clock can change the configuration any more."""


class DiagnosticError(RuntimeError):
    """A numerical diagnostic failed (non-monotone curve, bad fit, ...)."""


class FitError(DiagnosticError):
    pass


def edge_mask(dim: int, side: int) -> np.ndarray:
    """Sites on the faces of the box."""
    idx = np.arange(side ** dim)
    coords = np.stack(np.unravel_index(idx, (side,) * dim), axis=1)
    return np.any((coords == 0) | (coords == side - 1), axis=1)


def _pack(params: ModelParams, source: GraphicalRandomSource, horizon: float):
    if params.variant is Variant.SBVM:
        raise ValueError("SBVM is simulated by symbiosim.sbvm.simulate_front, not on a lattice")
    d = params.dim
    stirring = params.variant is Variant.SCPD
    fp = np.array([params.lam / (2 * d), params.mu, 1.0 - params.mu, params.stir_rate,
                   source.birth_block, horizon], dtype=np.float64)
    ip = np.array([d, kernel.n_slots(d, stirring), 1 if params.variant is Variant.SINGLE else 2,
                   int(stirring), int(source.swap_species)], dtype=np.int64)
    return fp, ip


def _check_config(params: ModelParams, config: LatticeConfiguration) -> None:
    if (config.dim, config.side, config.boundary) != (params.dim, params.side, params.boundary):
        raise ValueError("configuration geometry does not match the parameters")
    if params.variant is Variant.SINGLE and config.n_B:
        raise ValueError("single-type contact process cannot carry B particles")


@dataclass
class Trajectory:
    """Event log plus sampled counts of one run.

    Events are ``(time, site, code, partner, state)`` where ``code`` indexes
    :data:`EVENT_NAMES`, ``site`` is the site whose state changed (the target
    of a birth, the first site of a stirring pair), ``partner`` the source of
    a birth or the second site of a swap, and ``state`` the resulting code at
    ``site``.
    """

    params: ModelParams
    initial: LatticeConfiguration
    t_end: float
    times: np.ndarray
    sites: np.ndarray
    codes: np.ndarray
    partners: np.ndarray
    states: np.ndarray
    sample_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    samples: np.ndarray = field(default_factory=lambda: np.empty((0, 3), dtype=np.int64))
    boundary_hit: bool = False

    @property
    def n_events(self) -> int:
        return self.times.size

    def replay(self, t: float | None = None) -> LatticeConfiguration:
        """Configuration at time ``t`` (default: the end of the run)."""
        s = self.initial.states.copy()
        for k in range(self.n_events):
            if t is not None and self.times[k] > t:
                break
            _apply(s, int(self.sites[k]), int(self.codes[k]), int(self.partners[k]))
        return LatticeConfiguration(self.initial.dim, self.initial.side, self.initial.boundary, s)

    def count_series(self) -> tuple[np.ndarray, np.ndarray]:
        """Piecewise-constant ``(times, counts)`` with counts ``(n_A, n_B, n_AB)`` after each event."""
        s = self.initial.states.copy()
        out = np.empty((self.n_events + 1, 3), dtype=np.int64)
        cur = self.initial.recount()
        out[0] = cur
        for k in range(self.n_events):
            x, p = int(self.sites[k]), int(self.partners[k])
            touched = (x, p) if self.codes[k] // 2 == kernel.EV_STIR else (x,)
            before = sum(_code_vec(int(s[i])) for i in touched)
            _apply(s, x, int(self.codes[k]), p)
            cur = cur - before + sum(_code_vec(int(s[i])) for i in touched)
            out[k + 1] = cur
        return np.concatenate([[0.0], self.times]), out

    def occupancy_intervals(self, species: str) -> dict[int, list[tuple[float, float]]]:
        """Per site, the maximal time intervals ``[start, end)`` during which it carries ``species``.

        ``species`` is ``"A"``, ``"B"`` or ``"AB"``; intervals are clipped to
        ``[0, t_end]``.
        """
        test = {"A": lambda c: c & 1, "B": lambda c: c >> 1, "AB": lambda c: c == 3}[species]
        s = self.initial.states.copy()
        start: dict[int, float] = {int(i): 0.0 for i in np.flatnonzero([test(int(c)) for c in s])}
        out: dict[int, list[tuple[float, float]]] = {}
        for k in range(self.n_events):
            x, p = int(self.sites[k]), int(self.partners[k])
            touched = (x, p) if self.codes[k] // 2 == kernel.EV_STIR else (x,)
            _apply(s, x, int(self.codes[k]), p)
            t = float(self.times[k])
            for i in touched:
                on = bool(test(int(s[i])))
                if on and i not in start:
                    start[i] = t
                elif not on and i in start:
                    out.setdefault(i, []).append((start.pop(i), t))
        for i, t0 in start.items():
            out.setdefault(i, []).append((t0, self.t_end))
        return out

    def records(self):
        for k in range(self.n_events):
            yield {"t": float(self.times[k]), "site": int(self.sites[k]),
                   "code": EVENT_NAMES[int(self.codes[k])], "partner": int(self.partners[k])}


def _code_vec(c: int) -> np.ndarray:
    return np.array([c & 1, c >> 1, int(c == 3)], dtype=np.int64)


def _apply(s: np.ndarray, x: int, code: int, partner: int) -> None:
    kind, sp = divmod(code, 2)
    bit = np.uint8(1 << sp)
    if kind == kernel.EV_BIRTH:
        s[x] |= bit
    elif kind == kernel.EV_STIR:
        bx, by = s[x] & bit, s[partner] & bit
        s[x] = (s[x] & ~bit) | by
        s[partner] = (s[partner] & ~bit) | bx
    else:
        s[x] &= ~bit


class Simulator:
    """Resumable exact simulation of one trial.

    The simulator owns its configuration; ``source`` and ``trial`` fix every
    clock of the graphical representation, so two simulators built from the
    same source differ only through their parameters and initial states.
    A finite ``horizon`` bounds the clock search, which matters when some
    rate is tiny but positive.
    """

    def __init__(self, params: ModelParams, config: LatticeConfiguration,
                 source: GraphicalRandomSource, trial: int = 0, t0: float = 0.0,
                 horizon: float = math.inf, log_events: bool = False, log_capacity: int = 4096):
        _check_config(params, config)
        self.params = params
        self.source = source
        self.trial = trial
        self._initial = config.copy()
        self._fp, self._ip = _pack(params, source, horizon)
        self._key = np.uint64(source.key(trial))
        self._codes = config.states.copy()
        self._nbr = neighbor_table(params.dim, params.side, params.boundary)
        self._edge = edge_mask(params.dim, params.side)
        nclocks = self._codes.size * 2 * int(self._ip[1])
        self._active = np.zeros(nclocks, dtype=np.bool_)
        self._ver = np.zeros(nclocks, dtype=np.int64)
        cap = 2 * nclocks + 16
        self._ht = np.empty(cap)
        self._hc = np.empty(cap, dtype=np.int64)
        self._hv = np.empty(cap, dtype=np.int64)
        self._hsize = np.zeros(1, dtype=np.int64)
        self._counts = np.zeros(3, dtype=np.int64)
        self._flags = np.zeros(2, dtype=np.int64)
        self._now = np.array([float(t0)])
        self._t0 = t0
        kernel.init_clocks(t0, self._codes, self._nbr, self._fp, self._ip, self._key, self._active,
                           self._ver, self._ht, self._hc, self._hv, self._hsize, self._counts)
        if np.any(self._edge & (self._codes != 0)):
            self._flags[0] = 1
        self._log_on = log_events
        n = log_capacity if log_events else 0
        self._log = [np.empty(n), np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64),
                     np.empty(n, dtype=np.int64), np.empty(n, dtype=np.uint8)]
        self._log_n = np.zeros(1, dtype=np.int64)
        self._samples_t = np.empty(0)
        self._samples = np.empty((0, 3), dtype=np.int64)

    @property
    def time(self) -> float:
        return float(self._now[0])

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(int(c) for c in self._counts)

    @property
    def config(self) -> LatticeConfiguration:
        """A snapshot of the current configuration."""
        return LatticeConfiguration(self.params.dim, self.params.side, self.params.boundary,
                                    self._codes.copy())

    @property
    def n_events(self) -> int:
        return int(self._flags[1])

    @property
    def boundary_hit(self) -> bool:
        return bool(self._flags[0])

    def peek(self) -> float:
        """Time of the next effective event (``inf`` if none)."""
        return float(kernel._peek(self._ht, self._hc, self._hv, self._hsize, self._active, self._ver))

    def _run(self, t_end: float, max_events: int, sample_t: np.ndarray | None = None) -> int:
        st = np.empty(0) if sample_t is None else np.ascontiguousarray(sample_t, dtype=float)
        out = np.zeros((st.size, 3), dtype=np.int64)
        si = np.zeros(1, dtype=np.int64)
        while True:
            status = kernel.run(self._codes, self._nbr, self._edge, self._fp, self._ip, self._key,
                                self._active, self._ver, self._ht, self._hc, self._hv, self._hsize,
                                self._counts, self._flags, self._now, float(t_end), max_events,
                                self._log_on, *self._log, self._log_n, st, out, si)
            if status != kernel.LOG_FULL:
                break
            self._log = [np.concatenate([a, np.empty_like(a)]) for a in self._log]
        if st.size:
            self._samples_t = np.concatenate([self._samples_t, st[: si[0]]])
            self._samples = np.concatenate([self._samples, out[: si[0]]])
        return status

    def step(self) -> float:
        """Apply the next effective event and return its time."""
        if self._run(math.inf, 1) == kernel.ABSORBED:
            raise Absorbed(f"no effective clock at t={self.time} (counts {self.counts})")
        return self.time

    def advance(self, t_end: float, sample_times=None) -> bool:
        """Run to ``t_end``; returns False if the dynamics froze before it."""
        if t_end < self.time:
            raise ValueError(f"cannot advance backwards from {self.time} to {t_end}")
        if t_end > self._fp[5]:
            raise ValueError(f"t_end={t_end} lies beyond the simulator horizon {self._fp[5]}")
        return self._run(t_end, np.iinfo(np.int64).max, sample_times) == kernel.DONE

    def trajectory(self) -> Trajectory:
        if not self._log_on:
            raise ValueError("simulator was built without log_events")
        n = int(self._log_n[0])
        t, site, code, partner, state = (a[:n].copy() for a in self._log)
        return Trajectory(self.params, self._initial, self.time, t, site, code, partner, state,
                          self._samples_t.copy(), self._samples.copy(), self.boundary_hit)


def step(config: LatticeConfiguration, params: ModelParams, source: GraphicalRandomSource,
         now: float, trial: int = 0) -> tuple[float, LatticeConfiguration]:
    """Next event after ``now`` from ``config``; raises :class:`Absorbed` if none."""
    sim = Simulator(params, config, source, trial, t0=now)
    t = sim.step()
    return t, sim.config


def simulate(params: ModelParams, config: LatticeConfiguration, source: GraphicalRandomSource,
             t_end: float, sample_times=None, trial: int = 0) -> Trajectory:
    """Full event log of one run on ``[0, t_end]``."""
    sim = Simulator(params, config, source, trial, horizon=t_end, log_events=True)
    sim.advance(t_end, sample_times)
    return sim.trajectory()


# --------------------------------------------------------------------------- trials


def default_side(t_max: float, lam: float, dim: int = 1, cap: int = 201) -> int:
    """Odd box side keeping a cluster grown from the centre off the faces.

    A linear-growth bound gives ``2 * t_max * (1 + lam)``; for ``dim > 1`` the
    side is capped at ``cap`` and contamination is reported per trial instead.
    """
    side = int(math.ceil(2 * t_max * (1 + lam))) + 3
    if dim > 1:
        side = min(side, cap)
    return side | 1


@dataclass(frozen=True)
class TrialBatch:
    final: np.ndarray
    boundary_hit: np.ndarray
    n_events: np.ndarray
    samples: np.ndarray


def _batch_chunk(args) -> TrialBatch:
    params, init_states, seed, birth_block, trial0, n, t_end, sample_t, max_events = args
    source = GraphicalRandomSource(seed, birth_block=birth_block)
    fp, ip = _pack(params, source, t_end)
    nbr = neighbor_table(params.dim, params.side, params.boundary)
    edge = edge_mask(params.dim, params.side)
    out = kernel.batch(init_states, nbr, edge, fp, ip, np.uint64(seed), trial0, n, float(t_end),
                       np.ascontiguousarray(sample_t, dtype=float), max_events)
    return TrialBatch(*out)


def run_trials(params: ModelParams, initial: LatticeConfiguration, t_end: float, trials: int,
               base_seed: int, trial0: int = 0, sample_times=None, parallelism: int = 1,
               birth_block: float = 1.0, max_events: int = 10**9) -> TrialBatch:
    """Independent runs on streams ``(base_seed, trial0 + k)``.

    Results are concatenated in trial order, so they do not depend on
    ``parallelism``.
    """
    _check_config(params, initial)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    st = np.empty(0) if sample_times is None else np.asarray(sample_times, dtype=float)
    workers = max(1, min(int(parallelism), trials))
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(params, initial.states.copy(), base_seed, birth_block, trial0 + int(a), int(b - a),
             t_end, st, max_events) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_batch_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_batch_chunk, jobs))
    return TrialBatch(*(np.concatenate([getattr(p, f) for p in parts])
                        for f in ("final", "boundary_hit", "n_events", "samples")))


def _survived(final: np.ndarray, threshold: int | None) -> np.ndarray:
    ok = (final[:, 0] > 0) & (final[:, 1] > 0)
    if threshold is not None:
        ok &= final[:, 2] >= threshold
    return ok


@dataclass(frozen=True)
class TrialResult:
    survived: bool
    boundary_hit: bool
    counts: tuple[int, int, int]


def survival_trial(params: ModelParams, t_max: float, source: GraphicalRandomSource,
                   threshold: int | None = None, trial: int = 0) -> TrialResult:
    """One run from a single AB at the box centre; survival means both species alive at ``t_max``.

    With ``threshold`` set, at least that many AB sites are also required.
    For the single-type process survival means the A species is alive.
    """
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    sim = Simulator(params, _initial_single(params), source, trial, horizon=t_max)
    sim.advance(t_max)
    final = np.array([sim.counts])
    hit = sim.boundary_hit
    ok = _alive(params, final, threshold)[0]
    if hit:
        log.warning("survival trial touched the box boundary (side=%d, t_max=%g)", params.side, t_max)
    return TrialResult(bool(ok), bool(hit), tuple(int(c) for c in final[0]))


def _initial_single(params: ModelParams) -> LatticeConfiguration:
    state = SiteState.A if params.variant is Variant.SINGLE else SiteState.AB
    return LatticeConfiguration.single(params, state)


def _alive(params: ModelParams, final: np.ndarray, threshold: int | None) -> np.ndarray:
    if params.variant is Variant.SINGLE:
        return final[:, 0] > 0
    return _survived(final, threshold)


@dataclass(frozen=True)
class SurvivalStats:
    params: ModelParams
    t_max: float
    trials: int
    successes: int
    seed: int
    boundary_hits: int = 0
    threshold: int | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    CSV_COLUMNS = ("variant", "d", "lambda", "mu", "epsilon", "t_max", "trials", "successes",
                   "estimate", "ci_lo", "ci_hi", "seed")

    def row(self) -> dict:
        lo, hi = self.ci
        p = self.params
        return {"variant": p.variant.value, "d": p.dim, "lambda": repr(p.lam), "mu": repr(p.mu),
                "epsilon": "" if p.epsilon is None else repr(p.epsilon), "t_max": repr(self.t_max),
                "trials": self.trials, "successes": self.successes,
                "estimate": repr(self.estimate), "ci_lo": repr(lo), "ci_hi": repr(hi),
                "seed": self.seed}


def estimate_survival(params: ModelParams, t_max: float, trials: int, base_seed: int,
                      parallelism: int = 1, threshold: int | None = None,
                      birth_block: float = 1.0) -> SurvivalStats:
    """Fraction of ``trials`` single-AB runs alive at ``t_max`` (horizon proxy for survival)."""
    init = _initial_single(params)
    b = run_trials(params, init, t_max, trials, base_seed, parallelism=parallelism,
                   birth_block=birth_block)
    ok = _alive(params, b.final, threshold)
    hits = int(b.boundary_hit.sum())
    if hits:
        log.warning("%d of %d trials touched the box boundary (side=%d)", hits, trials, params.side)
    return SurvivalStats(params, t_max, trials, int(ok.sum()), base_seed, hits, threshold)


@dataclass
class BisectionResult:
    lo: float
    hi: float
    target: float
    curve: list[SurvivalStats]

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def bisect_lambda_c(mu: float, t_max: float, trials: int, tol: float, base_seed: int,
                    lo: float = 0.0, hi: float = 6.0, target: float = 0.05, dim: int = 1,
                    side: int | None = None, parallelism: int = 1,
                    variant: Variant = Variant.SCP) -> BisectionResult:
    """Bracket the finite-size critical proxy ``inf{lam : P(alive at t_max) >= target}``.

    All evaluations share one box and one seed, so the λ-coupling makes the
    per-trial outcomes monotone; a decreasing estimate beyond the Wilson
    intervals signals a defect and raises :class:`DiagnosticError`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not lo < hi:
        raise ValueError("need lo < hi")
    side = default_side(t_max, hi, dim) if side is None else side
    base = ModelParams(lam=hi, mu=mu, variant=variant, dim=dim, side=side)
    curve: list[SurvivalStats] = []

    def est(lam: float) -> float:
        s = estimate_survival(base.replace(lam=lam), t_max, trials, base_seed, parallelism)
        curve.append(s)
        _check_monotone(curve)
        return s.estimate

    if est(hi) < target:
        raise DiagnosticError(f"survival at upper bracket lambda={hi} is below target {target}")
    if lo > 0 and est(lo) >= target:
        raise DiagnosticError(f"survival at lower bracket lambda={lo} already reaches target {target}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if est(mid) >= target:
            hi = mid
        else:
            lo = mid
    curve.sort(key=lambda s: s.params.lam)
    return BisectionResult(lo, hi, target, curve)


def _check_monotone(curve: list[SurvivalStats]) -> None:
    pts = sorted(curve, key=lambda s: s.params.lam)
    for a, b in zip(pts, pts[1:]):
        if b.ci[1] < a.ci[0]:
            raise DiagnosticError(
                f"survival decreases from {a.estimate:.4f} at lambda={a.params.lam} to "
                f"{b.estimate:.4f} at lambda={b.params.lam}; enlarge t_max or the box")


# --------------------------------------------------------------------------- decay


@dataclass
class KappaFit:
    kappa: float
    log_c: float
    slope: float
    t: np.ndarray
    mean_size: np.ndarray
    fit_mask: np.ndarray
    residual_rms: float
    trials: int


def kappa_fit(lam: float, t_grid, trials: int, base_seed: int, dim: int = 1,
              side: int | None = None, parallelism: int = 1, tail: float = 0.5) -> KappaFit:
    """Fit ``E|eta_t| ~ C kappa**t`` for the single-type process from one occupied site.

    The fit is weighted least squares of ``log E|eta_t|`` on the last ``tail``
    fraction of the time grid (points with zero mean are dropped).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing with at least two points")
    t_end = float(t[-1])
    side = default_side(t_end, lam, dim) if side is None else side
    params = ModelParams(lam=lam, mu=1.0, variant=Variant.SINGLE, dim=dim, side=side,
                         boundary=Boundary.CLOSED)
    init = LatticeConfiguration.single(params, SiteState.A)
    b = run_trials(params, init, t_end, trials, base_seed, sample_times=t, parallelism=parallelism)
    sizes = b.samples[:, :, 0].astype(float)
    m = sizes.mean(axis=0)
    sd = sizes.std(axis=0, ddof=1)
    mask = (t >= t[0] + (1 - tail) * (t_end - t[0])) & (m > 0) & (sd > 0)
    if mask.sum() < 2:
        raise FitError("fewer than two usable tail points; increase trials or shorten t_grid")
    y = np.log(m[mask])
    w = np.sqrt(trials) * m[mask] / sd[mask]
    slope, log_c = np.polyfit(t[mask], y, 1, w=w)
    if slope >= 0:
        raise FitError(f"mean size is not decaying (slope {slope:.4g}); lambda looks supercritical")
    resid = y - (log_c + slope * t[mask])
    return KappaFit(float(np.exp(slope)), float(log_c), float(slope), t, m, mask,
                    float(np.sqrt(np.mean(resid ** 2))), trials)


# --------------------------------------------------------------------------- SCPD


@dataclass
class DensityReport:
    params: ModelParams
    p_A: float
    p_B: float
    p_AB: float
    p_A_se: float
    p_AB_se: float
    t_burn: float
    t_end: float
    trials: int


def scpd_densities(lam: float, mu: float, epsilon: float, side: int, t_burn: float, t_end: float,
                   base_seed: int, trials: int = 1, dt_sample: float = 0.5, dim: int = 1,
                   parallelism: int = 1) -> DensityReport:
    """Time-averaged site densities of SCPD started from all AB on a periodic box.

    ``p_A`` is the density of sites in state A only; standard errors are over
    trials (or over sample blocks when ``trials == 1``).
    """
    params = ModelParams(lam=lam, mu=mu, variant=Variant.SCPD, epsilon=epsilon, dim=dim,
                         side=side, boundary=Boundary.PERIODIC)
    init = LatticeConfiguration.filled(params)
    st = np.arange(t_burn, t_end + 1e-12, dt_sample)
    b = run_trials(params, init, t_end, trials, base_seed, sample_times=st, parallelism=parallelism)
    n = params.n_sites
    a_only = (b.samples[:, :, 0] - b.samples[:, :, 2]) / n
    b_only = (b.samples[:, :, 1] - b.samples[:, :, 2]) / n
    ab = b.samples[:, :, 2] / n
    if trials > 1:
        pa, pab = a_only.mean(axis=1), ab.mean(axis=1)
        se = lambda v: float(v.std(ddof=1) / math.sqrt(v.size))
    else:
        blocks = 10
        pa = np.array([c.mean() for c in np.array_split(a_only[0], blocks)])
        pab = np.array([c.mean() for c in np.array_split(ab[0], blocks)])
        se = lambda v: float(v.std(ddof=1) / math.sqrt(v.size))
    return DensityReport(params, float(a_only.mean()), float(b_only.mean()), float(ab.mean()),
                         se(pa), se(pab), t_burn, t_end, trials)


# --------------------------------------------------------------------------- couplings


@dataclass
class CouplingReport:
    checks: int
    violations: int
    events: tuple[int, int]


def lockstep_coupling(low: ModelParams, high: ModelParams, config_low: LatticeConfiguration,
                      config_high: LatticeConfiguration, source: GraphicalRandomSource,
                      t_end: float, trial: int = 0) -> CouplingReport:
    """Replay two coupled runs event by event and count containment violations.

    At every event time of either run the high process must carry every
    species the low process carries, sitewise.
    """
    s1 = Simulator(low, config_low, source, trial, horizon=t_end)
    s2 = Simulator(high, config_high, source, trial, horizon=t_end)
    checks = violations = 0
    while True:
        t = min(s1.peek(), s2.peek())
        if t > t_end:
            break
        s1.advance(t)
        s2.advance(t)
        checks += 1
        if np.any(s1._codes & ~s2._codes):
            violations += 1
    return CouplingReport(checks, violations, (s1.n_events, s2.n_events))


# --------------------------------------------------------------------------- event log files


def write_event_log(path: str | os.PathLike, traj: Trajectory) -> None:
    """Line-delimited JSON: a header record, then one record per event."""
    p = traj.params
    header = {"header": True, "variant": p.variant.value, "lambda": p.lam, "mu": p.mu,
              "epsilon": p.epsilon, "d": p.dim, "side": p.side, "boundary": p.boundary.value,
              "t_end": traj.t_end,
              "initial": base64.b64encode(traj.initial.packed()).decode("ascii")}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in traj.records():
            fh.write(json.dumps(r) + "\n")


def read_event_log(path: str | os.PathLike) -> Trajectory:
    with open(path) as fh:
        header = json.loads(fh.readline())
        recs = [json.loads(line) for line in fh if line.strip()]
    params = ModelParams(lam=header["lambda"], mu=header["mu"], variant=header["variant"],
                         epsilon=header["epsilon"], dim=header["d"], side=header["side"],
                         boundary=header["boundary"])
    init = LatticeConfiguration.unpack(base64.b64decode(header["initial"]), params.dim,
                                       params.side, params.boundary)
    names = {n: i for i, n in enumerate(EVENT_NAMES)}
    t = np.array([r["t"] for r in recs], dtype=float)
    site = np.array([r["site"] for r in recs], dtype=np.int64)
    code = np.array([names[r["code"]] for r in recs], dtype=np.int64)
    partner = np.array([r["partner"] for r in recs], dtype=np.int64)
    traj = Trajectory(params, init, float(header["t_end"]), t, site, code, partner,
                      np.zeros(len(recs), dtype=np.uint8))
    s = init.states.copy()
    for k in range(len(recs)):
        _apply(s, int(site[k]), int(code[k]), int(partner[k]))
        traj.states[k] = s[site[k]]
    return traj
