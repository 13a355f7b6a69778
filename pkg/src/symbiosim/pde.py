"""Reaction-diffusion limit of fast stirring: coupled and scalar fields, fronts, equilibria."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

RANGE_TOL = 1e-9
DIFFUSION = 0.5


class ConfigurationError(ValueError):
    """Step size violates the explicit stability bound, or grids mismatch."""


class RangeViolation(RuntimeError):
    """A field left [0, 1] by more than the tolerance."""


class WindowError(RuntimeError):
    """The tracked front came too close to the domain edge."""


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    dx: float
    boundary: str = "neumann"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2):
            raise ValueError("fields are 1-d or 2-d")
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.boundary not in ("neumann", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        _check_range(v)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @classmethod
    def constant(cls, n: int | tuple, value: float, dx: float, boundary: str = "neumann"):
        return cls(np.full(n, float(value)), dx, boundary)

    def with_values(self, v: np.ndarray) -> ScalarField:
        return replace(self, values=v)

    def grid(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dx

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_range(v: np.ndarray) -> None:
    lo, hi = float(v.min(initial=0.0)), float(v.max(initial=0.0))
    if lo < -RANGE_TOL or hi > 1 + RANGE_TOL:
        raise RangeViolation(f"field values left [0, 1]: min {lo:.3g}, max {hi:.3g}")


def laplacian(v: np.ndarray, dx: float, boundary: str) -> np.ndarray:
    mode = "wrap" if boundary == "periodic" else "edge"
    p = np.pad(v, 1, mode=mode)
    if v.ndim == 1:
        out = p[2:] + p[:-2] - 2 * v
    else:
        out = p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * v
    return out / (dx * dx)


def _same_grid(a: ScalarField, b: ScalarField) -> None:
    if a.values.shape != b.values.shape or a.dx != b.dx or a.boundary != b.boundary:
        raise ConfigurationError("fields live on different grids")


def reaction_scalar(q, lam: float, mu: float):
    return (lam - 1) * q - (lam - 1 + mu) * q * q


def coupled_rhs(qA: ScalarField, qB: ScalarField, lam: float, mu: float):
    _same_grid(qA, qB)
    a, b = qA.values, qB.values
    da = DIFFUSION * laplacian(a, qA.dx, qA.boundary) + a * (lam * (1 - a) - 1 + (1 - mu) * b)
    db = DIFFUSION * laplacian(b, qB.dx, qB.boundary) + b * (lam * (1 - b) - 1 + (1 - mu) * a)
    return da, db


def scalar_rhs(q: ScalarField, lam: float, mu: float) -> np.ndarray:
    return DIFFUSION * laplacian(q.values, q.dx, q.boundary) + reaction_scalar(q.values, lam, mu)


def max_stable_dt(dx: float, dim: int) -> float:
    """Explicit-Euler bound ``dx^2 / (2 d D)`` with a 0.9 safety factor."""
    return 0.9 * dx * dx / (2 * dim * DIFFUSION)


def monotone_dt(dx: float, dim: int, lam: float) -> float:
    """Largest step keeping the Euler update monotone in each value, so [0, 1] is preserved.

    The reaction slope on [0, 1] is at least ``-(lam + 1)``.
    """
    return 1.0 / (2 * dim * DIFFUSION / (dx * dx) + lam + 1)


def evolve(fields, lam: float, mu: float, t_end: float, dt: float | None = None,
           snapshot_times=None, callback=None):
    """Forward-Euler integration of one scalar field or a ``(qA, qB)`` pair.

    The default step is the smaller of the stability bound and
    :func:`monotone_dt`.  Returns the final field(s); with ``snapshot_times`` returns
    ``(final, [(t, field(s)), ...])``.  ``callback(t, values)`` is called
    after every step and may stop the run by returning True.
    """
    pair = isinstance(fields, tuple)
    if pair:
        qA, qB = fields
        _same_grid(qA, qB)
        ref = qA
    else:
        ref = fields
    bound = max_stable_dt(ref.dx, ref.dim)
    if dt is None:
        dt = min(bound, monotone_dt(ref.dx, ref.dim, lam))
    elif dt > bound * (1 + 1e-12):
        raise ConfigurationError(f"dt={dt} exceeds the stability bound {bound:.6g} for dx={ref.dx}")
    nsteps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    snaps = list(np.sort(np.asarray(snapshot_times, dtype=float))) if snapshot_times is not None else None
    taken = []
    a = (qA.values if pair else fields.values).copy()
    b = qB.values.copy() if pair else None
    t = 0.0
    for k in range(nsteps):
        h = min(dt, t_end - t)
        if pair:
            da = DIFFUSION * laplacian(a, ref.dx, ref.boundary) + a * (lam * (1 - a) - 1 + (1 - mu) * b)
            db = DIFFUSION * laplacian(b, ref.dx, ref.boundary) + b * (lam * (1 - b) - 1 + (1 - mu) * a)
            a = a + h * da
            b = b + h * db
            _check_range(a)
            _check_range(b)
        else:
            a = a + h * (DIFFUSION * laplacian(a, ref.dx, ref.boundary) + reaction_scalar(a, lam, mu))
            _check_range(a)
        t = (k + 1) * dt if k + 1 < nsteps else t_end
        while snaps and snaps[0] <= t + 1e-12:
            snaps.pop(0)
            taken.append((t, _wrap(ref, a, b)))
        if callback is not None and callback(t, a if not pair else (a, b)):
            break
    final = _wrap(ref, a, b)
    return (final, taken) if snapshot_times is not None else final


def _wrap(ref: ScalarField, a, b):
    fa = ref.with_values(a.copy())
    return fa if b is None else (fa, ref.with_values(b.copy()))


@dataclass(frozen=True)
class Equilibrium:
    q_star: float
    p_AB: float
    p_A: float
    regime: str


def equilibrium_densities(lam: float, mu: float) -> Equilibrium:
    """Fast-stirring limits of ``q_A``, ``p_AB`` and ``p_A`` (A-only density)."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if lam <= 1:
        return Equilibrium(0.0, 0.0, 0.0, "extinction")
    s = lam + mu - 1
    q = (lam - 1) / s
    return Equilibrium(q, q * q, (lam - 1) * mu / (s * s), "survival")


def front_position(values: np.ndarray, dx: float, level: float) -> float:
    """Rightmost crossing of ``level`` with linear interpolation."""
    above = np.flatnonzero(values >= level)
    if above.size == 0:
        return math.nan
    i = int(above[-1])
    if i == values.size - 1:
        return i * dx
    v0, v1 = values[i], values[i + 1]
    return (i + (v0 - level) / (v0 - v1)) * dx


@dataclass
class SpeedReport:
    lam: float
    mu: float
    dx: float
    dt: float
    speed: float
    fit_err: float
    times: np.ndarray
    positions: np.ndarray

    @property
    def expected(self) -> float:
        return math.sqrt(2 * DIFFUSION * 2 * (self.lam - 1))


def front_speed(lam: float, mu: float = 0.5, length: float | None = None,
                t_window: tuple[float, float] = (50.0, 100.0), dx: float = 0.1,
                dt: float | None = None, n_obs: int = 200) -> SpeedReport:
    """Speed of the ``q*/2`` level set of the scalar equation from step initial data.

    The position is regressed on time over ``t_window``; ``fit_err`` is the
    standard error of the slope.  The default domain leaves room for twice
    the pulled-front speed over the run.
    """
    if lam <= 1:
        raise ValueError("front speed needs lambda > 1")
    t0, t1 = t_window
    if not 0 <= t0 < t1:
        raise ValueError("need 0 <= t_window[0] < t_window[1]")
    q_star = equilibrium_densities(lam, mu).q_star
    c = math.sqrt(2 * (lam - 1))
    if length is None:
        length = 2 * (2 * c * t1 + 20)
    n = int(round(length / dx)) + 1
    x = np.arange(n) * dx
    q0 = np.where(x < length / 2, q_star, 0.0)
    field = ScalarField(q0, dx)
    dt = min(max_stable_dt(dx, 1), monotone_dt(dx, 1, lam)) if dt is None else dt
    obs = np.linspace(t0, t1, n_obs + 1)
    final, snaps = evolve(field, lam, mu, t1, dt, snapshot_times=obs)
    times = np.array([t for t, _ in snaps])
    pos = np.array([front_position(f.values, dx, q_star / 2) for _, f in snaps])
    if np.any(np.isnan(pos)) or pos.max() > length - 10 * dx - 5:
        raise WindowError("front reached the domain edge; enlarge the domain")
    coef, cov = np.polyfit(times, pos, 1, cov=True)
    return SpeedReport(lam, mu, dx, dt, float(coef[0]), float(math.sqrt(cov[0, 0])), times, pos)


SPEED_COLUMNS = ("lambda", "mu", "dx", "dt", "speed", "fit_err")


def speed_row(r: SpeedReport) -> dict:
    return {"lambda": repr(r.lam), "mu": repr(r.mu), "dx": repr(r.dx), "dt": repr(r.dt),
            "speed": repr(r.speed), "fit_err": repr(r.fit_err)}


def write_snapshots(path, snaps, dx: float) -> None:
    """CSV rows ``(t, x, qA, qB)`` from a list of ``(t, field or pair)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "qA", "qB"])
        for t, f in snaps:
            a, b = (f[0].values, f[1].values) if isinstance(f, tuple) else (f.values, f.values)
            for i in range(a.size):
                w.writerow([repr(t), repr(i * dx), repr(float(a[i])), repr(float(b[i]))])
