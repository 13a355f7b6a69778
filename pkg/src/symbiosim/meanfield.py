"""Mean-field ODE for the symbiotic contact process: roots, stability, phase diagram."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

STABILITY_TOL = 1e-9


class StepSizeError(RuntimeError):
    """Integration left the probability simplex."""


@dataclass(frozen=True)
class MeanFieldState:
    p0: float
    pA: float
    pB: float
    pAB: float

    def __post_init__(self):
        v = self.as_array()
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12) or abs(v.sum() - 1) > 1e-12:
            raise ValueError(f"not a probability vector: {v.tolist()}")

    @classmethod
    def from_occupied(cls, pA: float, pB: float, pAB: float) -> MeanFieldState:
        return cls(1.0 - pA - pB - pAB, pA, pB, pAB)

    @classmethod
    def all_ab(cls) -> MeanFieldState:
        return cls(0.0, 0.0, 0.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.pA, self.pB, self.pAB])

    @property
    def rho_A(self) -> float:
        return self.pA + self.pAB


@njit(cache=True)
def _rhs3(a, b, c, lam, mu):
    p0 = 1.0 - a - b - c
    da = lam * p0 * (a + c) + mu * c - a - lam * a * (b + c)
    db = lam * p0 * (b + c) + mu * c - b - lam * b * (a + c)
    dc = 2.0 * lam * a * b + lam * (a + b) * c - 2.0 * mu * c
    return da, db, dc


def mf_rhs(state: MeanFieldState, lam: float, mu: float) -> tuple[float, float, float, float]:
    """Time derivative ``(dp0, dpA, dpB, dpAB)``."""
    da, db, dc = _rhs3(state.pA, state.pB, state.pAB, lam, mu)
    return -(da + db + dc), da, db, dc


def jacobian(pA: float, pB: float, pAB: float, lam: float, mu: float) -> np.ndarray:
    """Jacobian of ``(pA, pB, pAB)`` with ``p0`` eliminated."""
    a, b, c = pA, pB, pAB
    p0 = 1.0 - a - b - c
    return np.array([
        [lam * p0 - lam * (a + c) - 1 - lam * (b + c), -lam * (a + c) - lam * a,
         lam * p0 - lam * (a + c) + mu - lam * a],
        [-lam * (b + c) - lam * b, lam * p0 - lam * (b + c) - 1 - lam * (a + c),
         lam * p0 - lam * (b + c) + mu - lam * b],
        [2 * lam * b + lam * c, 2 * lam * a + lam * c, lam * (a + b) - 2 * mu],
    ])


@njit(cache=True)
def _rk4(y0, lam, mu, dt, nsteps, every, stop_tol):
    nrec = nsteps // every + 2
    out = np.empty((nrec, 4))
    a, b, c = y0[0], y0[1], y0[2]
    out[0, 0] = 0.0
    out[0, 1] = a
    out[0, 2] = b
    out[0, 3] = c
    r = 1
    bad = -1
    done = nsteps
    for k in range(1, nsteps + 1):
        k1 = _rhs3(a, b, c, lam, mu)
        k2 = _rhs3(a + 0.5 * dt * k1[0], b + 0.5 * dt * k1[1], c + 0.5 * dt * k1[2], lam, mu)
        k3 = _rhs3(a + 0.5 * dt * k2[0], b + 0.5 * dt * k2[1], c + 0.5 * dt * k2[2], lam, mu)
        k4 = _rhs3(a + dt * k3[0], b + dt * k3[1], c + dt * k3[2], lam, mu)
        a += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        c += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        p0 = 1.0 - a - b - c
        if a < -1e-12 or b < -1e-12 or c < -1e-12 or p0 < -1e-12:
            bad = k
            done = k
            break
        stop = False
        if stop_tol > 0.0:
            g = _rhs3(a, b, c, lam, mu)
            stop = max(abs(g[0]), abs(g[1]), abs(g[2])) < stop_tol
        if k % every == 0 or k == nsteps or stop:
            out[r, 0] = k * dt
            out[r, 1] = a
            out[r, 2] = b
            out[r, 3] = c
            r += 1
        if stop:
            done = k
            break
    return out[:r], bad, done


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    pA: np.ndarray
    pB: np.ndarray
    pAB: np.ndarray
    converged: bool
    residual: float

    @property
    def p0(self) -> np.ndarray:
        return 1.0 - self.pA - self.pB - self.pAB

    @property
    def final(self) -> MeanFieldState:
        a, b, c = (float(np.clip(v[-1], 0.0, 1.0)) for v in (self.pA, self.pB, self.pAB))
        return MeanFieldState(max(0.0, 1.0 - a - b - c), a, b, c)


def mf_integrate(state0: MeanFieldState, lam: float, mu: float, t_end: float, dt: float = 1e-3,
                 record_every: int = 1000, conv_tol: float = 1e-12,
                 stop_early: bool = False) -> MeanFieldTrajectory:
    """Fixed-step RK4 integration.

    ``converged`` is set when the sup-norm of the vector field at the final
    state is below ``conv_tol``.  With ``stop_early`` the integration halts as
    soon as that happens.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    n = int(round(t_end / dt))
    y0 = np.array([state0.pA, state0.pB, state0.pAB])
    out, bad, _ = _rk4(y0, float(lam), float(mu), float(dt), n, max(1, int(record_every)),
                       conv_tol if stop_early else 0.0)
    if bad >= 0:
        raise StepSizeError(f"simplex violated at step {bad} (t={bad * dt:g}); reduce dt={dt}")
    a, b, c = out[-1, 1:]
    res = float(np.max(np.abs(_rhs3(a, b, c, lam, mu))))
    return MeanFieldTrajectory(out[:, 0], out[:, 1], out[:, 2], out[:, 3], res < conv_tol, res)


# --------------------------------------------------------------------------- equilibria


def quadratic_residual(p: float, lam: float, mu: float) -> float:
    """Value of the equilibrium quadratic for symmetric fixed points."""
    return mu * mu * (lam - 1) + mu * lam * (2 - lam - 2 * mu) * p + lam * lam * (mu - 1) * p * p


def pab_of(p: float, lam: float, mu: float) -> float:
    """Doubly-occupied density at a symmetric equilibrium with single density ``p``."""
    if p == 0:
        return 0.0
    return lam * p * p / (mu - lam * p)


def _candidate_roots(lam: float, mu: float) -> list[float]:
    if mu == 1.0:
        return [(lam - 1) / lam ** 2]
    disc = lam * lam - 4 * mu * (1 - mu)
    if disc < 0:
        return []
    s = math.sqrt(disc)
    k = mu / (2 * lam * (1 - mu))
    base = 2 * (1 - mu) - lam
    return sorted({k * (base - s), k * (base + s)})


@dataclass(frozen=True)
class Root:
    p: float
    pAB: float
    stability: str
    eigenvalues: tuple[complex, ...] = field(repr=False, default=())

    @property
    def stable(self) -> bool:
        return self.stability == "stable"

    @property
    def rho_A(self) -> float:
        return self.p + self.pAB


@dataclass(frozen=True)
class PhaseReport:
    mu: float
    lam: float
    roots: tuple[Root, ...]
    regime: str

    @property
    def largest_stable(self) -> Root | None:
        st = [r for r in self.roots if r.stable]
        return st[-1] if st else None

    @property
    def rho_A(self) -> float:
        r = self.largest_stable
        return 0.0 if r is None else r.rho_A


def _stability(p: float, pab: float, lam: float, mu: float) -> tuple[str, tuple]:
    ev = np.linalg.eigvals(jacobian(p, p, pab, lam, mu))
    m = float(np.max(ev.real))
    tag = "stable" if m < -STABILITY_TOL else "unstable" if m > STABILITY_TOL else "marginal"
    return tag, tuple(complex(e) for e in ev)


def equilibrium_roots(lam: float, mu: float) -> PhaseReport:
    """Symmetric fixed points ``pA = pB = p`` with stability tags.

    Nonzero roots must lie in ``(0, 1)``, keep ``mu - lam*p > 0`` and leave a
    nonnegative empty-site density; others are discarded as unphysical.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    roots = []
    tag, ev = _stability(0.0, 0.0, lam, mu)
    roots.append(Root(0.0, 0.0, tag, ev))
    for p in _candidate_roots(lam, mu):
        if not 1e-12 < p < 1 or mu - lam * p <= 0:
            continue
        pab = pab_of(p, lam, mu)
        if 2 * p + pab > 1 + 1e-12:
            continue
        tag, ev = _stability(p, pab, lam, mu)
        roots.append(Root(p, pab, tag, ev))
    return PhaseReport(mu, lam, tuple(roots), classify_phase(lam, mu))


def onset_lambda(mu: float) -> float:
    """Smallest birth rate at which a positive equilibrium exists."""
    return math.sqrt(4 * mu * (1 - mu)) if mu < 0.5 else 1.0


def classify_phase(lam: float, mu: float) -> str:
    if lam > 1:
        return "continuous-survival"
    if mu < 0.5 and onset_lambda(mu) < lam < 1:
        return "bistable"
    return "extinction"


def rho_A(lam: float, mu: float) -> float:
    return equilibrium_roots(lam, mu).rho_A


@dataclass(frozen=True)
class Figure1Row:
    mu: float
    lam: float
    rho_A: float
    report: PhaseReport


def figure1_data(mu_list, lambda_grid) -> list[Figure1Row]:
    """Equilibrium ``rho_A`` at the largest stable root for each (mu, lambda)."""
    mus, lams = list(mu_list), list(lambda_grid)
    if not mus or not lams:
        raise ValueError("grids must be nonempty")
    rows = []
    for mu in mus:
        for lam in lams:
            rep = equilibrium_roots(lam, mu)
            rows.append(Figure1Row(mu, lam, rep.rho_A, rep))
    return rows


@dataclass(frozen=True)
class Jump:
    mu: float
    lam: float
    size: float

    @property
    def discontinuous(self) -> bool:
        return self.size > 1e-3


def locate_jump(mu: float, lambda_grid, h: float = 1e-10) -> Jump:
    """Onset of the positive branch along ``lambda_grid`` and the size of the jump there.

    The onset is bracketed on the grid and refined by bisection; the jump is
    ``rho_A(onset + h) - rho_A(onset - h)``, which vanishes for square-root
    (continuous) onsets as ``h -> 0``.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    vals = np.array([rho_A(l, mu) for l in lams])
    pos = np.flatnonzero(vals > 0)
    if pos.size == 0 or pos[0] == 0:
        return Jump(mu, math.nan, 0.0)
    lo, hi = lams[pos[0] - 1], lams[pos[0]]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rho_A(mid, mu) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < h:
            break
    return Jump(mu, hi, rho_A(hi + h, mu) - rho_A(lo - h, mu))


MF_CSV_COLUMNS = ("mu", "lambda", "root0", "root1", "root2", "stable_flags", "rho_A", "regime")


def mf_csv_row(row: Figure1Row) -> dict:
    roots = [r.p for r in row.report.roots] + [math.nan] * (3 - len(row.report.roots))
    flags = "".join({"stable": "S", "unstable": "U", "marginal": "M"}[r.stability]
                    for r in row.report.roots)
    return {"mu": repr(row.mu), "lambda": repr(row.lam), "root0": repr(roots[0]),
            "root1": "" if math.isnan(roots[1]) else repr(roots[1]),
            "root2": "" if math.isnan(roots[2]) else repr(roots[2]),
            "stable_flags": flags, "rho_A": repr(row.rho_A), "regime": row.report.regime}


def write_figure1_csv(path, rows: list[Figure1Row]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MF_CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(mf_csv_row(r))
