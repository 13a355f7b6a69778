"""Counter-based random streams for the graphical representation.

Every Poisson clock of the construction (birth arrows, the two death marks,
stirring pairs) owns an arrival set that is a pure function of
``(seed, trial, clock address)``.  Nothing is consumed sequentially, so the
arrivals of a clock can be queried in any order, from any process, and two
coupled runs that share a source see identical clocks.

Arrival sets are laid out on a grid of unit-intensity cells.  A clock with
block width ``w`` splits time into cells of length ``1/w``; each cell of rate
block ``k`` holds a Poisson(1) number of points, uniform in time and carrying a
rate coordinate uniform in ``[k*w, (k+1)*w)``.  Keeping the points whose rate
coordinate is below ``r`` yields a rate-``r`` Poisson process, and for
``r1 <= r2`` the kept sets are nested.  Birth clocks use a fixed block width so
that all birth rates are coupled at once; death and stirring clocks use their
own rate as width (one block, no wasted points).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0
_MASK64 = (1 << 64) - 1

# clock kinds; slot layout per (site, species) is
# [birth dir 0..2d-1 | mu-death | solo-death | stir axis 0..d-1]
BIRTH = 0
DEATH_MU = 1
DEATH_SOLO = 2
STIR = 3


@njit(cache=True, inline="always")
def mix64(z):
    """splitmix64 finalizer on a uint64."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def hash2(h, a):
    return mix64(np.uint64(h) ^ mix64(np.uint64(a) + _GOLDEN))


@njit(cache=True)
def u01(h, a, b, c):
    """Uniform in (0, 1) addressed by (h, a, b, c)."""
    z = hash2(hash2(hash2(h, a), b), c)
    return (float(z >> _S11) + 0.5) * _INV53


@njit(cache=True)
def stream_key(seed, trial):
    return hash2(mix64(np.uint64(seed) + _GOLDEN), trial)


@njit(cache=True)
def clock_hash(key, address):
    return hash2(np.uint64(key) ^ _GOLDEN, address)


@njit(cache=True)
def _poisson1(u):
    # inversion for Poisson(1); the tail beyond 20 has mass < 1e-19
    k = 0
    p = 0.36787944117144233
    cdf = p
    while u > cdf and k < 20:
        k += 1
        p /= k
        cdf += p
    return k


@njit(cache=True)
def next_arrival(h, rate, width, t, horizon):
    """First arrival strictly after ``t`` of the clock with hash ``h``.

    Returns ``inf`` when the rate is zero or no arrival falls before
    ``horizon``.
    """
    if rate <= 0.0:
        return np.inf
    nblocks = int(math.ceil(rate / width))
    cell = 1.0 / width
    n = int(math.floor(t * width))
    while n * cell <= horizon:
        best = np.inf
        for k in range(nblocks):
            cnt = _poisson1(u01(h, n, k, 0))
            for j in range(cnt):
                rc = (k + u01(h, n, k, 2 * j + 1)) * width
                if rc < rate:
                    tt = (n + u01(h, n, k, 2 * j + 2)) * cell
                    if tt > t and tt < best:
                        best = tt
        if best < np.inf:
            return best
        n += 1
    return np.inf


@njit(cache=True)
def arrivals_in(h, rate, width, t0, t1):
    out = np.empty(16, dtype=np.float64)
    n = 0
    t = t0
    while True:
        t = next_arrival(h, rate, width, t, t1)
        if t > t1:
            break
        if n == out.size:
            grown = np.empty(2 * n, dtype=np.float64)
            grown[:n] = out
            out = grown
        out[n] = t
        n += 1
    return out[:n].copy()


def hash_uniforms(key: int, a: np.ndarray, b: int) -> np.ndarray:
    """Vectorised uniforms addressed by ``(key, a[i], b)``.

    Pure numpy; used where whole rows of independent marks are needed
    (oriented percolation sites).
    """
    with np.errstate(over="ignore"):
        h = np.uint64(key)
        z = np.asarray(a, dtype=np.int64).astype(np.uint64) + _GOLDEN
        z = _mix_np(z)
        z = _mix_np(h ^ z)
        z = _mix_np(z ^ _mix_np(np.full_like(z, np.uint64(b & _MASK64)) + _GOLDEN))
    return ((z >> _S11).astype(np.float64) + 0.5) * _INV53


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@dataclass(frozen=True)
class GraphicalRandomSource:
    """Seeded, stream-addressed randomness for one simulation family.

    ``swap_species`` exchanges the A and B halves of the clock address space,
    which realises the label-swap symmetry exactly.  ``birth_block`` is the
    rate-block width of birth clocks; all runs sharing a source and block width
    have nested birth arrows for every pair of birth rates.
    """

    seed: int
    swap_species: bool = False
    birth_block: float = 1.0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.birth_block <= 0:
            raise ValueError("birth_block must be positive")

    def key(self, trial: int = 0) -> np.uint64:
        return np.uint64(stream_key(np.uint64(self.seed), np.uint64(trial)))

    def clock(self, address: int, trial: int = 0) -> np.uint64:
        # explicit uint64 keeps numba from reusing an int64 specialisation
        return np.uint64(clock_hash(self.key(trial), np.uint64(int(address) & _MASK64)))

    def arrivals(self, address: int, rate: float, t0: float, t1: float,
                 trial: int = 0, width: float | None = None) -> np.ndarray:
        """Arrival times in ``(t0, t1]`` of one clock."""
        w = rate if width is None else width
        if rate <= 0:
            return np.empty(0)
        return arrivals_in(self.clock(address, trial), float(rate), float(w), float(t0), float(t1))

    def generator(self, label: int, trial: int = 0) -> np.random.Generator:
        """A numpy Generator for auxiliary draws, keyed like a clock."""
        k = int(clock_hash(self.key(trial), np.uint64(label & _MASK64)))
        return np.random.Generator(np.random.Philox(key=k))


def coupled_clock_split(lambda1: float, lambda2: float, source: GraphicalRandomSource,
                        t_end: float, d: int = 1, address: int = 0,
                        trial: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Birth-arrow arrivals of one ordered pair at rates ``lambda1/2d`` and ``lambda2/2d``.

    The second stream is the first plus the points whose rate coordinate lies
    in ``[lambda1/2d, lambda2/2d)``, i.e. an independent extra clock of rate
    ``(lambda2 - lambda1)/2d``.
    """
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    if lambda1 > lambda2:
        raise ValueError(f"need lambda1 <= lambda2, got {lambda1} > {lambda2}")
    w = source.birth_block
    s1 = source.arrivals(address, lambda1 / (2 * d), 0.0, t_end, trial, width=w)
    s2 = source.arrivals(address, lambda2 / (2 * d), 0.0, t_end, trial, width=w)
    return s1, s2
