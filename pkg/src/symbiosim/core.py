"""Lattice states, model parameters and local rates."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class SiteState(enum.IntEnum):
    """Occupancy of one site as a 2-bit code: bit 0 = A present, bit 1 = B present."""

    EMPTY = 0
    A = 1
    B = 2
    AB = 3

    @classmethod
    def from_bits(cls, a_present: int, b_present: int) -> SiteState:
        return cls((a_present & 1) | ((b_present & 1) << 1))

    @property
    def a_present(self) -> int:
        return self.value & 1

    @property
    def b_present(self) -> int:
        return (self.value >> 1) & 1

    @property
    def label(self) -> str:
        return ("0", "A", "B", "AB")[self.value]


class Variant(str, enum.Enum):
    SCP = "SCP"
    SCPD = "SCPD"
    SINGLE = "SingleTypeContact"
    SBVM = "SBVM"


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    CLOSED = "closed"


class CoordinateError(IndexError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one model instance.

    ``lam`` is the total birth rate of a particle (rate ``lam/2d`` per ordered
    neighbour pair); ``mu`` is the per-species death rate at doubly occupied
    sites; ``epsilon`` sets the stirring rate ``epsilon**-2`` of SCPD.
    """

    lam: float
    mu: float = 1.0
    variant: Variant = Variant.SCP
    epsilon: float | None = None
    dim: int = 1
    side: int = 101
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.dim < 1 or self.side < 1:
            raise ValueError("dim and side must be positive")
        if self.variant is Variant.SCPD:
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError("SCPD requires epsilon > 0")
            if self.boundary is Boundary.PERIODIC and self.side < 3:
                raise ValueError("periodic SCPD needs side >= 3 so stirring pairs are distinct")
        elif self.epsilon is not None:
            raise ValueError(f"epsilon is only meaningful for SCPD, not {self.variant.value}")

    @property
    def n_sites(self) -> int:
        return self.side ** self.dim

    @property
    def stir_rate(self) -> float:
        return 0.0 if self.epsilon is None else self.epsilon ** -2

    def replace(self, **changes) -> ModelParams:
        kw = dict(lam=self.lam, mu=self.mu, variant=self.variant, epsilon=self.epsilon,
                  dim=self.dim, side=self.side, boundary=self.boundary)
        kw.update(changes)
        return ModelParams(**kw)


def neighbor_table(dim: int, side: int, boundary: Boundary | str) -> np.ndarray:
    """Flat-index neighbour table of shape ``(side**dim, 2*dim)``.

    Column ``2*i`` is the ``+e_i`` neighbour and ``2*i + 1`` the ``-e_i``
    neighbour; ``-1`` marks a missing neighbour under a closed boundary.
    """
    boundary = Boundary(boundary)
    n = side ** dim
    idx = np.arange(n, dtype=np.int64)
    coords = np.stack(np.unravel_index(idx, (side,) * dim), axis=1)
    nbr = np.empty((n, 2 * dim), dtype=np.int64)
    for i in range(dim):
        for col, step in ((2 * i, 1), (2 * i + 1, -1)):
            c = coords.copy()
            c[:, i] += step
            if boundary is Boundary.PERIODIC:
                c[:, i] %= side
                nbr[:, col] = np.ravel_multi_index(c.T, (side,) * dim)
            else:
                ok = (c[:, i] >= 0) & (c[:, i] < side)
                out = np.full(n, -1, dtype=np.int64)
                out[ok] = np.ravel_multi_index(c[ok].T, (side,) * dim)
                nbr[:, col] = out
    return nbr


@dataclass
class LatticeConfiguration:
    """Dense box of site states with maintained species counts.

    States are held as one 2-bit code per site in a flat ``uint8`` array (row
    major over the box coordinates); :meth:`packed` gives the 4-sites-per-byte
    form used for storage.
    """

    dim: int
    side: int
    boundary: Boundary = Boundary.PERIODIC
    states: np.ndarray = field(default=None, repr=False)
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        self.boundary = Boundary(self.boundary)
        n = self.side ** self.dim
        if self.states is None:
            self.states = np.zeros(n, dtype=np.uint8)
        else:
            self.states = np.ascontiguousarray(self.states, dtype=np.uint8).reshape(-1)
            if self.states.size != n:
                raise ValueError(f"expected {n} states, got {self.states.size}")
            if self.states.max(initial=0) > 3:
                raise ValueError("site codes must lie in 0..3")
        self.counts = self.recount()

    @classmethod
    def empty(cls, params: ModelParams) -> LatticeConfiguration:
        return cls(params.dim, params.side, params.boundary)

    @classmethod
    def single(cls, params: ModelParams, state: SiteState = SiteState.AB,
               site: tuple[int, ...] | None = None) -> LatticeConfiguration:
        """One occupied site (the box centre by default), all others empty."""
        cfg = cls.empty(params)
        cfg[cfg.center if site is None else site] = state
        return cfg

    @classmethod
    def filled(cls, params: ModelParams, state: SiteState = SiteState.AB) -> LatticeConfiguration:
        cfg = cls.empty(params)
        cfg.states[:] = int(state)
        cfg.counts = cfg.recount()
        return cfg

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    @property
    def n_sites(self) -> int:
        return self.states.size

    @property
    def center(self) -> tuple[int, ...]:
        return (self.side // 2,) * self.dim

    def index(self, x) -> int:
        x = (x,) if np.isscalar(x) else tuple(x)
        if len(x) != self.dim or any(not 0 <= c < self.side for c in x):
            raise CoordinateError(f"site {x} outside the {self.shape} box")
        return int(np.ravel_multi_index(x, self.shape))

    def coords(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(i, self.shape))

    def __getitem__(self, x) -> SiteState:
        return SiteState(int(self.states[self.index(x)]))

    def __setitem__(self, x, value) -> None:
        i = self.index(x)
        old = int(self.states[i])
        new = int(value)
        self.states[i] = new
        self.counts += _code_counts(new) - _code_counts(old)

    def recount(self) -> np.ndarray:
        s = self.states
        a = s & 1
        b = s >> 1
        return np.array([a.sum(), b.sum(), (a & b).sum()], dtype=np.int64)

    def check_counts(self) -> None:
        rc = self.recount()
        if not np.array_equal(rc, self.counts):
            raise AssertionError(f"maintained counts {self.counts.tolist()} != recount {rc.tolist()}")

    @property
    def n_A(self) -> int:
        return int(self.counts[0])

    @property
    def n_B(self) -> int:
        return int(self.counts[1])

    @property
    def n_AB(self) -> int:
        return int(self.counts[2])

    def a_mask(self) -> np.ndarray:
        return (self.states & 1).astype(bool)

    def b_mask(self) -> np.ndarray:
        return (self.states >> 1).astype(bool)

    def neighbors(self) -> np.ndarray:
        return neighbor_table(self.dim, self.side, self.boundary)

    def packed(self) -> bytes:
        """2 bits per site, four sites per byte, little-endian within a byte."""
        s = self.states
        pad = (-s.size) % 4
        q = np.concatenate([s, np.zeros(pad, dtype=np.uint8)]).reshape(-1, 4)
        return (q[:, 0] | (q[:, 1] << 2) | (q[:, 2] << 4) | (q[:, 3] << 6)).astype(np.uint8).tobytes()

    @classmethod
    def unpack(cls, data: bytes, dim: int, side: int,
               boundary: Boundary | str = Boundary.PERIODIC) -> LatticeConfiguration:
        b = np.frombuffer(data, dtype=np.uint8)
        s = np.stack([(b >> k) & 3 for k in (0, 2, 4, 6)], axis=1).reshape(-1)
        return cls(dim, side, boundary, s[: side ** dim].copy())

    def copy(self) -> LatticeConfiguration:
        return LatticeConfiguration(self.dim, self.side, self.boundary, self.states.copy())

    def swapped(self) -> LatticeConfiguration:
        """The configuration with species labels A and B exchanged."""
        s = self.states
        return LatticeConfiguration(self.dim, self.side, self.boundary,
                                    ((s & 1) << 1) | (s >> 1))

    def dominates(self, other: LatticeConfiguration) -> bool:
        """True if every species present in ``other`` is present here, sitewise."""
        return bool(np.all((other.states & ~self.states) == 0))


def _code_counts(code: int) -> np.ndarray:
    a = code & 1
    b = code >> 1
    return np.array([a, b, a & b], dtype=np.int64)


def neighbor_fractions(config: LatticeConfiguration, x) -> tuple[float, float]:
    """Fractions of the ``2d`` neighbours of ``x`` carrying A and carrying B.

    Missing neighbours of a closed box count as empty; the denominator stays
    ``2d`` either way.
    """
    i = config.index(x)
    nbr = neighbor_table(config.dim, config.side, config.boundary)[i]
    nbr = nbr[nbr >= 0]
    s = config.states[nbr]
    denom = 2 * config.dim
    return float((s & 1).sum()) / denom, float((s >> 1).sum()) / denom


@dataclass(frozen=True)
class RateTable:
    a_birth: float = 0.0
    b_birth: float = 0.0
    a_death: float = 0.0
    b_death: float = 0.0

    @property
    def total(self) -> float:
        return self.a_birth + self.b_birth + self.a_death + self.b_death


def transition_rates(config: LatticeConfiguration, x, params: ModelParams) -> RateTable:
    """Flip rates of site ``x`` for SCP and the single-type contact process."""
    if params.variant not in (Variant.SCP, Variant.SINGLE):
        raise ValueError(f"local rate table defined for SCP/SingleTypeContact, not {params.variant.value}")
    st = config[x]
    f_a, f_b = neighbor_fractions(config, x)
    a, b = st.a_present, st.b_present
    a_birth = params.lam * f_a if not a else 0.0
    b_birth = params.lam * f_b if not b else 0.0
    a_death = (params.mu if b else 1.0) if a else 0.0
    b_death = (params.mu if a else 1.0) if b else 0.0
    if params.variant is Variant.SINGLE:
        return RateTable(a_birth=a_birth, a_death=1.0 if a else 0.0)
    return RateTable(a_birth, b_birth, a_death, b_death)
