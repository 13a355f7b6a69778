import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symbiosim import pde
from symbiosim.pde import ScalarField


def field(v, dx=0.5, boundary="neumann"):
    return ScalarField(np.asarray(v, dtype=float), dx, boundary)


def bump(n=201, dx=0.25, height=0.5, width=10):
    x = np.arange(n)
    return field(np.where(abs(x - n // 2) < width, height, 0.0), dx)


def test_field_range_is_enforced():
    with pytest.raises(pde.RangeViolation):
        field([0.2, 1.2])
    with pytest.raises(ValueError):
        field([0.2], dx=0)
    with pytest.raises(ValueError):
        field([0.2], boundary="dirichlet")


def test_zero_is_fixed():
    z = field(np.zeros(50))
    da, db = pde.coupled_rhs(z, field(np.full(50, 0.3)), 2.0, 0.5)
    assert np.all(da == 0)
    assert np.all(pde.scalar_rhs(z, 2.0, 0.5) == 0)


@pytest.mark.parametrize("lam,mu", [(2.0, 0.5), (1.5, 1.0), (3.0, 0.1)])
def test_equilibrium_is_stationary(lam, mu):
    q = (lam - 1) / (lam + mu - 1)
    f = field(np.full(30, q))
    da, db = pde.coupled_rhs(f, f, lam, mu)
    assert np.max(np.abs(da)) < 1e-14 and np.max(np.abs(db)) < 1e-14


@settings(max_examples=30)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8), st.floats(0.1, 4), st.floats(0.01, 1))
def test_coupled_reduces_to_scalar(vals, lam, mu):
    f = field(vals)
    da, db = pde.coupled_rhs(f, f, lam, mu)
    s = pde.scalar_rhs(f, lam, mu)
    assert np.allclose(da, s, atol=1e-12) and np.array_equal(da, db)


def test_reaction_roots_and_sign():
    lam, mu = 2.0, 0.5
    roots = np.roots([-(lam - 1 + mu), lam - 1, 0])
    assert sorted(roots) == pytest.approx([0.0, (lam - 1) / (lam - 1 + mu)])
    q = np.linspace(1e-6, 1, 200)
    assert np.all(pde.reaction_scalar(q, 0.7, 0.5) < 0)


def test_grid_mismatch():
    with pytest.raises(pde.ConfigurationError):
        pde.coupled_rhs(field(np.zeros(5)), field(np.zeros(6)), 2, 0.5)
    with pytest.raises(pde.ConfigurationError):
        pde.coupled_rhs(field(np.zeros(5)), field(np.zeros(5), dx=0.3), 2, 0.5)


def test_unstable_step_rejected_before_running():
    f = field(np.zeros(10), dx=0.1)
    with pytest.raises(pde.ConfigurationError):
        pde.evolve(f, 2.0, 0.5, 1.0, dt=0.011)
    assert pde.max_stable_dt(0.1, 1) == pytest.approx(0.009)
    assert pde.max_stable_dt(0.1, 2) == pytest.approx(0.0045)


def test_subcritical_decay():
    f = bump(height=0.9)
    out, snaps = pde.evolve(f, 0.9, 0.5, 200.0, snapshot_times=np.arange(10, 201, 10))
    sups = [s.sup() for _, s in snaps]
    assert out.sup() < 1e-6
    assert all(a >= b for a, b in zip(sups, sups[1:]))


def test_plateau_spreads_at_equilibrium():
    out = pde.evolve(bump(n=401), 2.0, 0.5, 30.0)
    v = out.values
    assert v[200] == pytest.approx(2 / 3, abs=1e-3)
    assert np.sum(v > 0.6) > 100


def test_symmetric_pair_stays_symmetric():
    f = bump()
    a, b = pde.evolve((f, f), 2.0, 0.5, 10.0)
    assert np.max(np.abs(a.values - b.values)) < 1e-12
    s = pde.evolve(f, 2.0, 0.5, 10.0)
    assert np.max(np.abs(a.values - s.values)) < 1e-12


def test_comparison_principle():
    rng = np.random.default_rng(5)
    lo = rng.uniform(0, 0.5, 120)
    hi = np.minimum(lo + rng.uniform(0, 0.5, 120), 1)
    ones = np.ones(120)
    _, s_lo = pde.evolve(field(lo), 2.5, 0.3, 5.0, snapshot_times=np.linspace(0.5, 5, 10))
    _, s_hi = pde.evolve(field(hi), 2.5, 0.3, 5.0, snapshot_times=np.linspace(0.5, 5, 10))
    for (_, a), (_, b) in zip(s_lo, s_hi):
        assert np.all(a.values <= b.values + 1e-15)
        assert np.all(b.values <= ones)


def test_periodic_two_dimensional_run():
    v = np.zeros((20, 20))
    v[10, 10] = 0.5
    f = ScalarField(v, 0.5, "periodic")
    out = pde.evolve(f, 2.0, 0.5, 2.0)
    assert out.dim == 2
    assert out.values.sum() > 0.5
    assert np.allclose(out.values, out.values.T)


def test_callback_stops_run():
    seen = []
    pde.evolve(bump(), 2.0, 0.5, 10.0, callback=lambda t, v: seen.append(t) or t > 1)
    assert 1 < seen[-1] < 1.1


def test_equilibrium_values():
    e = pde.equilibrium_densities(2.0, 1.0)
    assert (e.q_star, e.p_AB, e.p_A) == pytest.approx((0.5, 0.25, 0.25))
    e = pde.equilibrium_densities(2.0, 0.5)
    assert (e.q_star, e.p_AB, e.p_A) == pytest.approx((2 / 3, 4 / 9, 2 / 9))
    e = pde.equilibrium_densities(0.8, 0.5)
    assert e.regime == "extinction" and e.q_star == 0


@settings(max_examples=100)
@given(st.floats(1.001, 20), st.floats(0.001, 1))
def test_equilibrium_identity(lam, mu):
    e = pde.equilibrium_densities(lam, mu)
    assert e.p_AB + e.p_A == pytest.approx(e.q_star, rel=1e-14)


def test_front_position_interpolates():
    v = np.array([1.0, 1.0, 0.6, 0.2, 0.0])
    assert pde.front_position(v, 0.5, 0.4) == pytest.approx((2 + 0.5) * 0.5)
    assert math.isnan(pde.front_position(np.zeros(4), 1.0, 0.1))


@pytest.mark.parametrize("lam,target", [(2.0, math.sqrt(2)), (1.5, 1.0)])
def test_front_speed(lam, target):
    r = pde.front_speed(lam)
    assert r.expected == pytest.approx(target)
    assert abs(r.speed - target) / target < 0.05
    assert r.speed < target  # pulled fronts approach from below


def test_front_speed_independent_of_mu():
    a = pde.front_speed(2.0, mu=0.2, t_window=(40, 80))
    b = pde.front_speed(2.0, mu=0.8, t_window=(40, 80))
    assert abs(a.speed - b.speed) < 0.01 * a.speed


def test_front_speed_grid_convergence():
    a = pde.front_speed(2.0, dx=0.1, t_window=(30, 60))
    b = pde.front_speed(2.0, dx=0.05, t_window=(30, 60))
    assert abs(a.speed - b.speed) / b.speed < 0.01


def test_front_window_errors():
    with pytest.raises(pde.WindowError):
        pde.front_speed(2.0, length=30.0)
    with pytest.raises(ValueError):
        pde.front_speed(0.9)


def test_snapshot_csv(tmp_path):
    f = bump(n=11)
    _, snaps = pde.evolve((f, f), 2.0, 0.5, 0.1, snapshot_times=[0.05, 0.1])
    p = tmp_path / "s.csv"
    pde.write_snapshots(p, snaps, f.dx)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x,qA,qB"
    assert len(lines) == 1 + 2 * 11
