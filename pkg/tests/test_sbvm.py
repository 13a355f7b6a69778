import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from oracles import front_pair_stationary_gap
from symbiosim.rng import GraphicalRandomSource
from symbiosim.sbvm import (GapChain, NonSummableError, edge_drift_paper, gap_stationary,
                            max_front_critical, max_front_drift, sbvm_critical, sbvm_row,
                            simulate_front)


@pytest.mark.parametrize("lam,mu", [(2.0, 0.5), (1.0, 0.2), (0.7, 0.9)])
def test_gap_law_matches_two_front_chain(lam, mu):
    oracle = front_pair_stationary_gap(lam, mu, 150)
    ours = gap_stationary(lam, mu, 20).pi
    assert np.allclose(ours, oracle[:21], atol=1e-7)


@given(st.floats(0.05, 5.0), st.floats(0.0, 0.95))
def test_gap_law_satisfies_detailed_balance(lam, mu):
    law = gap_stationary(lam, mu, 60)
    ch = GapChain(lam, mu)
    for n in range(60):
        assert abs(law.pi[n] * ch.up(n) - law.pi[n + 1] * ch.down(n + 1)) < 1e-12
    assert law.pi.sum() + law.tail == pytest.approx(1.0, abs=1e-12)


def test_gap_law_needs_mu_below_one():
    with pytest.raises(NonSummableError):
        gap_stationary(1.0, 1.0)


def test_generator_rows_sum_to_zero():
    q = GapChain(1.5, 0.4).generator(30)
    assert np.allclose(q.sum(axis=1), 0.0)


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_bracketed_drift_vanishes_at_closed_form(mu):
    z = optimize.brentq(lambda l: edge_drift_paper(l, mu), 1e-6, 2.0, xtol=1e-15)
    assert z == pytest.approx(math.sqrt(8 * mu - 4 * mu * mu), abs=1e-9)
    assert z == pytest.approx(sbvm_critical(mu), abs=1e-12)


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.5, 0.8])
def test_max_front_zero_is_twice_root_mu(mu):
    assert max_front_critical(mu) == pytest.approx(2 * math.sqrt(mu), abs=1e-10)


def test_long_run_occupation_and_speed():
    run = simulate_front(2.0, 0.5, 40000.0, GraphicalRandomSource(1))
    occ = run.occupation()
    pi = gap_stationary(2.0, 0.5, occ.size - 1).pi
    assert 0.5 * np.abs(occ - pi).sum() < 0.02
    lo, hi = run.speed_ci
    assert lo - 0.02 < max_front_drift(2.0, 0.5) < hi + 0.02


def test_empirical_rates_match_chain():
    run = simulate_front(1.5, 0.4, 20000.0, GraphicalRandomSource(2))
    up, down = run.empirical_rates()
    ch = GapChain(1.5, 0.4)
    assert up[0] == pytest.approx(ch.up(0), rel=0.05)
    assert down[1] == pytest.approx(ch.down(1), rel=0.05)


def test_row_has_closed_form_columns():
    row = sbvm_row(2.0, 0.5)
    assert float(row["pi0"]) == pytest.approx(1 / 7)
    assert row["mc_speed"] == ""
