import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from conftest import tilted_quartic
from ecdlab.errors import ConfigError, DomainError, IntegrationWarning, NoHits
from ecdlab.potential import build_maps
from ecdlab.secd_analytic import crossing_prob, deterministic_time, hitting_time_general
from ecdlab.secd_sim import (SimConfig, closure_depth, flip_counts, monte_carlo_hitting, prepare,
                             run_event_driven, run_ode_raw, simulate)
from ecdlab.secd_analytic import p_integral
from oracles import T_DET


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="rate must be nonnegative"):
        SimConfig(-1.0)
    with pytest.raises(ConfigError) as exc:
        SimConfig(1.0, E=0.0, u0=0, closure_fraction=1.5)
    assert len(exc.value.problems) == 3


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("ECD_LAB_THREADS", "3")
    assert SimConfig(1.0).threads() == 3
    assert SimConfig(1.0, n_threads=2).threads() == 2


def test_flip_counts_are_poisson():
    lam, dur, n = 1.7, 3.0, 20000
    k = flip_counts(lam, dur, n, seed=11)
    mu = lam * dur
    edges = np.arange(0, 13)
    obs = np.array([np.sum(k == j) for j in edges[:-1]] + [np.sum(k >= edges[-1])])
    pmf = stats.poisson.pmf(edges[:-1], mu)
    exp = n * np.append(pmf, 1 - pmf.sum())
    chi2 = ((obs - exp) ** 2 / exp).sum()
    assert stats.chi2.sf(chi2, len(obs) - 1) > 1e-3
    assert k.mean() == pytest.approx(mu, abs=4 * math.sqrt(mu / n))


def test_flip_counts_rejects_zero_rate():
    with pytest.raises(DomainError):
        flip_counts(0.0, 1.0, 10)


def test_closure_depth_fraction(quartic121):
    th, cost = closure_depth(quartic121, 1.0, 0.1)
    full = p_integral(quartic121, 1.0, -math.inf, quartic121.a_left)
    assert cost == pytest.approx(0.1 * full, rel=1e-9)
    assert p_integral(quartic121, 1.0, -math.inf, th) == pytest.approx(cost, rel=1e-8)
    assert th < quartic121.a_left


def test_zero_rate_crossing_is_deterministic(quartic121, maps121):
    run = run_event_driven(quartic121, maps121, SimConfig(0.0))
    assert run.hit and run.n_flips == 0
    assert run.t_real == pytest.approx(T_DET, rel=1e-9)
    assert run.s_elapsed == pytest.approx(maps121.L_classical, rel=1e-12)


def test_event_log_is_consistent(quartic121, maps121):
    run = run_event_driven(quartic121, maps121, SimConfig(1.0, seed=3), traj=7)
    s = [e[0] for e in run.events]
    assert s == sorted(s)
    assert run.events[-1][2] == "hit"
    assert len(run.flips) == run.n_flips
    assert run.events[-1][1] == pytest.approx(maps121.L_classical)


def test_single_run_matches_batch(quartic121, maps121):
    cfg = SimConfig(1.0, seed=9, n_traj=20)
    hit, t, s, flips, legs, first, clos = simulate(quartic121, maps121, cfg)
    for k in (0, 5, 19):
        r = run_event_driven(quartic121, maps121, cfg, traj=k)
        assert (r.hit, r.t_real, r.s_elapsed, r.n_flips, r.n_legs) == \
            (bool(hit[k]), t[k], s[k], flips[k], legs[k])


def test_results_independent_of_thread_count(quartic121, maps121):
    a = simulate(quartic121, maps121, SimConfig(1.0, seed=4, n_traj=3000, n_threads=1))
    b = simulate(quartic121, maps121, SimConfig(1.0, seed=4, n_traj=3000, n_threads=4))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_seed_changes_paths(quartic121, maps121):
    a = simulate(quartic121, maps121, SimConfig(1.0, seed=1, n_traj=100))[1]
    b = simulate(quartic121, maps121, SimConfig(1.0, seed=2, n_traj=100))[1]
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("u0", [1, -1])
def test_mc_mean_matches_theory_on_tilted_well(u0):
    lnd = tilted_quartic()
    maps = build_maps(lnd, 1.0)
    rep = monte_carlo_hitting(lnd, maps, SimConfig(0.8, u0=u0, seed=21, n_traj=40000))
    ref = hitting_time_general(lnd, maps, 0.8, u0).total
    assert abs(rep.mean - ref) < 4 * rep.se
    assert rep.n_timeouts == 0


def test_crossing_fraction_and_legs(quartic121, maps121):
    lam = 0.7
    rep = monte_carlo_hitting(quartic121, maps121, SimConfig(lam, seed=5, n_traj=40000))
    q = crossing_prob(lam, maps121.L_classical)
    assert abs(rep.q_hat - q) < 4 * rep.q_se
    assert abs(rep.legs_mean - (2 / q - 1)) < 4 * rep.legs_se


@pytest.mark.parametrize("frac", [0.1, 0.5])
def test_closure_depth_does_not_bias_mean(quartic121, maps121, frac):
    rep = monte_carlo_hitting(quartic121, maps121,
                              SimConfig(1.0, u0=-1, seed=8, n_traj=40000, closure_fraction=frac))
    ref = hitting_time_general(quartic121, maps121, 1.0, -1).total
    assert abs(rep.mean - ref) < 4 * rep.se


def test_hit_window_shortens_time(quartic121, maps121):
    full = run_event_driven(quartic121, maps121, SimConfig(0.0))
    win = run_event_driven(quartic121, maps121, SimConfig(0.0, sigma_hit=0.2))
    assert win.t_real < full.t_real
    with pytest.raises(DomainError):
        prepare(quartic121, maps121, SimConfig(0.0, sigma_hit=3.0))


def test_timeouts_raise_no_hits(quartic121, maps121):
    with pytest.raises(NoHits):
        monte_carlo_hitting(quartic121, maps121, SimConfig(50.0, max_s=0.1, n_traj=10))


def test_maps_energy_mismatch(quartic121, maps121):
    with pytest.raises(DomainError):
        prepare(quartic121, maps121, SimConfig(1.0, E=2.0))


# raw ODE --------------------------------------------------------------------

def test_rk4_is_fourth_order(quartic121, maps121):
    T = deterministic_time(quartic121, maps121)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        errs = [abs(run_ode_raw(quartic121, SimConfig(0.0), dt).t_real - T) for dt in (0.1, 0.05, 0.025)]
    for e1, e2 in zip(errs, errs[1:]):
        assert 12 < e1 / e2 < 24


def test_large_step_warns_about_drift(quartic121):
    with pytest.warns(IntegrationWarning):
        run_ode_raw(quartic121, SimConfig(0.0), 0.2)


@pytest.mark.parametrize("traj", [0, 1, 2, 3])
def test_ode_follows_event_driven_path(quartic121, maps121, traj):
    cfg = SimConfig(1.0, seed=5)
    a = run_ode_raw(quartic121, cfg, 0.01, traj=traj)
    b = run_event_driven(quartic121, maps121, cfg, traj=traj)
    assert a.hit and b.hit
    assert a.n_flips == b.n_flips
    np.testing.assert_allclose(a.flips, b.flips, rtol=1e-10)
    assert a.t_real == pytest.approx(b.t_real, rel=1e-7)
    assert a.energy_drift < 1e-6


def test_ode_rejects_bad_step(quartic121):
    with pytest.raises(DomainError):
        run_ode_raw(quartic121, SimConfig(0.0), 0.0)


@given(st.floats(0.2, 2.0))
def test_ode_energy_conserved_without_flips(E):
    lnd = tilted_quartic()
    run = run_ode_raw(lnd, SimConfig(0.0, E=E), 0.01)
    assert run.hit
    assert run.energy_drift < 1e-6
