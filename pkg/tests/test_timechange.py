import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fellerforge.errors import DomainError, ParameterDomainError, SimulationBudgetError
from fellerforge.levy import ExponentSpec
from fellerforge.paths import MCConfig, PathSkeleton, is_cemetery
from fellerforge.sampling import sample_increments
from fellerforge.sde import simulate_levy
from fellerforge.timechange import (
    additive_clock,
    inverse_clock,
    simulate_timechanged,
    time_change_path,
)
from fellerforge.verify import compare_cf

TWO_PIECE = PathSkeleton([0.0, 1.0, 2.0], [0.0, 3.0, 3.0])


def random_path(seed, n=50):
    rng = np.random.default_rng(seed)
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 0.5, n - 1))])
    x = np.cumsum(rng.standard_cauchy(n))
    return PathSkeleton(t, x)


# --- additive clock -------------------------------------------------------

def test_clock_identity_and_constant():
    p = random_path(1)
    np.testing.assert_array_equal(additive_clock(p, 1.0).A_values, p.times)
    np.testing.assert_array_equal(additive_clock(p, 2.0).A_values, p.times / 2)


def test_two_piece_clock_oracle():
    clock = additive_clock(TWO_PIECE, "1+x", horizons=[1.0, 2.0])
    # Riemann sum of 1/(1+x_s) on a fine grid
    s = np.linspace(0, 2, 2_000_001)[:-1]
    riemann = np.sum(np.where(s < 1, 1.0, 0.25)) * (2 / 2_000_000)
    assert clock.A(2.0) == pytest.approx(riemann, abs=1e-9)
    assert clock.A(2.0) == 1.25
    assert clock.r_values == {1.0: 1.0, 2.0: 1.25}


def test_two_piece_inverse():
    clock = additive_clock(TWO_PIECE, "1+x")
    assert inverse_clock(clock, 1.125) == 1.5
    assert inverse_clock(clock, 0.7) == pytest.approx(0.7, abs=0)


def test_inverse_trivial_cases():
    p = random_path(2)
    assert inverse_clock(additive_clock(p, 1.0), 0.7) == 0.7
    c = 2.5
    assert inverse_clock(additive_clock(p, c), 0.7) == c * 0.7
    with pytest.raises(DomainError):
        inverse_clock(additive_clock(p, 1.0), -1e-3)


def test_phi_domain_errors():
    with pytest.raises(DomainError):
        additive_clock(TWO_PIECE, "x-1")
    with pytest.raises(DomainError):
        additive_clock(TWO_PIECE, lambda x: np.where(x > 1, np.inf, 1.0))


def test_exploded_path_is_final():
    p = PathSkeleton([0.0, 1.0, 2.0], [0.0, 1.0, 5.0], exploded=True, explosion_time=1.5)
    clock = additive_clock(p, 1.0)
    assert clock.final and clock.horizon == 1.5
    assert inverse_clock(clock, 1.5) == math.inf
    assert inverse_clock(clock, 1.4) == 1.4
    y = time_change_path(p, 1.0, [0.0, 1.0, 1.6])
    assert y.exploded and is_cemetery(y.state_at(1.6))


@given(st.integers(0, 2**32 - 1), st.floats(0.2, 3.0))
def test_inverse_identity_within_ulps(seed, scale):
    p = random_path(seed)
    clock = additive_clock(p, lambda x: scale * (1 + np.abs(x) ** 0.5))
    rng = np.random.default_rng(seed)
    for t in rng.uniform(0, clock.horizon, 20):
        a = inverse_clock(clock, t)
        back = float(clock.A(a))
        assert abs(back - t) <= 8 * np.spacing(max(t, clock.horizon))


@given(st.integers(0, 2**32 - 1))
def test_inverse_strictly_increasing(seed):
    clock = additive_clock(random_path(seed), "1+abs(x)")
    ts = np.linspace(0, clock.horizon * 0.999, 200)
    alphas = np.array([inverse_clock(clock, t) for t in ts])
    assert np.all(np.diff(alphas) > 0)


@given(st.integers(0, 2**32 - 1), st.floats(1.0, 4.0))
def test_alpha_increases_with_phi(seed, factor):
    # a larger phi runs the clock slower, so the inverse moves further along X
    p = random_path(seed)
    lo = additive_clock(p, "1+abs(x)")
    hi = additive_clock(p, lambda x: factor * (1 + np.abs(x)) + np.sin(x) ** 2)
    for t in np.linspace(0, lo.horizon * 0.99, 25):
        assert inverse_clock(hi, t) >= inverse_clock(lo, t)


def test_time_change_identity_is_bitwise():
    p = random_path(3)
    y = time_change_path(p, 1.0, p.times)
    np.testing.assert_array_equal(y.states, p.states)
    assert not y.censored


def test_time_change_constant():
    p = random_path(4)
    t = np.linspace(0, p.times[-1] / 2, 30)
    y = time_change_path(p, 2.0, t)
    np.testing.assert_array_equal(y.states, np.array([p.state_at(2 * s) for s in t]))
    beyond = time_change_path(p, 2.0, np.linspace(0, p.times[-1], 30))
    assert beyond.censored and not beyond.exploded
    with pytest.raises(ParameterDomainError):
        time_change_path(p, 1.0, [0.5, 1.0])


def test_clock_csv(tmp_path):
    out = tmp_path / "clock.csv"
    additive_clock(TWO_PIECE, "1+x").to_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["u", "A_of_u"]
    assert [float(r[1]) for r in rows[1:]] == [0.0, 1.0, 1.25]


# --- ensembles ------------------------------------------------------------

MC = MCConfig(n_paths=2000, horizon=1.0, seed=11)


@pytest.mark.parametrize("spec", [ExponentSpec.isotropic_stable(1.5),
                                  ExponentSpec.isotropic_stable(0.7)])
def test_unit_phi_reproduces_base_bitwise(spec):
    tc = simulate_timechanged(spec, 1.0, 0.0, mc=MC, stream_id=1, record_times=[0.5, 1.0])
    base = simulate_levy(spec, 0.0, MC, record_times=[0.5, 1.0], stream_id=1)
    np.testing.assert_array_equal(tc.states, base.states)
    np.testing.assert_array_equal(tc.clock, np.tile([0.5, 1.0], (MC.n_paths, 1)))


def test_constant_phi_clock_and_law():
    c = 3.0
    spec = ExponentSpec.isotropic_stable(1.5)
    mc = MCConfig(n_paths=20_000, seed=5)
    tc = simulate_timechanged(spec, c, 0.0, mc=mc)
    assert np.all(tc.clock == c)
    direct = sample_increments(spec, c, 20_000, 6)
    assert stats.ks_2samp(tc.at(), direct).statistic < 0.02


def test_replay_matches_recorded_states():
    spec = ExponentSpec.isotropic_stable(1.2)
    tc = simulate_timechanged(spec, "1+abs(x)^1.2", 0.0, mc=MC, record_times=[0.25, 1.0])
    integ, states = tc.observe([lambda x: np.ones_like(x)], [0.25, 1.0])
    np.testing.assert_array_equal(states, tc.states)
    done = ~tc.censored
    np.testing.assert_allclose(integ[done, :, 0], np.tile([0.25, 1.0], (done.sum(), 1)),
                               rtol=1e-12)


def test_growth_condition_gives_no_explosions():
    mc = MCConfig(n_paths=2000, seed=2)
    ens = simulate_timechanged(ExponentSpec.isotropic_stable(1.5), "1+abs(x)^1.5", 0.0, mc=mc)
    # budget exhaustion is reported as censoring, never as explosion
    assert ens.counts()["exploded"] == 0
    assert ens.counts()["censored"] <= 0.01 * mc.n_paths


def test_budget_error_when_clock_cannot_reach_horizon():
    # a transient base leaves the region where phi is small, then the clock stalls
    mc = MCConfig(n_paths=200, horizon=1.0, seed=0, dt=0.25)
    with pytest.raises(SimulationBudgetError):
        simulate_timechanged(ExponentSpec.isotropic_stable(0.5), "1+1e6*x^4", 0.0, mc=mc)


def test_grid_refinement_stability():
    spec = ExponentSpec.isotropic_stable(1.5)
    phi = "(1+0.5*sin(x))^1.5"
    coarse = simulate_timechanged(spec, phi, 0.0, mc=MCConfig(n_paths=10_000, seed=1,
                                                              dt=2.0**-7))
    fine = simulate_timechanged(spec, phi, 0.0, mc=MCConfig(n_paths=10_000, seed=2,
                                                            dt=2.0**-8))
    ok, ratio, _, _ = compare_cf(coarse.at(), fine.at(), np.linspace(-3, 3, 13), n_se=3)
    assert ok.mean() >= 0.95


def test_ensemble_csv(tmp_path):
    mc = MCConfig(n_paths=3, seed=0, dt=0.25, store_paths=True)
    ens = simulate_timechanged(ExponentSpec.isotropic_stable(1.0), "1+abs(x)", 0.0, mc=mc)
    out = tmp_path / "ens.csv"
    ens.to_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["path_id", "t", "state_1", "flag"]
    assert {r[0] for r in rows[1:]} == {"0", "1", "2"}


@pytest.mark.parametrize("escape", [1e8, 2.0])
def test_chunked_stepping_matches_stepwise(monkeypatch, escape):
    # a single path consumes the Gaussian stream in the same order in both modes
    import fellerforge.timechange as tcm
    spec = ExponentSpec.isotropic_stable(2.0)
    for seed in range(8):
        mc = MCConfig(n_paths=1, seed=seed, dt=2.0**-6, escape_radius=escape)
        runs = []
        for limit in (0, 10**9):
            monkeypatch.setattr(tcm, "CHUNK_ACTIVE", limit)
            runs.append(simulate_timechanged(spec, "1+x^2", 0.0, mc=mc,
                                             record_times=[0.1, 0.5, 1.0], integrands=[np.cos]))
        a, b = runs
        np.testing.assert_array_equal(a.exploded, b.exploded)
        np.testing.assert_allclose(a.explosion_time, b.explosion_time, rtol=1e-12)
        for x, y in ((a.states, b.states), (a.clock, b.clock), (a.sup_dev, b.sup_dev),
                     (a.meta["integrals"], b.meta["integrals"])):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)
