import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fellerforge.errors import DomainError, ParameterDomainError
from fellerforge.levy import ExponentSpec
from fellerforge.paths import MCConfig
from fellerforge.reports import FAIL, INCONCLUSIVE, PASS
from fellerforge.sampling import sample_increments
from fellerforge.sde import euler_maruyama, simulate_levy
from fellerforge.symbols import StateSymbol
from fellerforge.verify import (
    CF_GRID,
    RULES,
    VerifyReport,
    compare_cf,
    config_hash,
    cross_validate_weak,
    empirical_cf,
    ks_two_sample,
    martingale_residual,
    maximal_inequality_probe,
    moment_scaling_probe,
    perpetual_integral_mc,
    recheck,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


# --- characteristic functions ---------------------------------------------

def test_cf_grid_layout():
    assert len(CF_GRID) == 21 and CF_GRID[10] == 0
    np.testing.assert_array_equal(CF_GRID[:10], -CF_GRID[11:][::-1])


def test_cf_point_mass():
    est = empirical_cf(np.full(7, 5.0), [1.0])
    assert est.values[0] == pytest.approx(np.exp(5j), abs=1e-15)
    assert est.std_errors[0] <= 1e-15


def test_cf_symmetric_pair_is_real():
    a = 1.7
    est = empirical_cf([-a, a], np.linspace(-3, 3, 11))
    np.testing.assert_allclose(est.values.imag, 0, atol=1e-15)
    np.testing.assert_allclose(est.values.real, np.cos(a * est.xi), atol=1e-15)


def test_cf_stable_sample():
    n = 10**6
    x = sample_increments(ExponentSpec.isotropic_stable(1.5), 1.0, n, 3)
    est = empirical_cf(x, [1.0])
    assert abs(est.values[0] - math.exp(-1)) <= 3 * est.std_errors[0]


def test_cf_domain_errors():
    with pytest.raises(DomainError):
        empirical_cf([], [1.0])
    with pytest.raises(DomainError):
        empirical_cf([1.0, np.nan], [1.0])


@given(arrays(float, st.integers(1, 60), elements=finite))
def test_cf_invariants(x):
    est = empirical_cf(x)
    assert est.values[10] == 1
    assert np.all(np.abs(est.values) <= 1 + 4 / math.sqrt(x.size))
    # conjugate symmetry of the estimate on the mirrored grid
    np.testing.assert_allclose(est.values[:10], np.conj(est.values[11:][::-1]), atol=1e-12)


def test_cf_csv(tmp_path):
    out = tmp_path / "cf.csv"
    empirical_cf([0.0, 1.0], [0.0, 1.0]).to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "xi,re,im,se" and lines[1].startswith("0.0,1.0,0.0,")


# --- Kolmogorov-Smirnov -----------------------------------------------------

def test_ks_examples():
    a = np.array([0.3, 1.0, 2.0])
    assert ks_two_sample(a, a)[0] == 0
    assert ks_two_sample([-3.0, -1.0], [2.0, 5.0])[0] == 1
    assert ks_two_sample([1.0, 2.0], [1.5, 2.5])[0] == 0.5
    with pytest.raises(DomainError):
        ks_two_sample([], [1.0])


@given(arrays(float, st.integers(1, 30), elements=finite),
       arrays(float, st.integers(1, 30), elements=finite))
def test_ks_invariant_under_monotone_maps(a, b):
    s1, _ = ks_two_sample(a, b)
    s2, _ = ks_two_sample(np.arctan(a), np.arctan(b))
    assert s1 == pytest.approx(s2, abs=1e-12)
    assert s1 == pytest.approx(ks_two_sample(b, a)[0], abs=1e-12)
    assert 0 <= s1 <= 1


# --- reports --------------------------------------------------------------

def test_report_round_trip_and_recheck():
    rep = VerifyReport("martingale", {"z_scores": [0.5, math.inf]}, {"z_max": 4.0}, FAIL,
                       seed=3, config={"b": 1, "a": [1, 2]})
    data = json.loads(rep.to_json())
    assert data["metrics"]["z_scores"] == [0.5, "inf"]
    back = VerifyReport.from_dict(data)
    assert recheck(back) == FAIL and back.config_hash == rep.config_hash
    assert config_hash({"a": [1, 2], "b": 1}) == config_hash({"b": 1, "a": [1, 2]})
    assert len(rep.config_hash) == 16


def test_rules_registry():
    assert set(RULES) == {"cross-validate", "maximal-inequality", "moment-scaling",
                          "perpetual", "martingale"}
    m = {"exploded_em": 0, "exploded_tc": 1, "cf_pass_fraction": 1.0, "ks_p": 0.9}
    t = {"cf_fraction": 0.95, "ks_p": 0.01}
    assert RULES["cross-validate"](m, t) == FAIL
    m["exploded_tc"] = 0
    assert RULES["cross-validate"](m, t) == PASS
    m["ks_p"] = 0.001
    assert RULES["cross-validate"](m, t) == FAIL


# --- weak uniqueness cross-validation ---------------------------------------

@pytest.mark.parametrize("alpha", [0.5, 0.8, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("c", [0.5, 2.0])
def test_cross_validate_constant_sigma(alpha, c):
    # below alpha = 1 conservative paths cross 1e8 with visible probability
    escape = 1e8 if alpha >= 0.8 else 1e20
    rep = cross_validate_weak(c, alpha, mc=MCConfig(n_paths=5000, seed=1, escape_radius=escape))
    assert rep.verdict == PASS, rep.metrics
    assert recheck(rep) == rep.verdict


def test_cross_validate_state_dependent():
    rep = cross_validate_weak("1+0.5*sin(x)", 1.5, mc=MCConfig(n_paths=10_000, seed=2))
    assert rep.verdict == PASS
    assert rep.metrics["exploded_em"] == rep.metrics["exploded_tc"] == 0


def test_cross_validate_linear_growth_no_explosion():
    rep = cross_validate_weak("1+abs(x)", 1.5, mc=MCConfig(n_paths=5000, seed=3))
    assert rep.metrics["exploded_em"] == rep.metrics["exploded_tc"] == 0
    assert rep.verdict == PASS


def test_cross_validate_domain():
    with pytest.raises(ParameterDomainError):
        cross_validate_weak(1.0, 2.5)


def test_compare_cf_detects_shift():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(5000)
    ok, ratio, _, _ = compare_cf(a, a + 0.5)
    assert ok.mean() < 0.5


# --- maximal inequality -------------------------------------------------------

def test_maximal_constant_ensemble():
    ens = euler_maruyama(0.0, ExponentSpec.isotropic_stable(1.5), 0.0,
                         MCConfig(n_paths=100, dt=0.25), allow_zero=True)
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(1.5))
    rep = maximal_inequality_probe(ens, 0.0, 1.0, [1.0, 2.0, 4.0], sym)
    assert rep.metrics["prob"] == [0.0, 0.0, 0.0] and rep.metrics["c_hat"] == 0
    assert rep.verdict == PASS


def test_maximal_stable_bounded():
    a = 1.5
    ens = simulate_levy(ExponentSpec.isotropic_stable(a), 0.0,
                        MCConfig(n_paths=20_000, seed=4, dt=2.0**-8))
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(a))
    r = np.geomspace(1, 100, 9)
    rep = maximal_inequality_probe(ens, 0.0, 1.0, r, sym)
    np.testing.assert_allclose(rep.metrics["bound"], r ** -a, rtol=1e-9)
    assert rep.metrics["monotone"]
    assert rep.verdict == PASS
    assert 0 < rep.metrics["c_hat"] < 10


def test_maximal_grid_validation():
    ens = simulate_levy(ExponentSpec.isotropic_stable(1.5), 0.0, MCConfig(n_paths=10, dt=0.5))
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(1.5))
    with pytest.raises(ParameterDomainError):
        maximal_inequality_probe(ens, 0.0, 1.0, [2.0, 1.0], sym)


# --- moment scaling -------------------------------------------------------

def test_moment_kappa_zero():
    rep = moment_scaling_probe(1.0, 1.5, 0.0, mc=MCConfig(n_paths=200, seed=1, dt=2.0**-6))
    assert rep.metrics["moments"] == [1.0] * 8 and rep.metrics["slope"] == 0
    assert rep.verdict == PASS


def test_moment_brownian_slope():
    rep = moment_scaling_probe(1.0, 2.0, 1.0, mc=MCConfig(n_paths=10_000, seed=7))
    assert 0.45 <= rep.metrics["slope"] <= 0.55
    assert rep.verdict == PASS


def test_moment_state_dependent():
    rep = moment_scaling_probe("1+0.5*sin(x)", 1.5, 1.0,
                               mc=MCConfig(n_paths=10_000, seed=8, dt=2.0**-8))
    assert rep.verdict == PASS
    assert rep.metrics["target_slope"] == pytest.approx(2 / 3)


def test_moment_domain():
    with pytest.raises(DomainError):
        moment_scaling_probe(1.0, 1.5, 1.5)
    with pytest.raises(ParameterDomainError):
        moment_scaling_probe(1.0, 1.5, 1.0, t_grid=[0.5, 2.0])


# --- perpetual integrals ----------------------------------------------------

def test_perpetual_constant_f_exact():
    rep = perpetual_integral_mc(ExponentSpec.isotropic_stable(1.5), 1.0, [10, 100, 1000],
                                MCConfig(n_paths=50))
    assert rep.metrics["p05"] == [10.0, 100.0, 1000.0]
    assert rep.metrics["median"] == [10.0, 100.0, 1000.0]
    assert rep.verdict == PASS and rep.notes == "consistent with divergence"


def test_perpetual_recurrent_stable():
    rep = perpetual_integral_mc(ExponentSpec.isotropic_stable(1.5), "1/(1+abs(x)^1.5)",
                                [10, 100, 1000], MCConfig(n_paths=300, seed=3, dt=0.5))
    p = rep.metrics["p05"]
    assert p[0] < p[1] < p[2]
    assert rep.metrics["precondition"] == PASS


def test_perpetual_transient_contrast():
    rep = perpetual_integral_mc(ExponentSpec.isotropic_stable(0.5), "exp(-x^2)",
                                [10, 100, 1000], MCConfig(n_paths=300, seed=3, dt=0.5))
    assert rep.verdict == INCONCLUSIVE
    assert rep.metrics["precondition"] == FAIL


# --- martingale problem -----------------------------------------------------

def gauss(x):
    return np.exp(-np.asarray(x) ** 2)


@pytest.mark.parametrize("alpha", [1.5, 2.0])
def test_martingale_residual_small(alpha):
    sigma = "1+0.5*sin(x)"
    from fellerforge.coefficients import StateCoefficient
    phi = StateCoefficient.power_of(StateCoefficient.from_spec(sigma), alpha)
    sym = StateSymbol(phi, ExponentSpec.isotropic_stable(alpha))
    ens = euler_maruyama(sigma, ExponentSpec.isotropic_stable(alpha), 0.0,
                         MCConfig(n_paths=10_000, seed=5, dt=2.0**-8))
    rep = martingale_residual(ens, gauss, sym, [0.5, 1.0])
    assert len(rep.metrics["z_scores"]) == 6
    assert rep.verdict == PASS


def test_martingale_detects_wrong_generator():
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(2.0))
    ens = simulate_levy(ExponentSpec.isotropic_stable(2.0), 0.0,
                        MCConfig(n_paths=10_000, seed=6, dt=2.0**-6))
    # Af = 0 ignores the dynamics entirely
    rep = martingale_residual(ens, gauss, sym, [1.0], Af=lambda x: 0 * np.asarray(x))
    assert rep.verdict == FAIL
