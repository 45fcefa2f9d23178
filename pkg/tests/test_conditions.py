import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fellerforge.conditions import (
    ProbeGrids,
    bernstein_link,
    check_cor15,
    check_cor17,
    check_decomposable_pair,
    check_growth_timechange,
    check_perpetual,
    check_stable_dominated,
    check_thm13,
)
from fellerforge.errors import ParameterDomainError
from fellerforge.levy import ExponentSpec, LevyTriplet
from fellerforge.reports import (
    DIVERGENCE_FACTOR,
    FAIL,
    INCONCLUSIVE,
    PASS,
    STABLE_RTOL,
    ConditionReport,
    combine,
    trace_report,
)
from fellerforge.symbols import CutoffSpec, StateCharacteristics

S = ExponentSpec


def subverdicts(rep):
    return {s.condition_id: s.verdict for s in rep.subreports}


def walk(rep):
    yield rep
    for s in rep.subreports:
        yield from walk(s)


# --- growth condition for the time change -----------------------------------

@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
def test_eq5_closed_form_limit(alpha):
    rep = check_growth_timechange(f"1+abs(x)^{alpha}", S.isotropic_stable(alpha))
    assert rep.condition_id == "time-eq5"
    assert rep.verdict == PASS
    R = np.array([g for g, _ in rep.raw])
    closed = (1 + (4 * R) ** alpha) * R ** (-alpha)
    np.testing.assert_allclose([v for _, v in rep.raw], closed, rtol=1e-9)
    assert rep.fitted["limit"] == pytest.approx(4**alpha, rel=0.05)


def test_eq5_trivial_phi_one_tends_to_zero():
    rep = check_growth_timechange(1.0, S.isotropic_stable(1.5))
    # min over the tail of R^-alpha is the last grid value
    assert rep.fitted["limit"] == pytest.approx(1e9 ** -1.5, rel=1e-9)
    assert rep.verdict == PASS


def test_eq5_exponential_phi_fails():
    rep = check_growth_timechange("exp(abs(x))", S.isotropic_stable(1.0))
    assert rep.verdict == FAIL


def test_eq5_scaling_covariance():
    q = S.relativistic_stable(1.2, 1.0)
    grids = ProbeGrids(R_grid=tuple(np.geomspace(1, 1e4, 9)))
    base = check_growth_timechange("2+abs(x)", q, grids)
    c = 3.5
    scaled = check_growth_timechange(f"{c}*(2+abs(x))", q, grids)
    np.testing.assert_allclose([v for _, v in scaled.raw], [c * v for _, v in base.raw],
                               rtol=1e-12)


@pytest.mark.parametrize("q", [S.isotropic_stable(0.7), S.relativistic_stable(1.5, 2.0),
                               S.homographic(1.0)])
def test_eq5_and_eq6_coincide_for_unit_weights(q):
    a = check_growth_timechange(1.0, q)
    b = check_perpetual(1.0, q)
    assert a.verdict == b.verdict
    np.testing.assert_array_equal(a.raw, b.raw)


def test_perpetual_examples():
    a = 1.5
    assert check_perpetual(f"2/(1+abs(x)^{a})", S.isotropic_stable(a)).verdict == PASS
    assert check_perpetual("exp(-abs(x))", S.isotropic_stable(a)).verdict == FAIL
    with pytest.raises(ParameterDomainError):
        check_perpetual("abs(x)-1", S.isotropic_stable(a))
    # a zero of f makes 1/f unbounded
    assert check_perpetual("abs(x)", S.isotropic_stable(a)).verdict == FAIL


# --- existence conditions ----------------------------------------------------

def test_thm13_stable_with_matching_growth_passes():
    a = 1.5
    rep = check_thm13(f"1+abs(x)^{a}", S.isotropic_stable(a))
    assert rep.verdict == PASS
    assert set(subverdicts(rep)) == {f"thm13.{k}" for k in ("i", "ii", "iii", "iv", "v")}


def test_thm13_quadratic_phi_fails_item_iii():
    rep = check_thm13("1+abs(x)^2", S.isotropic_stable(1.5))
    assert rep.verdict == FAIL
    assert subverdicts(rep)["thm13.iii"] == FAIL
    ratio = np.array([v for _, v in rep.sub("thm13.iii").raw])
    xs = np.array([g for g, _ in rep.sub("thm13.iii").raw])
    # grows like |x|^(2 - alpha)
    slope = np.polyfit(np.log(xs[-12:]), np.log(ratio[-12:]), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.02)


def test_thm13_pure_diffusion_quadratic_phi_passes():
    trip = LevyTriplet(b=[0.0], Q=[[1.0]])
    rep = check_thm13("1+abs(x)^2", trip)
    assert rep.verdict == PASS
    vals = np.array([v for _, v in rep.sub("thm13.iii").raw])
    np.testing.assert_allclose(vals, 1.0, rtol=1e-12)


def test_thm13_radius_condition():
    wide = CutoffSpec(radius=lambda x: max(2.0, 1.2 * abs(float(np.atleast_1d(x)[0]))))
    rep = check_thm13("1+abs(x)", S.isotropic_stable(1.0), cutoff=wide)
    v = rep.sub("thm13.v")
    assert v.verdict == FAIL
    assert v.fitted["c_lsq"] >= 1
    ok = check_thm13("1+abs(x)", S.isotropic_stable(1.0))
    assert ok.sub("thm13.v").fitted["c_lsq"] < 0.95


# --- x-independent triplets -----------------------------------------------

def test_cor15_symmetric_stable_passes():
    a = 1.2
    rep = check_cor15(f"1+abs(x)^{a}", S.isotropic_stable(a))
    assert rep.verdict == PASS
    assert "vacuous" in rep.sub("cor15.i").notes


def test_cor15_drift_with_quadratic_phi_fails_item_i():
    trip = LevyTriplet(b=[1.0], Q=[[0.0]])
    rep = check_cor15("1+abs(x)^2", trip)
    assert subverdicts(rep)["cor15.i"] == FAIL
    assert rep.verdict == FAIL


def test_cor15_drift_only_linear_phi_passes():
    trip = LevyTriplet(b=[1.0], Q=[[0.0]])
    assert check_cor15("1+abs(x)", trip).verdict == PASS


# --- stable domination ----------------------------------------------------

def test_cor17_examples():
    a = 1.5
    rep = check_cor17(f"1+abs(x)^{a}", S.isotropic_stable(a))
    assert rep.condition_id == "cor17" and rep.verdict == PASS
    rel = check_stable_dominated("1+abs(x)^2", S.relativistic_stable(1.0, 1.0), beta=2.0)
    assert rel.verdict == PASS
    too_fast = check_cor17("1+abs(x)^2", S.isotropic_stable(a))
    assert subverdicts(too_fast)["cor17.phi_jump"] == FAIL


def test_asymmetric_density_fails_symmetry():
    a = 1.5
    trip = LevyTriplet(density=lambda y: np.where(y > 0, np.abs(y) ** (-1 - a), 0.0),
                       beta=a, small_exponent=a)
    rep = check_stable_dominated(f"1+abs(x)^{a}", trip)
    assert subverdicts(rep)["cor17.symmetry"] == FAIL
    assert subverdicts(rep)["cor17.domination"] == PASS


def test_cor19_stable_like():
    chars = StateCharacteristics.stable_like(lambda x: 1.2 + 0.5 * np.tanh(x))
    rep = check_stable_dominated("1+abs(x)^0.7", chars)
    assert rep.condition_id == "cor19"
    assert rep.verdict == PASS


def test_tail_exponent_domain():
    with pytest.raises(ParameterDomainError):
        check_stable_dominated(1.0, S.isotropic_stable(1.0), beta=2.5)


# --- decomposable pairs ---------------------------------------------------

APP7 = {
    "i": ("1+abs(x)^1.5", S.isotropic_stable(1.5), "1+abs(x)^0.8", S.isotropic_stable(0.8)),
    "ii": ("1+abs(x)^2", S.relativistic_stable(1.5, 1.0), "1+abs(x)^2",
           S.relativistic_stable(1.0, 1.0)),
    "iii": ("1+abs(x)^2", S.homographic(1.0), "1+abs(x)^2", S.homographic(2.0)),
}


@pytest.mark.parametrize("case", sorted(APP7))
def test_app7_registry_cases_pass(case):
    rep = check_decomposable_pair(*APP7[case])
    assert rep.verdict == PASS
    assert subverdicts(rep) == {"app5.a": PASS, "app5.b": PASS, "app5.c": PASS}


def test_degenerate_bernstein_fails_sublinearity():
    a = S.isotropic_stable(1.5)
    rep = check_decomposable_pair("1+abs(x)^1.5", a, "1+abs(x)^1.5", a)
    assert subverdicts(rep)["app5.b"] == FAIL
    assert rep.verdict == FAIL


def test_unregistered_pair_is_inconclusive():
    rep = check_decomposable_pair(1.0, S.isotropic_stable(1.0), 1.0, S.homographic(1.0))
    assert subverdicts(rep)["app5.a"] == INCONCLUSIVE
    assert rep.verdict != FAIL
    f, reason = bernstein_link(S.isotropic_stable(1.0), S.isotropic_stable(1.5))
    assert f is None and "Bernstein" in reason


@pytest.mark.parametrize("pair", [(1.5, 0.5), (2.0, 1.0), (1.0, 0.3)])
def test_bernstein_link_reproduces_exponent(pair):
    b, a = pair
    f, _ = bernstein_link(S.isotropic_stable(b), S.isotropic_stable(a))
    lam = np.geomspace(1e-3, 1e3, 20)
    np.testing.assert_allclose(f(lam), lam ** (a / b), rtol=1e-12)


# --- verdict rules --------------------------------------------------------

def assert_sound(rep: ConditionReport):
    for r in walk(rep):
        if not r.trace or r.trace_kind not in ("tail_inf", "running_sup"):
            continue
        t = np.array([v for _, v in r.trace])
        i0 = len(t) - 1 - max(1, (len(t) - 1) // 3)
        if r.verdict == PASS:
            assert np.all(np.isfinite(t[i0:]))
            assert t[i0] == t[-1] == 0 or abs(t[-1] / t[i0] - 1) < STABLE_RTOL
        elif r.verdict == FAIL:
            assert (not np.all(np.isfinite(t[i0:]))) or t[-1] >= DIVERGENCE_FACTOR * t[i0]


def test_trace_soundness_on_emitted_reports():
    a = S.isotropic_stable(1.5)
    for rep in (check_growth_timechange("1+abs(x)", S.isotropic_stable(1.0)),
                check_growth_timechange("exp(abs(x))", a),
                check_thm13("1+abs(x)^2", a),
                check_cor15("1+abs(x)^1.5", a),
                check_cor17("1+abs(x)^2", a)):
        assert_sound(rep)


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=3, max_size=40),
       st.sampled_from(["tail_inf", "running_sup"]))
def test_trace_soundness_property(values, kind):
    rep = trace_report("x", np.arange(1, len(values) + 1), values, kind)
    assert_sound(rep)


@given(st.lists(st.sampled_from([PASS, FAIL, INCONCLUSIVE]), min_size=1, max_size=8))
def test_combine_rule(vs):
    out = combine(vs)
    if FAIL in vs:
        assert out == FAIL
    elif set(vs) == {PASS}:
        assert out == PASS
    else:
        assert out == INCONCLUSIVE


def test_report_round_trip():
    rep = check_thm13("1+abs(x)^2", S.isotropic_stable(1.5))
    back = ConditionReport.from_dict(rep.to_dict())
    assert back.verdict == rep.verdict
    assert subverdicts(back) == subverdicts(rep)
    assert not math.isnan(back.sub("thm13.ii").fitted["C"])
