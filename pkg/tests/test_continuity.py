import json

import numpy as np
import pytest

from fellerforge.conditions import ProbeGrids
from fellerforge.continuity import box_points, continuity_json, continuity_probe
from fellerforge.errors import CapabilityError, ParameterDomainError
from fellerforge.levy import ExponentSpec, LevyTriplet
from fellerforge.reports import FAIL, PASS
from fellerforge.symbols import StateCharacteristics

SMALL = ProbeGrids(k_points=33, k_coarse=9, R_grid=tuple(np.geomspace(1, 1e6, 13)),
                   r_small=tuple(np.geomspace(1e-8, 1, 13)), h_grid=(1e-1, 1e-2, 1e-3, 1e-4))


def verdicts(rep):
    return {s.condition_id: s.verdict for s in rep.subreports}


def cosine_counterexample():
    """Jumps of size +-x at rate 1/(2x^2), collapsing into unit diffusion at x = 0."""
    def atoms(x):
        x = float(np.atleast_1d(x)[0])
        if x == 0:
            return np.array([]), np.array([])
        return np.array([-abs(x), abs(x)]), np.full(2, 0.5 / x**2)

    def Q(x):
        return np.array([[1.0 if float(np.atleast_1d(x)[0]) == 0 else 0.0]])
    return StateCharacteristics(Q=Q, atoms=atoms, symmetric=True)


@pytest.mark.parametrize("spec", [ExponentSpec.isotropic_stable(1.5),
                                  ExponentSpec.relativistic_stable(1.0, 1.0)])
def test_x_independent_characteristics_pass(spec):
    rep = continuity_probe(spec, (-1, 1), SMALL)
    assert rep.condition_id == "appen1.iii"
    assert verdicts(rep) == {f"appen1.iii.{k}": PASS for k in "abcd"}
    assert rep.diagnostics["Q_continuity"] == PASS


def test_stable_like_passes():
    chars = StateCharacteristics.stable_like(lambda x: 1.2 + 0.5 * np.tanh(x))
    rep = continuity_probe(chars, (-1, 1), SMALL)
    assert rep.verdict == PASS


def test_counterexample_flags_diffusion_discontinuity():
    chars = cosine_counterexample()
    # the frozen symbols converge to the diffusion symbol as x -> 0
    from fellerforge.symbols import StateSymbol, evaluate_symbol
    sym = StateSymbol(1.0, chars)
    xi = np.array([0.5, 1.0, 2.0])
    for x in (1e-2, 1e-4):
        np.testing.assert_allclose(np.real(evaluate_symbol(sym, x, xi)),
                                   2 * np.sin(x * xi / 2) ** 2 / x**2, rtol=1e-6)
    np.testing.assert_allclose(np.real(evaluate_symbol(sym, 0.0, xi)), xi**2 / 2, rtol=1e-12)

    rep = continuity_probe(chars, (-1, 1), SMALL)
    v = verdicts(rep)
    assert v["appen1.iii.a"] == PASS and v["appen1.iii.b"] == PASS
    assert rep.diagnostics["Q_continuity"] == FAIL
    assert "Q-discontinuity" in rep.notes


def test_constant_drift_and_discontinuous_drift():
    trip = LevyTriplet(b=[1.0], Q=[[0.0]])
    assert verdicts(continuity_probe(trip, (-1, 1), SMALL))["appen1.iii.a"] == PASS
    jump = StateCharacteristics(b=lambda x: np.array([float(np.atleast_1d(x)[0] > 0)]))
    assert verdicts(continuity_probe(jump, (-1, 1), SMALL))["appen1.iii.a"] == FAIL


def test_box_points():
    pts = box_points((-1, 1), 1, 5)
    assert pts.shape[1] == 1
    assert {-1.0, 0.0, 1.0} <= set(pts[:, 0].tolist())
    assert np.any(np.abs(pts[:, 0] - 1e-10) < 1e-20)
    pts2 = box_points(((-1, 1), (0, 2)), 2, 25)
    assert pts2.shape[1] == 2
    with pytest.raises(ParameterDomainError):
        box_points((1, -1), 1, 5)


def test_two_dimensional_probe():
    rep = continuity_probe(ExponentSpec.isotropic_stable(1.0, dim=2), ((-1, 1), (-1, 1)), SMALL)
    assert rep.verdict == PASS
    with pytest.raises(CapabilityError):
        continuity_probe(ExponentSpec.isotropic_stable(1.0, dim=3), np.zeros((3, 2)), SMALL)


def test_json_view():
    rep = continuity_probe(ExponentSpec.isotropic_stable(1.5), (-1, 1), SMALL)
    out = continuity_json(rep)
    assert [s["id"] for s in out["subverdicts"]] == [f"appen1.iii.{k}" for k in "abcd"]
    assert len(out["grids"]) == len(out["values"]) == 4
    json.dumps(out, allow_nan=False)
