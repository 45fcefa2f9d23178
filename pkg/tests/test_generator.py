import math

import numpy as np
import pytest
from scipy import integrate

from fellerforge.coefficients import StateCoefficient as SC
from fellerforge.errors import AccuracyError, CapabilityError, ParameterDomainError
from fellerforge.generator import (
    TransformGrid,
    apply_generator,
    direct_generator,
    generator_function,
)
from fellerforge.levy import ExponentSpec, stable_density_constant
from fellerforge.symbols import CutoffSpec, StateSymbol, perturbation_apply, truncate_symbol


def gauss(y):
    return np.exp(-np.asarray(y, float) ** 2)


def gauss_d1(y):
    return -2 * y * math.exp(-y * y)


def gauss_d2(y):
    y = np.asarray(y, float)
    return (4 * y**2 - 2) * np.exp(-(y**2))


LAPLACE = StateSymbol(1.0, ExponentSpec.isotropic_stable(2.0))


def test_second_derivative_at_origin():
    assert apply_generator(LAPLACE, gauss, 0.0) == pytest.approx(-2.0, abs=1e-10)


def test_second_derivative_on_interval():
    xs = np.linspace(-3, 3, 25)
    vals = apply_generator(LAPLACE, gauss, xs)
    assert np.max(np.abs(vals - gauss_d2(xs))) < 1e-4


def test_zero_symbol():
    sym = StateSymbol(1.0, lambda x, xi: 0.0 * np.asarray(xi))
    assert apply_generator(sym, gauss, 0.5) == 0


def test_fractional_alpha_one_closed_form_and_pv_oracle():
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(1.0))
    val, err = apply_generator(sym, gauss, 0.0, return_error=True)
    # principal-value oracle: (1/pi) int (f(y) - f(0)) / y^2 dy
    pv = 2 / math.pi * integrate.quad(lambda y: (math.exp(-y * y) - 1) / y**2, 0, np.inf)[0]
    assert pv == pytest.approx(-2 / math.sqrt(math.pi), rel=1e-9)
    # the residual is the periodic-image error, which the estimate must cover
    assert abs(val - pv) <= err
    fine, err_fine = apply_generator(sym, gauss, 0.0, grid=TransformGrid(2**16, 0.05),
                                     return_error=True)
    assert abs(fine - pv) <= err_fine < 1e-6


@pytest.mark.parametrize("alpha", [0.6, 1.3, 1.8])
@pytest.mark.parametrize("x", [0.0, 0.7, 2.5])
def test_fft_matches_direct_integral(alpha, x):
    sym = StateSymbol(SC.trig(0.4), ExponentSpec.isotropic_stable(alpha))
    fft, err = apply_generator(sym, gauss, x, return_error=True)
    direct = direct_generator(sym, gauss, gauss_d1, gauss_d2, x)
    assert abs(fft - direct) <= err + 2e-6


def test_relativistic_fft_matches_direct():
    sym = StateSymbol(1.0, ExponentSpec.relativistic_stable(1.0, 1.0))
    for x in (0.0, 1.5):
        fft, err = apply_generator(sym, gauss, x, return_error=True)
        assert abs(fft - direct_generator(sym, gauss, gauss_d1, gauss_d2, x)) <= err + 1e-6


def test_generator_function_interpolates():
    sym = StateSymbol(SC.trig(0.5), ExponentSpec.isotropic_stable(1.5))
    Af = generator_function(sym, gauss)
    xs = np.array([-2.0, -0.3, 0.0, 1.1, 3.7])
    np.testing.assert_allclose(Af(xs), apply_generator(sym, gauss, xs), atol=1e-7)


def test_generator_function_far_field_tail():
    a = 1.5
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(a))
    Af = generator_function(sym, gauss)
    x = 1e4
    c = stable_density_constant(a)
    assert Af(np.array([x]))[0] == pytest.approx(math.sqrt(math.pi) * c * x ** (-1 - a), rel=1e-3)


def test_2d_laplacian():
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(2.0, dim=2))

    def f(p):
        return np.exp(-np.sum(np.asarray(p) ** 2, axis=-1))
    x = np.array([0.5, -0.2])
    r2 = float(x @ x)
    exact = (4 * r2 - 4) * math.exp(-r2)
    assert apply_generator(sym, f, x) == pytest.approx(exact, abs=1e-6)


def test_boundary_mass_raises():
    wide = lambda y: np.exp(-(np.asarray(y) / 150.0) ** 2)  # noqa: E731
    with pytest.raises(AccuracyError):
        apply_generator(LAPLACE, wide, 0.0)


def test_aliasing_raises():
    narrow = lambda y: np.exp(-(np.asarray(y) / 0.02) ** 2)  # noqa: E731
    with pytest.raises(AccuracyError):
        apply_generator(LAPLACE, narrow, 0.0)


def test_grid_validation():
    with pytest.raises(ParameterDomainError):
        TransformGrid(n=1000)
    with pytest.raises(CapabilityError):
        apply_generator(StateSymbol(1.0, ExponentSpec.isotropic_stable(1.0, dim=3)), gauss,
                        np.zeros(3))


def test_error_estimate_reported():
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(0.8))
    val, err = apply_generator(sym, gauss, 0.0, return_error=True)
    fine, err_fine = apply_generator(sym, gauss, 0.0, grid=TransformGrid(2**17, 0.05),
                                     return_error=True)
    assert err_fine < err
    assert abs(val - fine) <= err + err_fine


def test_refinement_convergence():
    sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(1.2))
    coarse = apply_generator(sym, gauss, 0.4, grid=TransformGrid(2**12, 0.1))
    fine = apply_generator(sym, gauss, 0.4, grid=TransformGrid(2**14, 0.025))
    assert coarse == pytest.approx(fine, abs=1e-7)


@pytest.mark.parametrize("x", [0.0, 1.5, -4.0])
def test_truncation_identity_A_equals_L_plus_P(x):
    a = 1.5
    sym = StateSymbol(SC.power(a), ExponentSpec.isotropic_stable(a))
    cut = CutoffSpec()
    grid = TransformGrid(2**15, 0.05)
    full, e1 = apply_generator(sym, gauss, x, grid=grid, return_error=True)
    trunc, e2 = apply_generator(truncate_symbol(sym, cut), gauss, x, grid=grid, return_error=True)
    p, e3 = perturbation_apply(sym, cut, gauss, x, f_support=7.0, return_error=True)
    assert abs((full - trunc) - p) <= e1 + e2 + e3 + 1e-7
