"""Characteristic exponents, exact increments and the spectral generator.

Run with ``python3 demos/01_exponents_and_sampling.py``.
"""
import numpy as np

from fellerforge import (
    ExponentSpec,
    StateSymbol,
    apply_generator,
    empirical_cf,
    evaluate_exponent,
    sample_increments,
)

# The stable exponent is normalised so that psi(xi) = |xi|^alpha.
spec = ExponentSpec.isotropic_stable(1.5)
xi = np.array([0.5, 1.0, 2.0])
print("psi(xi) by quadrature:", evaluate_exponent(spec, xi).real)
print("|xi|^1.5            :", xi**1.5)

# Exact samples of L_t agree with exp(-t psi) to within Monte Carlo error.
t = 0.7
x = sample_increments(spec, t, 200_000, 1)
cf = empirical_cf(x, xi)
print("empirical CF:", cf.values.real.round(4), "+/-", cf.std_errors.round(4))
print("exp(-t psi) :", np.exp(-t * xi**1.5).round(4))

# A f for the Brownian symbol |xi|^2 is f''.
sym = StateSymbol(1.0, ExponentSpec.isotropic_stable(2.0))
grid = np.linspace(-2, 2, 5)
af = apply_generator(sym, lambda y: np.exp(-y**2), grid)
print("A f      :", af.round(6))
print("f''(x)   :", ((4 * grid**2 - 2) * np.exp(-grid**2)).round(6))
