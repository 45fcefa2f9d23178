"""Monte Carlo probes: maximal inequality, moments, perpetual integrals and
the martingale problem.

Run with ``python3 demos/04_probes.py``.
"""
import numpy as np

from fellerforge import (
    ExponentSpec,
    MCConfig,
    StateCoefficient,
    StateSymbol,
    euler_maruyama,
    martingale_residual,
    maximal_inequality_probe,
    moment_scaling_probe,
    perpetual_integral_mc,
)

a = 1.5
sigma = "1+0.5*sin(x)"
phi = StateCoefficient.power_of(StateCoefficient.from_spec(sigma), a)
sym = StateSymbol(phi, ExponentSpec.isotropic_stable(a))
ens = euler_maruyama(sigma, ExponentSpec.isotropic_stable(a), 0.0,
                     MCConfig(n_paths=10_000, seed=1, dt=2.0**-8))

rep = maximal_inequality_probe(ens, 0.0, 1.0, np.geomspace(1, 100, 9), sym)
print("maximal inequality: c_hat =", round(rep.metrics["c_hat"], 3), "->", rep.verdict)

rep = moment_scaling_probe(1.0, 2.0, 1.0, mc=MCConfig(n_paths=10_000, seed=2))
print("E sup|X| ~ t^slope, slope =", round(rep.metrics["slope"], 3), "->", rep.verdict)

rep = perpetual_integral_mc(ExponentSpec.isotropic_stable(a), "1/(1+abs(x)^1.5)",
                            [10, 100, 1000], MCConfig(n_paths=300, seed=3))
print("perpetual integral, 5th percentiles:", np.round(rep.metrics["p05"], 2), "->", rep.notes)

rep = martingale_residual(ens, lambda x: np.exp(-np.asarray(x)**2), sym, [0.5, 1.0])
print("martingale z-scores:", np.round(rep.metrics["z_scores"], 2), "->", rep.verdict)
