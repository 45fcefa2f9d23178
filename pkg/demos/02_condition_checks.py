"""Sufficient conditions for existence and conservativeness, checked on grids.

Run with ``python3 demos/02_condition_checks.py``.
"""
from fellerforge import (
    ExponentSpec,
    check_cor17,
    check_decomposable_pair,
    check_growth_timechange,
    check_thm13,
)

S = ExponentSpec

# phi = 1 + |x|^alpha grows no faster than the stable index allows.
rep = check_cor17("1+abs(x)^1.5", S.isotropic_stable(1.5))
print("stable-dominated, phi=1+|x|^1.5:", rep.verdict)

# Quadratic growth breaks the moment condition on small jumps.
rep = check_thm13("1+abs(x)^2", S.isotropic_stable(1.5))
for sub in rep.subreports:
    print(f"  {sub.condition_id:10s} {sub.verdict}")

# For phi = 1 + |x| and q = |xi| the growth functional tends to 4.
rep = check_growth_timechange("1+abs(x)", S.isotropic_stable(1.0))
print("growth limit:", rep.fitted["limit"], "->", rep.verdict)

# Two stable exponents linked by a Bernstein function.
rep = check_decomposable_pair("1+abs(x)^1.5", S.isotropic_stable(1.5),
                              "1+abs(x)^0.8", S.isotropic_stable(0.8))
print("decomposable pair:", rep.verdict)
print(rep.to_json(indent=1)[:400], "...")
