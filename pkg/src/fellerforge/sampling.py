"""Exact and approximate samplers for Levy increments.

Closed-form families are sampled exactly:

* isotropic stable, d = 1: Chambers-Mallows-Stuck transform of a uniform
  angle and an exponential;
* isotropic stable, d >= 2: sub-Gaussian mixture ``sqrt(2A) G`` with ``A``
  positive (alpha/2)-stable;
* relativistic stable: ``sqrt(2S) G`` with ``S`` an exponentially tilted
  positive stable subordinator;
* truncated stable (d = 1): difference of two tilted positive stable variables;
* homographic: compound Poisson with Gaussian-mixture jumps.

Generic one-dimensional triplets use compound Poisson sampling of jumps above
a cutoff ``eps`` plus a Gaussian substitute for the compensated small jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import CapabilityError, ParameterDomainError
from .levy import ExponentSpec, LevyTriplet
from .parallel import map_blocks
from .rng import RngStream, as_generator

#: Variance share allotted to the Gaussian substitute for small jumps.
SMALL_JUMP_VARIANCE_SHARE = 1e-4
#: Cap on the expected number of compound-Poisson jumps per increment.
MAX_EXPECTED_JUMPS = 200.0


def symmetric_stable(alpha: float, size, gen: np.random.Generator) -> np.ndarray:
    """Standard symmetric stable variates with ``E exp(i xi X) = exp(-|xi|^alpha)``."""
    if alpha == 2:
        return gen.standard_normal(size) * math.sqrt(2.0)
    v = math.pi * (gen.random(size) - 0.5)
    if alpha == 1:
        return np.tan(v)
    w = gen.standard_exponential(size)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def positive_stable(rho: float, size, gen: np.random.Generator) -> np.ndarray:
    """Kanter's sampler: ``E exp(-s P) = exp(-s^rho)`` for ``rho`` in (0, 1)."""
    if not 0 < rho < 1:
        raise ParameterDomainError("positive stable index must lie in (0, 1)")
    u = math.pi * gen.random(size)
    e = gen.standard_exponential(size)
    return (np.sin(rho * u) / np.sin(u) ** (1 / rho)) * (
        np.sin((1 - rho) * u) / e
    ) ** ((1 - rho) / rho)


def tempered_stable_subordinator(rho, theta, t, size, gen):
    """Value at time ``t`` of the subordinator with Laplace exponent
    ``(lam + theta)^rho - theta^rho``.

    Uses ``k = ceil(t theta^rho)`` independent pieces, each sampled by
    accepting a positive stable proposal with probability ``exp(-theta P)``;
    the acceptance rate per piece is at least ``1/e``.
    """
    size = int(size)
    if theta == 0:
        return t ** (1 / rho) * positive_stable(rho, size, gen)
    k = max(1, math.ceil(t * theta**rho))
    tp = t / k
    scale = tp ** (1 / rho)
    need = size * k
    out = np.empty(need)
    filled = 0
    while filled < need:
        batch = max(64, int(1.6 * (need - filled)))
        p = scale * positive_stable(rho, batch, gen)
        acc = p[gen.random(batch) < np.exp(-theta * p)]
        take = min(len(acc), need - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
    return out.reshape(size, k).sum(axis=1)


@dataclass
class _GenericPlan:
    drift: float
    gauss_sd: float
    rate: float
    eps: float
    grid: Optional[np.ndarray]
    cdf: Optional[np.ndarray]
    r_max: float
    tail_prob: float
    beta: float
    sign_plus: object
    atoms: Optional[tuple]
    atom_mass: float


def _plan_generic(trip: LevyTriplet, t: float) -> _GenericPlan:
    if trip.dim != 1:
        raise CapabilityError("generic-triplet sampling is available in d=1 only")
    n = trip.density
    q = float(trip.Q[0, 0])
    b = float(trip.b[0])
    atoms = trip.atoms
    atom_mass = float(atoms[1].sum()) if atoms is not None else 0.0
    if atoms is not None:
        loc, w = atoms
        small = np.abs(loc) < 1
        b -= float(np.sum(loc[small] * w[small]))
    if n is None:
        return _GenericPlan(b, math.sqrt(q * t), 0.0, 0.0, None, None, 0.0, 0.0, 2.0,
                            None, atoms, atom_mass)

    def n_even(r):
        return n(r) + n(-r)

    def small_var(e):
        return trip.radial_mass(lambda r: r**2, 0.0, e)

    proxy = q + small_var(1.0) + trip.tail_mass(1.0)
    target = SMALL_JUMP_VARIANCE_SHARE * proxy
    # largest eps in (0, 1] whose small-jump variance stays under target
    lo, hi = -12.0, 0.0
    if small_var(1.0) <= target:
        eps = 1.0
    else:
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if small_var(10**mid) <= target:
                lo = mid
            else:
                hi = mid
        eps = 10**lo
    supp = trip.support
    rate = trip.tail_mass(eps) if eps < supp else 0.0
    while rate * t > MAX_EXPECTED_JUMPS and eps < min(1.0, supp):
        eps = min(2 * eps, 1.0)
        rate = trip.tail_mass(eps)
    gauss_var = q + small_var(eps)
    comp = 0.0
    if not trip.symmetric and eps < 1:
        comp, _ = integrate.quad(lambda r: r * (n(r) - n(-r)), eps, min(1.0, supp), limit=200)
    drift = b - comp
    if rate <= 0:
        return _GenericPlan(drift, math.sqrt(gauss_var * t), 0.0, eps, None, None, 0.0, 0.0,
                            trip.beta, None, atoms, atom_mass)
    # tabulated radial CDF on (eps, r_max], Pareto tail beyond r_max
    r_max = supp if math.isfinite(supp) else eps
    if not math.isfinite(supp):
        r_max = max(1.0, eps)
        while trip.tail_mass(r_max) > 1e-7 * rate and r_max < 1e12:
            r_max *= 4
    grid = np.geomspace(eps, r_max, 1025)
    pts = sorted(p for p in trip.breakpoints if eps < p < r_max)
    grid = np.union1d(grid, np.array(pts, float))
    pieces = [integrate.quad(lambda r: float(n_even(r)), a, c, limit=100)[0]
              for a, c in zip(grid[:-1], grid[1:])]
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    tail_prob = max(rate - cdf[-1], 0.0) / rate if math.isfinite(r_max) else 0.0
    cdf = cdf / cdf[-1] * (1 - tail_prob)

    def sign_plus(r):
        p, m = n(r), n(-r)
        return p / np.maximum(p + m, 1e-300)

    return _GenericPlan(drift, math.sqrt(gauss_var * t), rate, eps, grid, cdf, r_max,
                        tail_prob, trip.beta, sign_plus, atoms, atom_mass)


def _draw_generic(plan: _GenericPlan, t: float, size: int, gen) -> np.ndarray:
    x = plan.drift * t + plan.gauss_sd * gen.standard_normal(size)
    if plan.rate > 0:
        counts = gen.poisson(plan.rate * t, size)
        total = int(counts.sum())
        if total:
            u = gen.random(total)
            r = np.empty(total)
            body = u < plan.cdf[-1]
            r[body] = np.interp(u[body], plan.cdf, plan.grid)
            if plan.tail_prob > 0:
                v = (1 - u[~body]) / plan.tail_prob
                r[~body] = plan.r_max * np.maximum(v, 1e-300) ** (-1 / plan.beta)
            signs = np.where(gen.random(total) < plan.sign_plus(r), 1.0, -1.0)
            owner = np.repeat(np.arange(size), counts)
            x += np.bincount(owner, weights=signs * r, minlength=size)
    if plan.atoms is not None and plan.atom_mass > 0:
        loc, w = plan.atoms
        counts = gen.poisson(plan.atom_mass * t, size)
        total = int(counts.sum())
        if total:
            which = gen.choice(len(loc), size=total, p=w / plan.atom_mass)
            owner = np.repeat(np.arange(size), counts)
            x += np.bincount(owner, weights=loc[which], minlength=size)
    return x


class IncrementSampler:
    """Sampler for increments ``L_{s+t} - L_s`` over a fixed time step ``t``.

    Construction does all the per-step precomputation (e.g. the tabulated
    jump distribution of a generic triplet) so engines can draw millions of
    increments cheaply.
    """

    def __init__(self, spec: ExponentSpec, t: float):
        if not t > 0:
            raise ParameterDomainError("time step must be positive")
        self.spec = spec
        self.t = float(t)
        self.dim = spec.dim
        fam = spec.family
        if fam == "truncated_stable" and spec.dim != 1:
            raise CapabilityError("truncated_stable sampling is available in d=1 only")
        self._plan = _plan_generic(spec.triplet, self.t) if fam == "generic" else None

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        """``size`` increments; shape ``(size,)`` for d = 1 else ``(size, d)``."""
        spec, t, d = self.spec, self.t, self.dim
        fam = spec.family
        if fam == "isotropic_stable":
            a = spec.alpha
            if d == 1:
                return t ** (1 / a) * symmetric_stable(a, size, gen)
            g = gen.standard_normal((size, d))
            if a == 2:
                return math.sqrt(2 * t) * g
            mix = positive_stable(a / 2, size, gen)
            return t ** (1 / a) * np.sqrt(2 * mix)[:, None] * g
        if fam == "relativistic_stable":
            s = tempered_stable_subordinator(spec.alpha / 2, spec.m**2, t, size, gen)
            g = gen.standard_normal((size, d))
            out = np.sqrt(2 * s)[:, None] * g
            return out[:, 0] if d == 1 else out
        if fam == "truncated_stable":
            a, m = spec.alpha, spec.m
            t1 = tempered_stable_subordinator(a, m, t / 2, size, gen)
            t2 = tempered_stable_subordinator(a, m, t / 2, size, gen)
            return t1 - t2
        if fam == "homographic":
            counts = gen.poisson(t, size)
            mix = gen.gamma(np.maximum(counts, 1), spec.lam) * (counts > 0)
            g = gen.standard_normal((size, d))
            out = np.sqrt(2 * mix)[:, None] * g
            return out[:, 0] if d == 1 else out
        return _draw_generic(self._plan, t, size, gen)


def sample_increments(spec: ExponentSpec, t: float, n: int, rng, threads=None) -> np.ndarray:
    """Draw ``n`` i.i.d. copies of ``L_t``.

    Parameters
    ----------
    spec : ExponentSpec
    t : float
        Positive time.
    n : int
        Number of samples.
    rng : RngStream, numpy Generator or int
        With an ``RngStream`` the samples are drawn in fixed blocks, one
        child stream per block, so the output is identical for any thread
        count.  A Generator is consumed sequentially.
    threads : int, optional
        Worker threads (default from ``FORGE_DEFAULT_THREADS`` or 1).

    Returns
    -------
    ndarray of shape ``(n,)`` (d = 1) or ``(n, d)``.
    """
    if n < 1:
        raise ParameterDomainError("n must be at least 1")
    sampler = IncrementSampler(spec, t)
    if isinstance(rng, np.random.Generator):
        return sampler.draw(rng, int(n))
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    parts = map_blocks(
        lambda i, s, e: sampler.draw(stream.child(i).generator(), e - s), int(n), threads
    )
    return np.concatenate(parts, axis=0)


def write_samples_csv(path, samples) -> None:
    """CSV with header ``index,value_1,...,value_d``."""
    arr = np.asarray(samples, float)
    if arr.ndim == 1:
        arr = arr[:, None]
    d = arr.shape[1]
    header = "index," + ",".join(f"value_{k + 1}" for k in range(d))
    data = np.column_stack([np.arange(len(arr)), arr])
    fmt = ["%d"] + ["%.17g"] * d
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")


__all__ = [
    "IncrementSampler",
    "sample_increments",
    "symmetric_stable",
    "positive_stable",
    "tempered_stable_subordinator",
    "write_samples_csv",
    "as_generator",
]
