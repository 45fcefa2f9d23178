"""Euler-Maruyama sampler for ``dX_t = sigma(X_{t-}) dL_t`` with exact driver increments."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .coefficients import as_coefficient
from .errors import CapabilityError, DomainError
from .levy import ExponentSpec
from .parallel import map_blocks
from .paths import Ensemble, MCConfig, PathSkeleton
from .rng import RngStream
from .sampling import IncrementSampler
from .timechange import _alpha_of, _eval_integrands, _initial


def _em_block(gen, nb, sampler, sigma, x0, times, rec, escape, integrands, store, allow_zero):
    n = len(times) - 1
    m, q = len(rec), len(integrands)
    X = _initial(x0, gen, nb, 1)[:, 0]
    x_start = X.copy()
    alive = np.ones(nb, bool)
    sup = np.zeros(nb)
    acc = np.zeros((nb, q))
    expl = np.full(nb, np.nan)
    out_x = np.full((nb, m, 1), np.nan)
    out_sup = np.full((nb, m), np.nan)
    out_int = np.full((nb, m, q), np.nan)
    # record index k(r) = last grid time <= r
    kk = np.clip(np.searchsorted(times, rec, side="right") - 1, 0, n)
    hist = np.empty((n + 1, nb)) if store else None
    if store:
        hist[0] = X
    j = 0
    for k in range(n + 1):
        g = _eval_integrands(integrands, X[:, None], 1)
        while j < m and kk[j] == k:
            out_x[:, j, 0] = X
            out_sup[:, j] = np.where(alive, sup, np.nan)
            out_int[:, j] = np.where(alive[:, None], acc + g * (rec[j] - times[k]), np.nan)
            j += 1
        if k == n:
            break
        h = times[k + 1] - times[k]
        with np.errstate(invalid="ignore"):
            s = np.asarray(sigma(X), float)
        bad = alive & ~(np.isfinite(s) & ((s >= 0) if allow_zero else (s > 0)))
        if bad.any():
            raise DomainError("sigma must be finite and strictly positive along the paths")
        dL = sampler.draw(gen, nb)
        acc += g * h
        Xn = X + s * dL
        esc = alive & (np.abs(Xn) > escape)
        Xn[~alive] = np.nan
        if esc.any():
            alive &= ~esc
            expl[esc] = times[k + 1]
            Xn[esc] = np.nan
        with np.errstate(invalid="ignore"):
            sup = np.where(alive, np.maximum(sup, np.abs(Xn - x_start)), sup)
        X = Xn
        if store:
            hist[k + 1] = X
    paths = None
    if store:
        paths = []
        for i in range(nb):
            if np.isnan(expl[i]):
                paths.append(PathSkeleton(times, hist[:, i]))
            else:
                keep = times < expl[i]
                paths.append(PathSkeleton(times[keep], hist[keep, i], exploded=True,
                                          explosion_time=float(expl[i])))
    return out_x, out_sup, out_int, ~alive, expl, paths


def euler_maruyama(sigma, driver: ExponentSpec, x0, mc: MCConfig = MCConfig(),
                   record_times=None, stream_id: int = 1,
                   integrands: Sequence[Callable] = (), allow_zero: bool = False) -> Ensemble:
    """Simulate ``X_{k+1} = X_k + sigma(X_k) Delta L_k`` on the grid of ``mc``.

    Parameters
    ----------
    sigma : StateCoefficient (numbers, expressions, callables accepted)
    driver : ExponentSpec
        One-dimensional driver; increments are exact samples of ``L_dt``.
    x0 : float or callable ``(gen, size) -> initial states``
    mc : MCConfig
        ``dt`` defaults to ``horizon * 2**-10`` (alpha >= 1) or ``2**-12``.
    record_times : array_like, optional
        Times where states and running sups are recorded (default: horizon).
    stream_id : int
    integrands : sequence of callables
        ``int_0^t g(X_s) ds`` is recorded for each ``g`` (piecewise-exact).
    allow_zero : bool
        Admit ``sigma = 0`` (diagnostic override).

    Raises
    ------
    DomainError
        If ``sigma <= 0`` is met on a live path.
    """
    if driver.dim != 1:
        raise CapabilityError("the SDE engine uses one-dimensional drivers")
    sigma = as_coefficient(sigma, 1)
    n, times = mc.grid(_alpha_of(driver))
    rec = np.atleast_1d(np.asarray([mc.horizon] if record_times is None else record_times, float))
    if np.any(np.diff(rec) <= 0) or rec[0] < 0 or rec[-1] > mc.horizon:
        raise DomainError("record times must increase within [0, horizon]")
    sampler = IncrementSampler(driver, times[1] - times[0])
    root = RngStream(mc.seed, stream_id)

    def run(integ, rec_times, store):
        def block(i, s, e):
            return _em_block(root.child(i).generator(), e - s, sampler, sigma, x0, times,
                             rec_times, mc.escape_radius, integ, store, allow_zero)
        return map_blocks(block, int(mc.n_paths), mc.threads)

    parts = run(list(integrands), rec, mc.store_paths)
    states, sup, integ, exploded, expl = (np.concatenate([p[k] for p in parts]) for k in range(5))
    paths = None
    if mc.store_paths:
        paths = [p for part in parts for p in part[5]]
        for k, p in enumerate(paths):
            object.__setattr__(p, "path_id", k)

    def replay(gs, rec_times):
        rec_times = np.atleast_1d(np.asarray(rec_times, float))
        res = run(list(gs), rec_times, False)
        return np.concatenate([p[2] for p in res]), np.concatenate([p[0] for p in res])

    x0_arr = np.array([np.nan]) if callable(x0) else np.atleast_1d(np.asarray(x0, float))
    ens = Ensemble(rec, states, sup, exploded, np.zeros(len(exploded), bool), expl, x0_arr,
                   paths=paths, replay=replay,
                   meta={"engine": "euler-maruyama", "driver": driver.to_dict(),
                         "sigma": sigma.spec, "mc": mc.to_dict(), "step": float(times[1]),
                         "stream_id": stream_id})
    if integrands:
        ens.meta["integrals"] = integ
    return ens


def simulate_levy(driver: ExponentSpec, x0, mc: MCConfig = MCConfig(), record_times=None,
                  stream_id: int = 1, integrands: Sequence[Callable] = ()) -> Ensemble:
    """The driver itself started at ``x0`` (``sigma = 1``, exact in law on the grid)."""
    return euler_maruyama(1.0, driver, x0, mc, record_times, stream_id, integrands)


def detect_explosion(path: PathSkeleton, radius: float):
    """First grid time with ``|X_t - X_0| > radius``.

    Returns
    -------
    (bool, float or None)
    """
    if not radius > 0:
        raise DomainError("radius must be positive")
    dev = np.linalg.norm(path.states - path.states[0], axis=1)
    with np.errstate(invalid="ignore"):
        hit = np.flatnonzero(~(dev <= radius))
    if path.exploded:
        first = float(path.times[hit[0]]) if hit.size else float(path.explosion_time)
        return True, min(first, float(path.explosion_time))
    if hit.size == 0:
        return False, None
    return True, float(path.times[hit[0]])


__all__ = ["MCConfig", "euler_maruyama", "simulate_levy", "detect_explosion"]
