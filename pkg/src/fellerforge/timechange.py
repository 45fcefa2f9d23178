"""Random time change ``Y_t = X_{alpha_t}`` through the inverse of the additive
functional ``A(u) = int_0^u 1/phi(X_s) ds``.

Paths are piecewise constant between knots, so ``A`` is piecewise linear and
is inverted in closed form.  A constant ``phi = c`` takes a linear-clock fast
path that gives ``A(u) = u / c`` and ``alpha_t = c t`` exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coefficients import StateCoefficient, as_coefficient
from .errors import DomainError, ParameterDomainError, SimulationBudgetError
from .levy import ExponentSpec
from .parallel import map_blocks
from .paths import CEMETERY, Ensemble, MCConfig, PathSkeleton
from .rng import RngStream
from .sampling import IncrementSampler

#: Base-horizon cap as a multiple of the initial base horizon.
HORIZON_CAP_FACTOR = 2**10
#: Fraction of censored paths above which the budget counts as exhausted.
MAX_CENSORED_SHARE = 0.5
#: With at most this many unfinished paths in a block the engine steps in chunks.
CHUNK_ACTIVE = 64
#: Base steps per chunk.
CHUNK_STEPS = 2048


def _constant_value(phi: StateCoefficient) -> Optional[float]:
    spec = phi.spec if isinstance(phi, StateCoefficient) else {}
    if spec.get("kind") == "constant":
        return float(spec["value"])
    return None


def _phi_values(phi, states: np.ndarray) -> np.ndarray:
    x = states[:, 0] if states.shape[1] == 1 and phi.dim == 1 else states
    with np.errstate(all="ignore"):
        v = np.asarray(phi(x), float)
    if not np.all(np.isfinite(v)):
        raise DomainError("phi is not finite along the path")
    if np.any(v <= 0):
        raise DomainError("phi must be strictly positive along the path")
    return v


@dataclass(frozen=True)
class ClockResult:
    """Additive functional of one path.

    Attributes
    ----------
    knot_times : ndarray
        The path's time grid ``u_i`` (ending at the explosion time if any).
    A_values : ndarray
        ``A(u_i)``; ``A`` is linear between knots with slope ``1/phi_values[i]``.
    phi_values : ndarray
        ``phi(x_i)``; the last value also governs the clock beyond the grid.
    r_values : dict
        ``{n: r_n = A(n)}`` for the requested base horizons.
    final : bool
        The path ends in the cemetery at its last knot, so ``A(end)`` is ``r_inf``.
    constant : float, optional
        ``c`` when ``phi = c`` (linear-clock fast path).
    """

    knot_times: np.ndarray
    A_values: np.ndarray
    phi_values: np.ndarray
    r_values: dict = field(default_factory=dict)
    final: bool = False
    constant: Optional[float] = None

    @property
    def horizon(self) -> float:
        """``A`` at the last knot."""
        return float(self.A_values[-1])

    def A(self, u) -> np.ndarray:
        """Evaluate the piecewise-linear clock at base times ``u``."""
        u = np.asarray(u, float)
        if self.constant is not None:
            return u / self.constant
        i = np.clip(np.searchsorted(self.knot_times, u, side="right") - 1, 0,
                    len(self.phi_values) - 1)
        return self.A_values[i] + (u - self.knot_times[i]) / self.phi_values[i]

    def to_csv(self, path) -> None:
        """Rows ``u,A_of_u``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "A_of_u"])
            for u, a in zip(self.knot_times, self.A_values):
                w.writerow([repr(float(u)), repr(float(a))])


def additive_clock(path: PathSkeleton, phi, horizons: Sequence[float] = ()) -> ClockResult:
    """``A(u) = int_0^u 1/phi(X_s) ds`` (exact for the piecewise-constant path).

    Parameters
    ----------
    path : PathSkeleton
        For an exploded path the clock stops at the explosion time and is final.
    phi : StateCoefficient (numbers, expressions and callables are coerced)
    horizons : sequence of float
        Base times ``n`` at which ``r_n = A(n)`` is reported.

    Raises
    ------
    DomainError
        If ``phi`` is not finite and positive on the path states.
    """
    phi = as_coefficient(phi, path.dim)
    u, states = path.times, path.states
    if path.exploded:
        keep = u < path.explosion_time
        states = states[keep]
        u = np.concatenate([u[keep], [path.explosion_time]])
    c = _constant_value(phi)
    if c is not None:
        if not (math.isfinite(c) and c > 0):
            raise DomainError("phi must be strictly positive and finite")
        vals = np.full(len(states), c)
        A = u / c
    else:
        vals = _phi_values(phi, states)
        A = np.concatenate([[0.0], np.add.accumulate(np.diff(u) / vals[: len(u) - 1])])
    clock = ClockResult(u, A, vals, {}, bool(path.exploded), c)
    r = {float(n): float(clock.A(n)) for n in horizons}
    return ClockResult(u, A, vals, r, bool(path.exploded), c)


def inverse_clock(clock: ClockResult, t: float, final: Optional[bool] = None) -> float:
    """``alpha_t``: the unique ``u`` with ``A(u) = t``.

    Returns ``inf`` (the explosion marker, ``t >= r_inf``) when ``t`` is at or
    beyond the clock's end and the path is final.  Otherwise the clock is
    extended beyond the last knot with its last slope.

    Raises
    ------
    DomainError
        If ``t < 0``.
    """
    t = float(t)
    if t < 0 or math.isnan(t):
        raise DomainError("inverse clock needs t >= 0")
    final = clock.final if final is None else final
    if t >= clock.horizon and final:
        return math.inf
    if clock.constant is not None:
        return clock.constant * t
    A, u = clock.A_values, clock.knot_times
    i = int(np.searchsorted(A, t, side="right")) - 1
    i = min(max(i, 0), len(clock.phi_values) - 1)
    return float(u[i] + (t - A[i]) * clock.phi_values[i])


def time_change_path(path: PathSkeleton, phi, t_grid) -> PathSkeleton:
    """``Y_t = X_{alpha_t}`` on ``t_grid`` (increasing, starting at 0).

    Times with ``alpha_t`` beyond the path go to the cemetery if the path
    exploded (``t >= r_inf``) and are flagged censored otherwise.
    """
    phi = as_coefficient(phi, path.dim)
    t = np.asarray(t_grid, float)
    if t.ndim != 1 or len(t) == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ParameterDomainError("t_grid must be increasing and start at 0")
    clock = additive_clock(path, phi)
    if clock.constant is not None:
        alpha = clock.constant * t
        idx = np.searchsorted(path.times, alpha, side="right") - 1
        inside = alpha < path.explosion_time if path.exploded else alpha <= path.times[-1]
    else:
        A = clock.A_values
        idx = np.searchsorted(A, t, side="right") - 1
        inside = t < clock.horizon if path.exploded else t <= clock.horizon
    idx = np.clip(idx, 0, len(path.states) - 1)
    states = path.states[idx].copy()
    states[~inside] = CEMETERY
    beyond = not bool(np.all(inside))
    exploded = bool(path.exploded and beyond)
    return PathSkeleton(
        t, states, exploded=exploded,
        explosion_time=clock.horizon if exploded else None,
        censored=bool(beyond and not path.exploded),
        path_id=path.path_id,
    )


# ---------------------------------------------------------------------------
# ensemble engine
# ---------------------------------------------------------------------------

def _initial(x0, gen, nb, d):
    if callable(x0):
        x = np.asarray(x0(gen, nb), float)
        return x.reshape(nb, d)
    return np.tile(np.atleast_1d(np.asarray(x0, float)), (nb, 1))


def _eval_integrands(integrands, X, d):
    arg = X[:, 0] if d == 1 else X
    return np.column_stack([np.asarray(g(arg), float) for g in integrands]) \
        if integrands else np.zeros((len(X), 0))


def _tc_block(gen, nb, sampler, phi, const, x0, du, horizon, rec, escape, cap_steps,
              integrands, store):
    d = sampler.dim
    m = len(rec)
    q = len(integrands)
    X = _initial(x0, gen, nb, d)
    x_start = X.copy()
    A = np.zeros(nb)
    alive = np.ones(nb, bool)
    j = np.zeros(nb, int)
    out_x = np.full((nb, m, d), np.nan)
    out_sup = np.full((nb, m), np.nan)
    out_alpha = np.full((nb, m), np.nan)
    out_int = np.full((nb, m, q), np.nan)
    acc = np.zeros((nb, q))
    sup = np.zeros(nb)
    expl = np.full(nb, np.nan)
    hist_x, hist_a = ([X.copy()], [A.copy()]) if store else (None, None)
    k = 0
    rec_ext = np.append(rec, np.inf)
    while True:
        active = alive & (j < m)
        if not active.any() or k >= cap_steps:
            break
        ia = np.flatnonzero(active)
        if const is None and not store and len(ia) <= CHUNK_ACTIVE:
            # few stragglers left: step them in vectorised chunks
            K = min(CHUNK_STEPS, cap_steps - k)
            _tc_chunk(gen, sampler, phi, ia, K, k * du, du, rec, escape, integrands,
                      X, A, alive, j, sup, acc, expl, x_start,
                      out_x, out_sup, out_alpha, out_int)
            k += K
            continue
        Xa = X[ia]
        u_k, u_next = k * du, (k + 1) * du
        if const is not None:
            phia = np.full(len(ia), const)
            A_next_a = np.full(len(ia), u_next / const)
        else:
            phia = _phi_values(phi, Xa)
            A_next_a = A[ia] + (u_next - u_k) / phia
        ga = _eval_integrands(integrands, Xa, d)
        # record every requested time in [A_k, A_{k+1})
        while True:
            jr = j[ia]
            r = rec_ext[jr]
            hit = (r * const < u_next) if const is not None else (r < A_next_a)
            hit &= jr < m
            if not hit.any():
                break
            rows, cols = ia[hit], jr[hit]
            out_x[rows, cols] = Xa[hit]
            out_sup[rows, cols] = sup[rows]
            rr = r[hit]
            if const is not None:
                out_alpha[rows, cols] = const * rr
                out_int[rows, cols] = acc[rows] + ga[hit] * (rr - u_k / const)[:, None]
            else:
                out_alpha[rows, cols] = u_k + (rr - A[rows]) * phia[hit]
                out_int[rows, cols] = acc[rows] + ga[hit] * (rr - A[rows])[:, None]
            j[rows] += 1
        acc[ia] += ga * (A_next_a - (u_k / const if const is not None else A[ia]))[:, None]
        A[ia] = A_next_a
        step = sampler.draw(gen, len(ia)).reshape(len(ia), d)
        Xn = Xa + step
        dev = np.linalg.norm(Xn - x_start[ia], axis=1)
        # escapes after the last record time do not matter
        esc = (np.linalg.norm(Xn, axis=1) > escape) & (j[ia] < m)
        X[ia] = Xn
        sup[ia] = np.maximum(sup[ia], dev)
        if esc.any():
            gone = ia[esc]
            alive[gone] = False
            expl[gone] = A_next_a[esc]
            X[gone] = np.nan
        if store:
            hist_x.append(X.copy())
            hist_a.append(np.where(active, A, np.nan))
        k += 1
    exploded = ~alive
    censored = alive & (j < m)
    paths = None
    if store:
        paths = _tc_paths(np.array(hist_x), np.array(hist_a), du, const, exploded, expl,
                          censored, horizon)
    return out_x, out_sup, out_alpha, out_int, exploded, censored, expl, paths


def _tc_chunk(gen, sampler, phi, ia, K, u0, du, rec, escape, integrands,
              X, A, alive, j, sup, acc, expl, x_start, out_x, out_sup, out_alpha, out_int):
    """Advance the paths ``ia`` by ``K`` base steps at once (updates arrays in place)."""
    d = sampler.dim
    na, m = len(ia), len(rec)
    steps = sampler.draw(gen, na * K).reshape(K, na, d)
    Xs = np.cumsum(np.concatenate([X[ia][None], steps]), axis=0)
    with np.errstate(all="ignore"):
        esc = np.linalg.norm(Xs[1:], axis=2) > escape
    # index of the first escaped state (K + 1 if none)
    e = np.where(esc.any(axis=0), esc.argmax(axis=0) + 1, K + 1)
    valid = np.arange(K)[:, None] < e[None, :]
    held = np.where(valid[..., None], Xs[:K], Xs[:1])
    phis = _phi_values(phi, held.reshape(K * na, d)).reshape(K, na)
    g = _eval_integrands(integrands, held.reshape(K * na, d), d).reshape(K, na, -1)
    dA = du / phis
    knots = np.concatenate([A[ia][None], A[ia][None] + np.cumsum(dA, axis=0)])
    integ = np.concatenate([acc[ia][None], acc[ia][None] + np.cumsum(g * dA[..., None], axis=0)])
    with np.errstate(invalid="ignore"):
        dev = np.linalg.norm(Xs[1:] - x_start[ia][None], axis=2)
    sups = np.maximum.accumulate(np.concatenate([sup[ia][None], dev]), axis=0)
    for p, row in enumerate(ia):
        jj = j[row]
        rs = rec[jj:]
        ii = np.searchsorted(knots[:, p], rs, side="right") - 1
        nt = int(np.sum(ii <= min(K, e[p]) - 1))
        if nt:
            cols, i_sel, r_sel = np.arange(jj, jj + nt), ii[:nt], rs[:nt]
            out_x[row, cols] = Xs[i_sel, p]
            out_sup[row, cols] = sups[i_sel, p]
            out_alpha[row, cols] = u0 + i_sel * du + (r_sel - knots[i_sel, p]) * phis[i_sel, p]
            out_int[row, cols] = integ[i_sel, p] + g[i_sel, p] * (r_sel - knots[i_sel, p])[:, None]
            j[row] += nt
        if j[row] == m:
            continue
        if e[p] <= K:
            alive[row] = False
            expl[row] = knots[e[p], p]
            X[row] = np.nan
        else:
            X[row], A[row], acc[row], sup[row] = Xs[K, p], knots[K, p], integ[K, p], sups[K, p]


def _tc_paths(hx, ha, du, const, exploded, expl, censored, horizon):
    """Y skeletons with knots at ``A_k`` (truncated at the horizon)."""
    paths = []
    for i in range(hx.shape[1]):
        A = ha[:, i]
        ok = np.isfinite(A)
        A, X = A[ok], hx[ok, i]
        keep = A <= horizon
        if exploded[i]:
            keep &= A < expl[i]
        A, X = A[keep], X[keep]
        X = X[np.isfinite(X).all(axis=1)] if exploded[i] else X
        A = A[: len(X)]
        paths.append(PathSkeleton(A, X, exploded=bool(exploded[i] and expl[i] <= horizon),
                                  explosion_time=float(expl[i]) if exploded[i] and expl[i] <= horizon else None,
                                  censored=bool(censored[i]), path_id=i))
    return paths


def _alpha_of(spec: ExponentSpec) -> float:
    if spec.alpha is not None:
        return spec.alpha
    return spec.tail_exponent


def simulate_timechanged(base: ExponentSpec, phi, x0, horizon: Optional[float] = None,
                         mc: MCConfig = MCConfig(), record_times=None, stream_id: int = 2,
                         integrands: Sequence[Callable] = ()) -> Ensemble:
    """Simulate ``Y = X_{alpha_.}`` for a Levy base ``X`` started at ``x0``.

    The base path is simulated with step ``mc.step(alpha)`` until its clock
    reaches ``horizon``; the base time is capped at ``2**10`` times the
    initial base horizon ``horizon * phi(x0)``.  Paths that exhaust the cap
    are flagged censored.

    Parameters
    ----------
    base : ExponentSpec
    phi : StateCoefficient
    x0 : float, d-vector, or callable ``(gen, size) -> states``
    horizon : float, optional
        Defaults to ``mc.horizon``.
    mc : MCConfig
    record_times : array_like, optional
        Y-times to record (default: ``horizon`` only).
    stream_id : int
        Random substream id (cross-validation uses different ids per engine).
    integrands : sequence of callables
        Functions ``g`` for which ``int_0^t g(Y_s) ds`` is recorded.

    Raises
    ------
    SimulationBudgetError
        If more than half of the paths are censored.
    """
    d = base.dim
    phi = as_coefficient(phi, d)
    horizon = float(mc.horizon if horizon is None else horizon)
    rec = np.atleast_1d(np.asarray([horizon] if record_times is None else record_times, float))
    if np.any(np.diff(rec) <= 0) or rec[0] < 0 or rec[-1] > horizon:
        raise ParameterDomainError("record times must increase within [0, horizon]")
    du = MCConfig(mc.n_paths, horizon, mc.dt, mc.seed).step(_alpha_of(base))
    sampler = IncrementSampler(base, du)
    const = _constant_value(phi)
    if const is not None and not (const > 0 and math.isfinite(const)):
        raise DomainError("phi must be strictly positive and finite")
    if callable(x0):
        phi0 = 1.0 if const is None else const
    else:
        phi0 = float(_phi_values(phi, np.atleast_1d(np.asarray(x0, float))[None, :])[0])
    cap_steps = int(math.ceil(HORIZON_CAP_FACTOR * horizon * max(phi0, 1e-300) / du))
    root = RngStream(mc.seed, stream_id)

    def run(integ, rec_times, store):
        def block(i, s, e):
            return _tc_block(root.child(i).generator(), e - s, sampler, phi, const, x0, du,
                             horizon, rec_times, mc.escape_radius, cap_steps, integ, store)
        return map_blocks(block, int(mc.n_paths), mc.threads)

    parts = run(list(integrands), rec, mc.store_paths)
    cat = [np.concatenate([p[k] for p in parts]) for k in range(7)]
    states, sup, alpha, integ, exploded, censored, expl = cat
    if censored.mean() > MAX_CENSORED_SHARE:
        raise SimulationBudgetError(
            f"{int(censored.sum())} of {len(censored)} paths hit the base-horizon cap")
    paths = None
    if mc.store_paths:
        paths = [p for part in parts for p in part[7]]
        for k, p in enumerate(paths):
            object.__setattr__(p, "path_id", k)

    def replay(gs, times):
        times = np.atleast_1d(np.asarray(times, float))
        res = run(list(gs), times, False)
        return np.concatenate([p[3] for p in res]), np.concatenate([p[0] for p in res])

    x0_arr = np.full(d, np.nan) if callable(x0) else np.atleast_1d(np.asarray(x0, float))
    ens = Ensemble(rec, states, sup, exploded, censored, expl, x0_arr, clock=alpha,
                   paths=paths, replay=replay,
                   meta={"engine": "time-change", "base": base.to_dict(), "phi": phi.spec,
                         "mc": mc.to_dict(), "base_step": du, "stream_id": stream_id})
    if integrands:
        ens.meta["integrals"] = integ
    return ens


__all__ = [
    "ClockResult",
    "additive_clock",
    "inverse_clock",
    "time_change_path",
    "simulate_timechanged",
    "HORIZON_CAP_FACTOR",
]
