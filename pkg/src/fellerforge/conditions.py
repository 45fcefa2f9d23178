"""Numeric checklists for the growth, conservativeness and existence conditions.

Every check returns a :class:`ConditionReport` whose verdict follows from
its trace alone (see :mod:`fellerforge.reports`).  Condition ids are stable:
``time-eq5``, ``time-eq6``, ``thm13.i`` .. ``thm13.v``, ``cor15.i`` ..
``cor15.v``, ``cor17``, ``cor19``, ``app5.a`` .. ``app5.c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .coefficients import StateCoefficient, as_coefficient
from .errors import CapabilityError, ParameterDomainError
from .levy import ExponentSpec, LevyTriplet, evaluate_exponent, levy_khintchine, to_triplet
from .reports import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    ConditionReport,
    combine,
    trace_report,
)
from .symbols import CutoffSpec, StateCharacteristics

_QUAD = dict(limit=200, epsabs=1e-14, epsrel=1e-9)


@dataclass(frozen=True)
class ProbeGrids:
    """Finite grids standing in for the asymptotic statements.

    Attributes
    ----------
    R_grid : radii for the liminf conditions (log-spaced in [1, 1e9]).
    x_grid : state radii for the growth ratios (log-spaced in [1, 1e9]).
    n_y, n_xi : points of the radial y- and xi-grids per R.
    n_y_state, n_xi_state : reduced sizes for state-dependent symbols
        (each point costs a Levy-Khintchine quadrature).
    directions : angular directions in d = 2.
    lam_grid : arguments for the sublinearity test of Bernstein links.
    ball_radii : radii r in the vanishing-ball conditions.
    k_points, k_coarse : points per axis of the compact box in the continuity
        probe (drift modulus and measure functionals respectively).
    h_grid : decreasing increments for moduli of continuity.
    r_small : radii for the small-jump second moment (used in reverse).
    bumps : number of radial test bumps (log-spaced radii in [1e-2, 1e2]).
    """

    R_grid: tuple = tuple(np.geomspace(1.0, 1e9, 37))
    x_grid: tuple = tuple(np.geomspace(1.0, 1e9, 37))
    n_y: int = 64
    n_xi: int = 32
    n_y_state: int = 12
    n_xi_state: int = 6
    directions: int = 16
    lam_grid: tuple = tuple(np.geomspace(1.0, 1e60, 61))
    ball_radii: tuple = (0.5, 1.0, 2.0)
    k_points: int = 129
    k_coarse: int = 33
    h_grid: tuple = tuple(10.0 ** -np.arange(1, 7))
    r_small: tuple = tuple(np.geomspace(1e-8, 1.0, 33))
    bumps: int = 8

    def __post_init__(self):
        for name in ("R_grid", "x_grid", "lam_grid", "r_small"):
            g = np.asarray(getattr(self, name), float)
            if g.size == 0 or np.any(np.diff(g) <= 0) or g[0] <= 0:
                raise ParameterDomainError(f"{name} must be nonempty, positive and increasing")
            object.__setattr__(self, name, tuple(g.tolist()))
        h = np.asarray(self.h_grid, float)
        if h.size == 0 or np.any(h <= 0) or np.any(np.diff(h) >= 0):
            raise ParameterDomainError("h_grid must be positive and decreasing")
        object.__setattr__(self, "h_grid", tuple(h.tolist()))
        if min(self.n_y, self.n_xi, self.n_y_state, self.n_xi_state, self.directions,
               self.k_points, self.k_coarse, self.bumps) < 1:
            raise ParameterDomainError("grid resolutions must be positive")

    def y_radii(self, R: float, n: Optional[int] = None) -> np.ndarray:
        """Radial grid on [0, 4R], endpoint included."""
        n = n or self.n_y
        top = 4 * R
        lin = np.linspace(0, top, max(2, n // 2))
        log = np.geomspace(top * 1e-4, top, max(2, n - n // 2))
        return np.unique(np.concatenate([lin, log]))

    def xi_radii(self, R: float, n: Optional[int] = None) -> np.ndarray:
        n = n or self.n_xi
        return np.linspace(0, 1 / R, max(2, n))

    def to_dict(self) -> dict:
        return {
            "R_grid": [self.R_grid[0], self.R_grid[-1], len(self.R_grid)],
            "x_grid": [self.x_grid[0], self.x_grid[-1], len(self.x_grid)],
            "n_y": self.n_y, "n_xi": self.n_xi, "directions": self.directions,
        }


DEFAULT_GRIDS = ProbeGrids()


def _directions(d: int, k: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = 2 * math.pi * np.arange(k) / k
        return np.column_stack([np.cos(th), np.sin(th)])
    # coordinate axes in higher dimension
    eye = np.eye(d)
    return np.concatenate([eye, -eye])


def _points(radii, d, k):
    """All points ``r * e`` for the radii and directions; shape (len(radii), m, d)."""
    dirs = _directions(d, k)
    return np.asarray(radii, float)[:, None, None] * dirs[None, :, :]


def _eval_coef(coef: StateCoefficient, pts) -> np.ndarray:
    """Evaluate on points of shape (..., d); d = 1 coefficients get the scalar."""
    with np.errstate(all="ignore"):
        if coef.dim == 1:
            return np.asarray(coef(pts[..., 0]), float)
        return np.asarray(coef(pts), float)


def _mul(a, b):
    """Product with the convention ``inf * 0 = 0``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    with np.errstate(all="ignore"):
        out = a * b
    return np.where((a == 0) | (b == 0), 0.0, out)


def _as_base(q):
    if isinstance(q, (ExponentSpec, StateCharacteristics)) or callable(q):
        return q
    raise ParameterDomainError("q must be an ExponentSpec, StateCharacteristics or callable")


def _dim(q) -> int:
    if isinstance(q, (ExponentSpec, StateCharacteristics)):
        return q.dim
    return int(getattr(q, "dim", 1))


def _sup_abs_exponent(spec: ExponentSpec, radius: float, grids: ProbeGrids) -> float:
    r = grids.xi_radii(radius)
    xi = r if spec.dim == 1 else _points(r, spec.dim, grids.directions).reshape(-1, spec.dim)
    return float(np.max(np.abs(evaluate_exponent(spec, xi))))


def _sup_state_symbol(q, y_pts, xi_r, d, grids) -> np.ndarray:
    """``sup_xi |q(y, xi)|`` for every y point (state-dependent q)."""
    xi = xi_r if d == 1 else _points(xi_r, d, grids.directions).reshape(-1, d)
    out = np.empty(len(y_pts))
    for i, y in enumerate(y_pts):
        y_arg = float(y[0]) if d == 1 else y
        if isinstance(q, StateCharacteristics):
            trip = q.triplet_at(y_arg)
            vals = [abs(levy_khintchine(trip, v)[0]) for v in np.atleast_1d(xi)]
        else:
            vals = np.abs(np.asarray(q(y_arg, xi), complex))
        out[i] = float(np.max(vals))
    return out


def _growth_trace(weight: Callable, q, grids: ProbeGrids) -> np.ndarray:
    d = _dim(q)
    G = []
    state = not isinstance(q, ExponentSpec)
    for R in grids.R_grid:
        if not state:
            y = _points(grids.y_radii(R), d, grids.directions).reshape(-1, d)
            w = float(np.max(weight(y)))
            s = _sup_abs_exponent(q, R, grids)
            G.append(float(_mul(w, s)))
        else:
            y = _points(grids.y_radii(R, grids.n_y_state), d, grids.directions).reshape(-1, d)
            w = weight(y)
            s = _sup_state_symbol(q, y, grids.xi_radii(R, grids.n_xi_state), d, grids)
            G.append(float(np.max(_mul(w, s))))
    return np.asarray(G)


def check_growth_timechange(phi, q, grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """``liminf_R sup_{|y|<=4R} sup_{|xi|<=1/R} max{phi(y),1} |q(y,xi)| < inf``.

    The liminf is estimated by the tail infimum of ``G(R)`` over the R grid.
    """
    q = _as_base(q)
    phi = as_coefficient(phi, _dim(q))
    G = _growth_trace(lambda y: np.maximum(_eval_coef(phi, y), 1.0), q, grids)
    return trace_report("time-eq5", grids.R_grid, G, "tail_inf",
                        notes="tail infimum of G(R) over the R grid",
                        diagnostics={"grids": grids.to_dict()})


def check_perpetual(f, psi: ExponentSpec, grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """``liminf_R sup_{|y|<=4R} (1/f(y)) sup_{|xi|<=1/R} |psi(xi)| < inf``."""
    f = as_coefficient(f, psi.dim)

    def weight(y):
        with np.errstate(divide="ignore", over="ignore"):
            v = _eval_coef(f, y)
            if np.any(v < 0) or np.any(np.isnan(v)):
                raise ParameterDomainError("f must be strictly positive")
            # zeros (including underflow) make 1/f unbounded
            return 1.0 / v

    G = _growth_trace(weight, psi, grids)
    return trace_report("time-eq6", grids.R_grid, G, "tail_inf",
                        notes="tail infimum of sup (1/f) sup |psi| over the R grid",
                        diagnostics={"grids": grids.to_dict()})


# ---------------------------------------------------------------------------
# measure functionals for one frozen triplet
# ---------------------------------------------------------------------------

def _ball_mass(trip: LevyTriplet, center, r: float) -> float:
    """``nu(B(center, r))`` for a ball not containing the origin."""
    c = np.atleast_1d(np.asarray(center, float))
    dist = float(np.linalg.norm(c))
    if dist <= r:
        return math.inf
    total = 0.0
    if trip.atoms is not None:
        loc, w = trip.atoms
        total += float(np.sum(w[np.abs(loc - c[0]) < r]))
    n = trip.density
    if n is None:
        return total
    if trip.dim == 1:
        a, b = c[0] - r, c[0] + r
        if trip.support < min(abs(a), abs(b)):
            return total
        v, _ = integrate.quad(lambda y: float(n(np.float64(y))), a, b, **_QUAD)
        return total + v
    if trip.dim == 2:
        def g(rho):
            cosang = (rho**2 + dist**2 - r**2) / (2 * rho * dist)
            return float(n(np.float64(rho))) * 2 * rho * math.acos(min(1.0, max(-1.0, cosang)))
        lo, hi = dist - r, min(dist + r, trip.support)
        if hi <= lo:
            return total
        v, _ = integrate.quad(g, lo, hi, **_QUAD)
        return total + v
    raise CapabilityError("ball masses are implemented for d <= 2")


def _odd_moment_signed(trip: LevyTriplet, lo: float, hi: float, trust_flag: bool = True) -> float:
    """``int_{lo<|y|<hi} y nu(dy)`` in d = 1 (zero for radial densities in d >= 2)."""
    if hi <= lo or trip.dim > 1:
        return 0.0
    tot = 0.0
    if trip.atoms is not None:
        loc, w = trip.atoms
        sel = (np.abs(loc) > lo) & (np.abs(loc) < hi)
        tot += float(np.sum(loc[sel] * w[sel]))
    n = trip.density
    if n is not None and not (trust_flag and trip.symmetric):
        top = min(hi, trip.support)
        if top > lo:
            edges = [lo] + [p for p in sorted(trip.breakpoints) if lo < p < top] + [top]
            for a, b in zip(edges[:-1], edges[1:]):
                v, _ = integrate.quad(lambda u: u * float(n(np.float64(u)) - n(np.float64(-u))),
                                      a, b, **_QUAD)
                tot += v
    return tot


def _second_moment(trip: LevyTriplet, R: float) -> float:
    return float(np.linalg.norm(trip.Q, 2)) + trip.radial_mass(lambda r: r**2, 0.0, R)


def _tail(trip: LevyTriplet, R: float) -> float:
    return trip.tail_mass(R)


def _nonzero_b(b) -> bool:
    return bool(np.any(np.asarray(b) != 0))


def _triplet_fn(chars_or_triplet):
    if isinstance(chars_or_triplet, LevyTriplet):
        return lambda x: chars_or_triplet
    if isinstance(chars_or_triplet, ExponentSpec):
        t = to_triplet(chars_or_triplet)
        return lambda x: t
    return chars_or_triplet.triplet_at


def _x_points(grids, d):
    return _points(grids.x_grid, d, grids.directions)


def _max_over_dirs(fn, pts, d):
    """``max`` over directions of ``fn(x)`` for every radius."""
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        vals = [fn(float(p[0]) if d == 1 else p) for p in pts[i]]
        out[i] = np.max(vals)
    return out


def _vanishing_balls(prefix, weight, trip_at, grids, d):
    """Decay of ``weight(x) nu(x, B(-x, r))`` along |x|, for each ball radius."""
    subs = []
    for r in grids.ball_radii:
        sel = np.asarray(grids.x_grid) > 2 * r
        radii = np.asarray(grids.x_grid)[sel]
        pts = _points(radii, d, grids.directions)
        vals = _max_over_dirs(
            lambda x: float(_mul(weight(x), _ball_mass(trip_at(x), -np.atleast_1d(x), r))),
            pts, d)
        subs.append(trace_report(f"{prefix}@r={r:g}", radii, vals, "decay"))
    verdict = combine(s.verdict for s in subs)
    return subs, verdict


def check_thm13(phi, chars, cutoff: CutoffSpec = CutoffSpec(),
                grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Conditions (i)-(v) for existence of the process with symbol ``phi q``.

    (i)   ``max{phi,1} nu(x, B(-x,r)) -> 0`` as ``|x| -> inf`` (decay trace);
    (ii)  ``max{phi,1} |b + int_{1<|y|<R(x)} y nu| / (1+|x|)`` bounded;
    (iii) ``max{phi,1} (|Q| + int_{|y|<=R(x)} |y|^2 nu) / (1+|x|^2)`` bounded;
    (iv)  ``max{phi,1} nu(x, B(0,R(x))^c)`` bounded;
    (v)   ``R(x) <= c (1+|x|)`` with least-squares ``c < 0.95``.
    """
    if isinstance(chars, (ExponentSpec, LevyTriplet)):
        chars = (StateCharacteristics.from_exponent(chars) if isinstance(chars, ExponentSpec)
                 else StateCharacteristics.from_triplet(chars))
    d = chars.dim
    if d > 2:
        raise CapabilityError("thm13 checks are implemented for d <= 2")
    phi = as_coefficient(phi, d)
    trip_at = chars.triplet_at

    def w(x):
        return max(float(_eval_coef(phi, np.atleast_1d(np.asarray(x, float))[None, :])[0]), 1.0) \
            if d > 1 else max(float(phi(x)), 1.0)

    pts = _x_points(grids, d)
    xs = np.asarray(grids.x_grid)
    subs_i, v_i = _vanishing_balls("thm13.i", w, trip_at, grids, d)
    rep_i = ConditionReport("thm13.i", v_i, trace=subs_i[0].trace, trace_kind="decay",
                            subreports=subs_i, notes="max over ball radii")

    def drift(x):
        t = trip_at(x)
        R = cutoff.R(x)
        vec = np.atleast_1d(t.b).astype(float).copy()
        if d == 1:
            signed = _odd_moment_signed(t, 1.0, R)
            vec[0] += signed
        return float(np.linalg.norm(vec))

    ii = _max_over_dirs(lambda x: float(_mul(w(x), drift(x))), pts, d) / (1 + xs)
    iii = _max_over_dirs(lambda x: float(_mul(w(x), _second_moment(trip_at(x), cutoff.R(x)))),
                         pts, d) / (1 + xs**2)
    iv = _max_over_dirs(lambda x: float(_mul(w(x), _tail(trip_at(x), cutoff.R(x)))), pts, d)
    rep_ii = trace_report("thm13.ii", xs, ii, "running_sup")
    rep_iii = trace_report("thm13.iii", xs, iii, "running_sup")
    rep_iv = trace_report("thm13.iv", xs, iv, "running_sup")
    rep_v = _radius_report(cutoff, grids, d)
    subs = [rep_i, rep_ii, rep_iii, rep_iv, rep_v]
    return ConditionReport("thm13", combine(s.verdict for s in subs), subreports=subs,
                           diagnostics={"grids": grids.to_dict()})


def _radius_report(cutoff: CutoffSpec, grids: ProbeGrids, d: int) -> ConditionReport:
    xs = np.concatenate([[0.0], np.asarray(grids.x_grid)])
    pts = _points(xs, d, grids.directions)
    Rv = _max_over_dirs(lambda x: cutoff.R(x), pts, d)
    ratio = Rv / (1 + xs)
    c_lsq = float(np.sum(Rv * (1 + xs)) / np.sum((1 + xs) ** 2))
    rep = trace_report("thm13.v", xs, ratio, "running_sup",
                       notes="least-squares c of R(x) against 1+|x| must be < 0.95")
    rep.fitted["c_lsq"] = c_lsq
    rep.fitted["max_ratio"] = float(np.max(ratio))
    if rep.verdict == PASS and c_lsq >= 0.95:
        rep.verdict = FAIL if c_lsq >= 1 else INCONCLUSIVE
    return rep


def check_cor15(phi, triplet: Union[LevyTriplet, ExponentSpec],
                grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Conditions (i)-(v) for x-independent triplets with radius ``|x|/2``.

    (i) is active only for ``b != 0`` and requires ``phi <= C (1+|x|)``.
    (iii) includes ``|Q|`` as in the state-dependent check.
    """
    trip = to_triplet(triplet) if isinstance(triplet, ExponentSpec) else triplet
    d = trip.dim
    if d > 2:
        raise CapabilityError("cor15 checks are implemented for d <= 2")
    phi = as_coefficient(phi, d)
    xs = np.asarray(grids.x_grid)
    pts = _x_points(grids, d)
    phi_vals = np.max(_eval_coef(phi, pts), axis=1)
    wmax = np.maximum(phi_vals, 1.0)
    if _nonzero_b(trip.b):
        rep_i = trace_report("cor15.i", xs, phi_vals / (1 + xs), "running_sup",
                             notes="b != 0: phi(x) <= C1 (1+|x|)")
    else:
        rep_i = ConditionReport("cor15.i", PASS, notes="b = 0: condition vacuous",
                                trace_kind="running_sup")
    half = xs / 2
    odd = np.array([abs(_odd_moment_signed(trip, 1.0, h)) for h in half])
    second = np.array([_second_moment(trip, h) for h in half])
    tail = np.array([_tail(trip, h) for h in half])
    rep_ii = trace_report("cor15.ii", xs, _mul(wmax, odd) / (1 + xs), "running_sup")
    rep_iii = trace_report("cor15.iii", xs, _mul(wmax, second) / (1 + xs**2), "running_sup")
    rep_iv = trace_report("cor15.iv", xs, _mul(wmax, tail), "running_sup")

    def w(x):
        return max(float(phi(x)), 1.0) if d == 1 else max(
            float(_eval_coef(phi, np.asarray(x)[None, :])[0]), 1.0)

    subs_v, v_v = _vanishing_balls("cor15.v", w, lambda x: trip, grids, d)
    rep_v = ConditionReport("cor15.v", v_v, trace=subs_v[0].trace, trace_kind="decay",
                            subreports=subs_v)
    quad = trace_report("quadratic_growth", xs, phi_vals / (1 + xs**2), "running_sup")
    subs = [rep_i, rep_ii, rep_iii, rep_iv, rep_v]
    return ConditionReport("cor15", combine(s.verdict for s in subs), subreports=subs,
                           diagnostics={"phi_quadratic_growth": quad.verdict,
                                        "grids": grids.to_dict()})


def _symmetry_report(cid, trips, lo, hi, d) -> ConditionReport:
    """Relative odd moment on log shells of ``lo < |y| < hi``."""
    if d > 1:
        return ConditionReport(cid, PASS, notes="radial density: symmetric by construction")
    shells = np.geomspace(lo, hi, 13)
    worst = 0.0
    trace = []
    for a, b in zip(shells[:-1], shells[1:]):
        rel = 0.0
        for t in trips:
            odd = abs(_odd_moment_signed(t, a, b, trust_flag=False))
            absm = t.radial_mass(lambda r: r, a, b)
            if absm > 0:
                rel = max(rel, odd / absm)
        trace.append((b, rel))
        worst = max(worst, rel)
    verdict = PASS if worst <= 1e-8 else FAIL
    return ConditionReport(cid, verdict, trace=trace, trace_kind="running_sup",
                           fitted={"max_relative_odd_moment": worst},
                           notes="relative odd moment per shell must vanish")


def check_stable_dominated(phi, chars, beta=None,
                           grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Stable domination of the jump density and the growth caps on ``phi``.

    With an x-independent triplet (or ExponentSpec) this is ``cor17``:
    ``nu <= C|y|^{-d-beta}`` and symmetric on ``B(0,1)^c``, ``phi <= c(1+|x|)``
    if ``b != 0`` and ``phi <= c(1+|x|^beta)`` if ``nu != 0``.  With
    :class:`StateCharacteristics` it is ``cor19`` with ``beta(x)``, symmetry on
    ``B(0,1)`` and the caps imposed pointwise.
    """
    state = isinstance(chars, StateCharacteristics) and chars.source is None
    if isinstance(chars, StateCharacteristics) and chars.source is not None:
        chars = chars.source
    if isinstance(chars, ExponentSpec):
        if beta is None:
            beta = chars.tail_exponent
        chars = to_triplet(chars)
    cid = "cor19" if state else "cor17"
    d = chars.dim
    phi = as_coefficient(phi, d)
    if state:
        beta_fn = (lambda x: float(beta(x))) if callable(beta) else (
            (lambda x: float(beta)) if beta is not None else chars.beta_at)
        trip_at = chars.triplet_at
        x_probe = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 16)])
    else:
        b_val = chars.beta if beta is None else float(beta)
        beta_fn = lambda x: b_val  # noqa: E731
        trip_at = lambda x: chars  # noqa: E731
        x_probe = np.array([0.0])
    if not all(0 < beta_fn(x) <= 2 for x in x_probe):
        raise ParameterDomainError("tail exponent must lie in (0, 2]")
    # domination n(x,y) |y|^{d+beta(x)} bounded on |y| >= 1
    ys = np.geomspace(1.0, 1e6, 25)
    dom = np.zeros(len(ys))
    for x in x_probe:
        xp = x if d == 1 else np.r_[x, np.zeros(d - 1)]
        t = trip_at(xp)
        if t.density is None:
            continue
        bx = beta_fn(xp)
        ydir = np.concatenate([ys, -ys]) if d == 1 else ys
        with np.errstate(all="ignore"):
            vals = np.asarray(t.density(ydir), float) * np.abs(ydir) ** (d + bx)
            vals = np.where(np.abs(ydir) > t.support, 0.0, vals)
        v = vals.reshape(2, -1).max(axis=0) if d == 1 else vals
        dom = np.maximum(dom, v)
    rep_dom = trace_report(f"{cid}.domination", ys, dom, "running_sup",
                           notes="n(y) |y|^(d+beta) along |y| >= 1")
    trips = [trip_at(x if d == 1 else np.r_[x, np.zeros(d - 1)]) for x in x_probe]
    if state:
        rep_sym = _symmetry_report(f"{cid}.symmetry", trips, 1e-6, 1.0, d)
    else:
        rep_sym = _symmetry_report(f"{cid}.symmetry", trips, 1.0, 1e6, d)
    # growth caps on phi
    xs = np.asarray(grids.x_grid)
    pts = _x_points(grids, d)
    phi_vals = _eval_coef(phi, pts)
    subs = [rep_dom, rep_sym]
    has_b = any(_nonzero_b(t.b) for t in trips)
    has_nu = any(t.has_jumps() for t in trips)
    if has_b:
        subs.append(trace_report(f"{cid}.phi_drift", xs, np.max(phi_vals, axis=1) / (1 + xs),
                                 "running_sup", notes="phi <= c (1+|x|) where b != 0"))
    if has_nu:
        bx = np.array([[beta_fn(float(p[0]) if d == 1 else p) for p in row] for row in pts])
        cap = np.max(phi_vals / (1 + xs[:, None] ** bx), axis=1)
        subs.append(trace_report(f"{cid}.phi_jump", xs, cap, "running_sup",
                                 notes="phi <= c (1+|x|^beta)"))
    subs.append(trace_report(f"{cid}.phi_quadratic", xs, np.max(phi_vals, axis=1) / (1 + xs**2),
                             "running_sup", notes="phi grows at most quadratically"))
    return ConditionReport(cid, combine(s.verdict for s in subs), subreports=subs,
                           diagnostics={"grids": grids.to_dict()})


# ---------------------------------------------------------------------------
# decomposable pairs
# ---------------------------------------------------------------------------

def bernstein_link(psi1: ExponentSpec, psi2: ExponentSpec):
    """Registry lookup of a Bernstein ``f`` with ``psi2 = f(psi1)``.

    Returns ``(f, description)`` or ``(None, reason)``.
    """
    if psi1.dim != psi2.dim:
        return None, "dimensions differ"
    if psi1 == psi2:
        return (lambda lam: np.asarray(lam, float)), "identical exponents: f(l) = l"
    if psi1.family == psi2.family == "isotropic_stable":
        b, a = psi1.alpha, psi2.alpha
        if a <= b:
            return (lambda lam: np.asarray(lam, float) ** (a / b)), f"f(l) = l^({a}/{b})"
        return None, "alpha2 > alpha1: power exceeds 1, not Bernstein"
    if psi1.family == psi2.family == "relativistic_stable" and psi1.m == psi2.m:
        b, a, m = psi1.alpha, psi2.alpha, psi1.m
        if a <= b:
            return ((lambda lam: (np.asarray(lam, float) + m**b) ** (a / b) - m**a),
                    f"f(l) = (l + m^{b})^({a}/{b}) - m^{a}")
        return None, "alpha2 > alpha1 for the relativistic pair"
    if psi1.family == psi2.family == "homographic":
        rho, lam2 = psi1.lam, psi2.lam
        if rho <= lam2:
            k = lam2 / rho
            return ((lambda u: k * np.asarray(u, float) / (1 + (k - 1) * np.asarray(u, float))),
                    f"f(u) = k u / (1 + (k-1) u), k = {k:g}")
        return None, "rho > lambda for the homographic pair"
    return None, "pair not in the Bernstein registry"


def check_decomposable_pair(phi1, psi1: ExponentSpec, phi2, psi2: ExponentSpec,
                            grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Existence conditions for ``phi1 psi1 + phi2 psi2``.

    (a) Bernstein link ``psi2 = f(psi1)`` from the registry (verified on a
        xi grid); missing entries give ``inconclusive``, never ``fail``;
    (b) sublinearity ``f(l)/l -> 0`` on a log grid (decay trace);
    (c) ``sup phi2/phi1 < inf`` along the x grid.
    Both pairs are also run through :func:`check_cor15` (reported as
    diagnostics and folded into the overall verdict).
    """
    d = psi1.dim
    phi1 = as_coefficient(phi1, d)
    phi2 = as_coefficient(phi2, d)
    f, desc = bernstein_link(psi1, psi2)
    if f is None:
        rep_a = ConditionReport("app5.a", INCONCLUSIVE, notes=desc, trace_kind="registry")
    else:
        xi = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)])
        xi_pts = xi if d == 1 else np.column_stack([xi] + [np.zeros_like(xi)] * (d - 1))
        p1 = np.real(evaluate_exponent(psi1, xi_pts))
        p2 = np.real(evaluate_exponent(psi2, xi_pts))
        err = float(np.max(np.abs(p2 - f(p1)) / (1 + np.abs(p2))))
        verdict = PASS if err < 1e-9 else INCONCLUSIVE
        rep_a = ConditionReport("app5.a", verdict, notes=desc, trace_kind="registry",
                                fitted={"link_residual": err})
    if f is None:
        rep_b = ConditionReport("app5.b", INCONCLUSIVE, notes="no link to test",
                                trace_kind="decay")
    else:
        lam = np.asarray(grids.lam_grid)
        with np.errstate(all="ignore"):
            ratio = np.asarray(f(lam), float) / lam
        rep_b = trace_report("app5.b", lam, ratio, "decay", notes="f(l)/l along the l grid")
    xs = np.concatenate([[0.0], np.asarray(grids.x_grid)])
    pts = _points(xs, d, grids.directions)
    with np.errstate(all="ignore"):
        ratio = np.max(_eval_coef(phi2, pts) / _eval_coef(phi1, pts), axis=1)
    rep_c = trace_report("app5.c", xs, ratio, "running_sup", notes="phi2/phi1 along |x|")
    pre1 = check_cor15(phi1, psi1, grids)
    pre2 = check_cor15(phi2, psi2, grids)
    subs = [rep_a, rep_b, rep_c]
    verdict = combine([s.verdict for s in subs] + [pre1.verdict, pre2.verdict])
    return ConditionReport("app5", verdict, subreports=subs,
                           diagnostics={"cor15_pair1": pre1.verdict, "cor15_pair2": pre2.verdict})


def check_cor17(phi, spec, grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Shorthand for :func:`check_stable_dominated` with an x-independent exponent."""
    return check_stable_dominated(phi, spec, None, grids)


__all__ = [
    "ProbeGrids",
    "DEFAULT_GRIDS",
    "check_growth_timechange",
    "check_perpetual",
    "check_thm13",
    "check_cor15",
    "check_cor17",
    "check_stable_dominated",
    "check_decomposable_pair",
    "bernstein_link",
]
