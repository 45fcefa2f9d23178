"""State-dependent symbols ``p(x, xi) = phi(x) q(x, xi)``, truncation and the
bounded perturbation ``P``.

A symbol is a sum of at most two terms ``phi_j(x) q_j(x, xi)``.  Each ``q_j``
is an :class:`ExponentSpec` (x-independent), a :class:`StateCharacteristics`
(state-dependent Levy triplet) or an opaque callable ``q(x, xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .coefficients import StateCoefficient, as_coefficient
from .errors import CapabilityError, DomainError, ParameterDomainError
from .levy import (
    DEFAULT_QUAD,
    ExponentSpec,
    LevyTriplet,
    QuadratureConfig,
    evaluate_exponent,
    levy_khintchine,
    sphere_area,
    stable_density_constant,
    to_triplet,
)


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------

def cubic_cutoff(u):
    """C^1 radial cutoff: 1 on [0, 1], ``1 - 3s^2 + 2s^3`` (s = u - 1) on [1, 2], 0 after."""
    u = np.abs(np.asarray(u, float))
    s = np.clip(u - 1.0, 0.0, 1.0)
    return 1.0 - 3.0 * s**2 + 2.0 * s**3


def _norm(x):
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, float))))


@dataclass(frozen=True)
class CutoffSpec:
    """Cutoff ``chi`` (as a radial profile) and truncation radius ``R(x)``.

    The default ``R(x) = max{2, |x|/2}``; ``radius`` may be a positive number
    (constant radius) or a callable.
    """

    chi: Callable = cubic_cutoff
    radius: Union[float, Callable, None] = None
    name: str = "cubic"

    def __post_init__(self):
        if isinstance(self.radius, (int, float)) and self.radius < 1:
            raise ParameterDomainError("truncation radius must be >= 1")

    def R(self, x) -> float:
        if self.radius is None:
            return max(2.0, _norm(x) / 2)
        if callable(self.radius):
            val = float(self.radius(x))
            if val < 1:
                raise DomainError("R(x) must be >= 1")
            return val
        return float(self.radius)

    def to_dict(self) -> dict:
        if self.name != "cubic" or callable(self.radius):
            raise CapabilityError("only the cubic cutoff with default/constant radius serialises")
        return {"chi": "cubic", "radius": self.radius if self.radius is not None else "default"}

    @classmethod
    def from_dict(cls, data: dict) -> "CutoffSpec":
        unknown = set(data) - {"chi", "radius"}
        if unknown:
            raise ParameterDomainError(f"unknown cutoff keys: {sorted(unknown)}")
        if data.get("chi", "cubic") != "cubic":
            raise ParameterDomainError("only the cubic cutoff is available")
        r = data.get("radius", "default")
        return cls(radius=None if r in (None, "default") else float(r))

    def check(self, n: int = 401) -> None:
        """Probe ``1_{B(0,1)} <= chi <= 1_{B(0,2)}`` on a radial grid."""
        u = np.linspace(0, 3, n)
        c = self.chi(u)
        if np.any(c < -1e-15) or np.any(c > 1 + 1e-15):
            raise ParameterDomainError("cutoff must take values in [0, 1]")
        if np.any(np.abs(c[u <= 1] - 1) > 1e-15) or np.any(np.abs(c[u >= 2]) > 1e-15):
            raise ParameterDomainError("cutoff must be 1 on B(0,1) and 0 outside B(0,2)")


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------

def _const(v):
    return v if callable(v) else (lambda x: v)


@dataclass(frozen=True)
class StateCharacteristics:
    """State-dependent Levy triplet ``(b(x), Q(x), n(x, y))``.

    Parameters
    ----------
    dim : int
    b, Q : callable, optional
        ``x -> d-vector`` and ``x -> d x d`` matrix (zero when omitted).
    density : callable, optional
        ``(x, y) -> n(x, y)`` vectorised in ``y``; for d >= 2 a radial profile
        ``(x, r) -> n(x, r)``.
    beta : float or callable
        Declared tail exponent ``beta(x)`` in (0, 2].
    atoms : callable, optional
        ``x -> (locations, weights)`` point masses (d = 1).
    support : float or callable
        ``n(x, .)`` vanishes outside ``|y| <= support(x)``.
    breakpoints : callable, optional
        ``x -> tuple`` of radii where ``n(x, .)`` is not smooth.
    symmetric : bool
        ``n(x, y) == n(x, -y)``.
    killing : callable, optional
        ``x -> q(x, 0)``; must vanish, checked at construction.
    source : ExponentSpec, optional
        Set when the characteristics come from an x-independent exponent.
    """

    dim: int = 1
    b: Optional[Callable] = None
    Q: Optional[Callable] = None
    density: Optional[Callable] = None
    beta: Union[float, Callable] = 2.0
    atoms: Optional[Callable] = None
    support: Union[float, Callable] = math.inf
    breakpoints: Optional[Callable] = None
    symmetric: bool = False
    small_exponent: float = 0.0
    killing: Optional[Callable] = None
    source: Optional[ExponentSpec] = field(default=None, compare=False)
    label: str = ""
    parent: Optional["StateCharacteristics"] = field(default=None, compare=False)
    cutoff: Optional["CutoffSpec"] = field(default=None, compare=False)

    def __post_init__(self):
        if self.killing is not None:
            probe = np.linspace(-50, 50, 101)
            for x in probe:
                pt = x if self.dim == 1 else np.r_[x, np.zeros(self.dim - 1)]
                if abs(float(self.killing(pt))) > 0:
                    raise ParameterDomainError("symbols with q(x,0) != 0 (killing) are not admitted")

    @classmethod
    def from_exponent(cls, spec: ExponentSpec) -> "StateCharacteristics":
        trip = to_triplet(spec)
        n = trip.density
        return cls(
            dim=spec.dim,
            b=(lambda x, v=trip.b: v),
            Q=(lambda x, v=trip.Q: v),
            density=None if n is None else (lambda x, y: n(y)),
            beta=trip.beta,
            atoms=None if trip.atoms is None else (lambda x, a=trip.atoms: a),
            support=trip.support,
            breakpoints=(lambda x, bp=tuple(trip.breakpoints): bp),
            symmetric=trip.symmetric,
            small_exponent=trip.small_exponent,
            source=spec,
            label=spec.family,
        )

    @classmethod
    def stable_like(cls, alpha, dim: int = 1) -> "StateCharacteristics":
        """Symmetric stable-like jumps ``n(x, y) = c(alpha(x)) |y|^{-d-alpha(x)}``.

        ``alpha`` is a coefficient with values in (0, 2); ``q(x, xi) = |xi|^{alpha(x)}``.
        """
        a = as_coefficient(alpha, dim)
        probe = np.linspace(-50, 50, 201)
        vals = np.asarray(a(probe if dim == 1 else np.c_[probe, np.zeros((len(probe), dim - 1))]),
                          float)
        if not np.all((vals > 0) & (vals < 2)):
            raise ParameterDomainError("stable-like index must lie in (0, 2)")

        def density(x, y):
            ax = float(a(x))
            return stable_density_constant(ax, dim) * np.abs(y) ** (-dim - ax)

        return cls(dim=dim, density=density, beta=lambda x: float(a(x)), symmetric=True,
                   small_exponent=float(vals.max()), label=f"stable_like({a.spec})")

    @classmethod
    def from_triplet(cls, trip: LevyTriplet) -> "StateCharacteristics":
        n = trip.density
        return cls(
            dim=trip.dim,
            b=(lambda x, v=trip.b: v),
            Q=(lambda x, v=trip.Q: v),
            density=None if n is None else (lambda x, y: n(y)),
            beta=trip.beta,
            atoms=None if trip.atoms is None else (lambda x, a=trip.atoms: a),
            support=trip.support,
            breakpoints=(lambda x, bp=tuple(trip.breakpoints): bp),
            symmetric=trip.symmetric,
            small_exponent=trip.small_exponent,
            label=trip.label,
        )

    def b_at(self, x) -> np.ndarray:
        return np.zeros(self.dim) if self.b is None else np.atleast_1d(np.asarray(self.b(x), float))

    def Q_at(self, x) -> np.ndarray:
        if self.Q is None:
            return np.zeros((self.dim, self.dim))
        return np.atleast_2d(np.asarray(self.Q(x), float))

    def beta_at(self, x) -> float:
        return float(_const(self.beta)(x))

    def support_at(self, x) -> float:
        return float(_const(self.support)(x))

    def triplet_at(self, x) -> LevyTriplet:
        """Frozen Levy triplet of ``q(x, .)``."""
        n = self.density
        return LevyTriplet(
            b=self.b_at(x),
            Q=self.Q_at(x),
            density=None if n is None else (lambda y: n(x, y)),
            beta=self.beta_at(x),
            small_exponent=self.small_exponent,
            atoms=None if self.atoms is None else self.atoms(x),
            symmetric=self.symmetric,
            support=self.support_at(x),
            breakpoints=() if self.breakpoints is None else tuple(self.breakpoints(x)),
            dim=self.dim,
            validate=False,
            label=self.label,
        )

    def jump_mass(self, x, g, lo, hi) -> float:
        """``int_{lo<|y|<hi} g(|y|) nu(x, dy)``."""
        return self.triplet_at(x).radial_mass(g, lo, hi)


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

Base = Union[ExponentSpec, StateCharacteristics, Callable]


@dataclass(frozen=True)
class StateSymbol:
    """``p(x, xi) = phi(x) q(x, xi) [+ phi2(x) q2(x, xi)]``."""

    phi: StateCoefficient
    base: Base
    phi2: Optional[StateCoefficient] = None
    base2: Optional[Base] = None
    cutoff: Optional[CutoffSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "phi", as_coefficient(self.phi, self.dim_of(self.base)))
        if (self.phi2 is None) != (self.base2 is None):
            raise ParameterDomainError("second summand needs both phi2 and base2")
        if self.phi2 is not None:
            object.__setattr__(self, "phi2", as_coefficient(self.phi2, self.dim_of(self.base2)))
            if self.dim_of(self.base2) != self.dim_of(self.base):
                raise ParameterDomainError("summands must share the dimension")
        for base in (self.base, self.base2):
            if base is not None and not isinstance(base, (ExponentSpec, StateCharacteristics)):
                if not callable(base):
                    raise ParameterDomainError("symbol base must be an exponent, characteristics "
                                               "or callable q(x, xi)")
                d = self.dim
                zero = 0.0 if d == 1 else np.zeros(d)
                for x in np.linspace(-20, 20, 41):
                    pt = x if d == 1 else np.r_[x, np.zeros(d - 1)]
                    if abs(complex(base(pt, zero))) > 1e-12:
                        raise ParameterDomainError("symbols with q(x,0) != 0 are not admitted")

    @staticmethod
    def dim_of(base) -> int:
        if isinstance(base, (ExponentSpec, StateCharacteristics)):
            return base.dim
        return int(getattr(base, "dim", 1))

    @property
    def dim(self) -> int:
        return self.dim_of(self.base)

    def terms(self):
        out = [(self.phi, self.base)]
        if self.phi2 is not None:
            out.append((self.phi2, self.base2))
        return out

    @property
    def is_decomposable(self) -> bool:
        """True when every ``q_j`` is x-independent."""
        return all(
            isinstance(b, ExponentSpec)
            or (isinstance(b, StateCharacteristics) and b.source is not None)
            for _, b in self.terms()
        )

    def to_dict(self) -> dict:
        def base_dict(b):
            if isinstance(b, ExponentSpec):
                return b.to_dict()
            if isinstance(b, StateCharacteristics) and b.source is not None:
                return b.source.to_dict()
            raise CapabilityError("state-dependent characteristics are not serialisable")
        out = {"phi": self.phi.spec, "base": base_dict(self.base)}
        if self.phi2 is not None:
            out["phi2"] = self.phi2.spec
            out["base2"] = base_dict(self.base2)
        if self.cutoff is not None:
            out["cutoff"] = self.cutoff.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StateSymbol":
        unknown = set(data) - {"phi", "base", "phi2", "base2", "cutoff"}
        if unknown:
            raise ParameterDomainError(f"unknown symbol keys: {sorted(unknown)}")
        base = ExponentSpec.from_dict(data["base"])
        d = base.dim
        sym = cls(
            StateCoefficient.from_spec(data.get("phi", 1.0), d),
            base,
            None if "phi2" not in data else StateCoefficient.from_spec(data["phi2"], d),
            None if "base2" not in data else ExponentSpec.from_dict(data["base2"]),
        )
        if "cutoff" in data:
            sym = truncate_symbol(sym, CutoffSpec.from_dict(data["cutoff"]))
        return sym


def _base_value(base, x, xi, quad):
    if isinstance(base, ExponentSpec):
        return np.asarray(evaluate_exponent(base, xi, quad), complex)
    if isinstance(base, StateCharacteristics):
        parent = base.parent
        if (parent is not None and parent.source is not None and base.dim == 1
                and parent.source.family != "generic"):
            psi = np.asarray(evaluate_exponent(parent.source, xi), complex)
            return psi - truncation_defect(parent, base.cutoff, x, xi, quad)[0]
        trip = base.triplet_at(x)
        xi_arr = np.asarray(xi, float)
        d = base.dim
        flat = xi_arr.reshape(-1) if d == 1 else xi_arr.reshape(-1, d)
        out = np.array([levy_khintchine(trip, v, quad)[0] for v in flat], complex)
        return out.reshape(xi_arr.shape if d == 1 else xi_arr.shape[:-1])
    return np.asarray(base(x, xi), complex)


def evaluate_symbol(sym: StateSymbol, x, xi, quad: QuadratureConfig = DEFAULT_QUAD):
    """``p(x, xi)`` at one state ``x`` and one or many frequencies ``xi``."""
    total = 0
    for phi, base in sym.terms():
        total = total + float(phi(x)) * _base_value(base, x, xi, quad)
    total = np.asarray(total, complex)
    return complex(total) if total.ndim == 0 else total


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

def _as_characteristics(base) -> StateCharacteristics:
    if isinstance(base, StateCharacteristics):
        return base
    if isinstance(base, ExponentSpec):
        return StateCharacteristics.from_exponent(base)
    raise CapabilityError("truncation needs an explicit jump density; got an opaque symbol")


def truncate_characteristics(chars: StateCharacteristics, cutoff: CutoffSpec) -> StateCharacteristics:
    """Characteristics of ``q_R``: jump density ``n(x, y) chi(y / R(x))``."""
    n, atoms, chi = chars.density, chars.atoms, cutoff.chi
    old_bp = chars.breakpoints

    def density(x, y):
        return n(x, y) * chi(np.abs(y) / cutoff.R(x))

    def trunc_atoms(x):
        loc, w = atoms(x)
        loc = np.asarray(loc, float)
        return loc, np.asarray(w, float) * chi(np.abs(loc) / cutoff.R(x))

    def support(x):
        return min(chars.support_at(x), 2 * cutoff.R(x))

    def breakpoints(x):
        bp = () if old_bp is None else tuple(old_bp(x))
        return bp + (cutoff.R(x), 2 * cutoff.R(x))

    return replace(
        chars,
        density=None if n is None else density,
        atoms=None if atoms is None else trunc_atoms,
        support=support,
        breakpoints=breakpoints,
        source=None,
        label=(chars.label + "_truncated").lstrip("_"),
        parent=chars,
        cutoff=cutoff,
    )


def truncate_symbol(sym: StateSymbol, cutoff: CutoffSpec = CutoffSpec()) -> StateSymbol:
    """The truncated symbol ``q_R`` (same ``phi``, ``b``, ``Q``; jumps beyond
    ``2 R(x)`` removed and those in ``[R, 2R]`` damped by ``chi``)."""
    cutoff.check()
    bases = [truncate_characteristics(_as_characteristics(b), cutoff) for _, b in sym.terms()]
    return StateSymbol(
        sym.phi, bases[0],
        sym.phi2, bases[1] if len(bases) > 1 else None,
        cutoff=cutoff,
    )


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def truncation_defect(chars: StateCharacteristics, cutoff: CutoffSpec, x, xi,
                      quad: QuadratureConfig = DEFAULT_QUAD):
    """``q(x, xi) - q_R(x, xi) = int (1 - chi(y/R)) (1 - e^{i y xi}) n(x, y) dy`` (d = 1).

    Vectorised over ``xi``: Gauss-Legendre panels on the cutoff shell
    ``[R, 2R]`` and Fourier-weighted quadrature on ``[2R, inf)``.  Since
    ``R >= 1`` the compensator does not enter.

    Returns
    -------
    values : complex ndarray shaped like ``xi``
    abserr : float
    """
    if chars.dim != 1:
        raise CapabilityError("vectorised truncation defect is available in d = 1")
    xi_arr = np.asarray(xi, float)
    k = xi_arr.reshape(-1)
    out = np.zeros(k.shape, complex)
    err = 0.0
    R = cutoff.R(x)
    w = _outer_weight(cutoff.chi, R)
    trip = chars.triplet_at(x)
    if trip.atoms is not None:
        loc, wt = trip.atoms
        sel = np.abs(loc) > R
        ph = np.outer(k, loc[sel])
        out += (1 - np.exp(1j * ph)) @ (wt[sel] * w(loc[sel]))
    n = trip.density
    supp = trip.support
    if n is None or supp <= R:
        return out.reshape(xi_arr.shape), err
    kmax = max(float(np.abs(k).max()), 1e-12)
    hi = min(2 * R, supp)
    width = min(R / 4, math.pi / kmax)
    edges = np.linspace(R, hi, max(2, int(math.ceil((hi - R) / width)) + 1))
    lo_e, hi_e = edges[:-1], edges[1:]
    half, mid = 0.5 * (hi_e - lo_e), 0.5 * (hi_e + lo_e)
    nodes = (mid[:, None] + half[:, None] * _GL_X).reshape(-1)
    wts = (half[:, None] * _GL_W).reshape(-1)
    npos, nneg = n(nodes), n(-nodes)
    wn_even = wts * w(nodes) * (npos + nneg)
    ph = np.outer(k, nodes)
    out += (2 * np.sin(0.5 * ph) ** 2) @ wn_even
    if not trip.symmetric:
        out -= 1j * (np.sin(ph) @ (wts * w(nodes) * (npos - nneg)))
    if supp > 2 * R:
        def n_even(u):
            return float(n(np.float64(u)) + n(np.float64(-u)))

        def n_odd(u):
            return float(n(np.float64(u)) - n(np.float64(-u)))

        top = np.inf if math.isinf(supp) else supp
        opts = dict(epsabs=quad.atol, epsrel=quad.rtol, limit=quad.limit)
        mass, e = integrate.quad(n_even, 2 * R, top, **opts)
        err += e
        cache = {}
        for i, kk in enumerate(k):
            a = abs(kk)
            if a == 0:
                continue
            if a not in cache:
                c, e = integrate.quad(n_even, 2 * R, top, weight="cos", wvar=a, **opts)
                cache[a] = c
                err += e
            val = mass - cache[a]
            if not trip.symmetric:
                sv, e = integrate.quad(n_odd, 2 * R, top, weight="sin", wvar=kk, **opts)
                err += e
                val = complex(val, -sv)
            out[i] += val
    return out.reshape(xi_arr.shape), err


# ---------------------------------------------------------------------------
# perturbation operator
# ---------------------------------------------------------------------------

def _quad_sum(f, edges, quad, **kw):
    val, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        v, e = integrate.quad(f, a, b, epsabs=quad.atol, epsrel=quad.rtol, limit=quad.limit, **kw)
        val += v
        err += e
    return val, err


def _outer_weight(chi, R):
    return lambda r: 1.0 - chi(np.abs(r) / R)


def perturbation_apply(
    sym: StateSymbol,
    cutoff: CutoffSpec,
    f: Callable,
    x,
    quad: QuadratureConfig = DEFAULT_QUAD,
    f_support: Optional[float] = None,
    return_error: bool = False,
):
    """``Pf(x) = sum_j phi_j(x) int (1 - chi(y/R(x))) (f(x+y) - f(x)) n_j(x, y) dy``.

    Parameters
    ----------
    f : callable
        Bounded test function, vectorised over points.
    f_support : float, optional
        ``f`` vanishes outside ``B(0, f_support)``; restricts the quadrature
        to the relevant shell.  Without it the integral runs to infinity.
    return_error : bool
        Also return the absolute quadrature error estimate.
    """
    d = sym.dim
    if d > 2:
        raise CapabilityError("perturbation_apply supports d <= 2")
    x = np.asarray(x, float) if d > 1 else float(np.asarray(x, float).reshape(-1)[0])
    R = cutoff.R(x)
    w = _outer_weight(cutoff.chi, R)
    fx = float(f(x))
    total, err = 0.0, 0.0
    for phi, base in sym.terms():
        chars = _as_characteristics(base)
        px = float(phi(x))
        trip = chars.triplet_at(x)
        if trip.atoms is not None:
            loc, wt = trip.atoms
            total += px * float(np.sum(wt * w(loc) * (f(x + loc) - fx)))
        n = trip.density
        if n is None or trip.support <= R:
            continue
        supp = trip.support
        bps = tuple(trip.breakpoints)
        if d == 1:
            # -f(x) * int (1-chi) n
            edges = sorted({R, 2 * R, supp, *[p for p in bps if R < p < supp]})
            edges = [e for e in edges if e <= supp]
            mass, e1 = _quad_sum(lambda r: float(w(r) * (n(r) + n(-r))), edges, quad)
            if f_support is None:
                spans = [(-supp, -R), (R, supp)]
            else:
                lo, hi = -x - f_support, -x + f_support
                spans = [(max(lo, -supp), min(hi, -R)), (max(lo, R), min(hi, supp))]
            inner, e2 = 0.0, 0.0
            for a, b in spans:
                if b <= a:
                    continue
                cuts = {a, b}
                cuts |= {s * p for p in (R, 2 * R, *bps) for s in (-1, 1) if a < s * p < b}
                if f_support is not None:
                    cuts |= {c for c in (-x,) if a < c < b}
                v, e = _quad_sum(lambda y: float(w(y) * f(x + y) * n(y)), sorted(cuts), quad)
                inner += v
                e2 += e
            total += px * (inner - fx * mass)
            err += px * (abs(fx) * e1 + e2)
        else:
            area = sphere_area(2)
            edges = sorted({R, 2 * R, supp, *[p for p in bps if R < p < supp]})
            edges = [e for e in edges if e <= supp]
            mass, e1 = _quad_sum(lambda r: float(area * r * w(r) * n(r)), edges, quad)
            r_hi = supp if f_support is None else min(supp, _norm(x) + f_support)
            r_lo = R if f_support is None else max(R, _norm(x) - f_support)
            inner, e2 = 0.0, 0.0
            if r_hi > r_lo:
                def g(theta, r):
                    y = r * np.array([math.cos(theta), math.sin(theta)])
                    return float(r * w(r) * n(r) * f(x + y))
                inner, e2 = integrate.dblquad(g, r_lo, r_hi, 0.0, 2 * math.pi,
                                              epsabs=max(quad.atol, 1e-11), epsrel=1e-8)
            total += px * (inner - fx * mass)
            err += px * (abs(fx) * e1 + e2)
    if return_error:
        return total, err
    return total


def perturbation_bound(sym: StateSymbol, cutoff: CutoffSpec, f_sup: float, x) -> float:
    """``2 ||f||_inf sum_j phi_j(x) nu_j(x, B(0, R(x))^c)``."""
    R = cutoff.R(x)
    tot = 0.0
    for phi, base in sym.terms():
        chars = _as_characteristics(base)
        tot += float(phi(x)) * chars.jump_mass(x, lambda r: np.ones_like(r), R, math.inf)
    return 2 * f_sup * tot


def standard_bound(chars_or_triplet, xi_norm: float, R: float = 1.0, x=None) -> float:
    """Upper bound for ``|q(x, xi)|``:

    ``|b||xi| + |Q||xi|^2/2 + |xi|^2/2 int_{|y|<1}|y|^2 nu
    + |xi| int_{1<=|y|<R}|y| nu + 2 nu(|y| >= max(1, R))``.
    """
    trip = (chars_or_triplet.triplet_at(x) if isinstance(chars_or_triplet, StateCharacteristics)
            else chars_or_triplet)
    k = float(xi_norm)
    R = max(1.0, R)
    small = trip.radial_mass(lambda r: r**2, 0.0, 1.0)
    mid = trip.radial_mass(lambda r: r, 1.0, R) if R > 1 else 0.0
    tail = trip.tail_mass(R)
    return (float(np.linalg.norm(trip.b)) * k + 0.5 * float(np.linalg.norm(trip.Q, 2)) * k**2
            + 0.5 * k**2 * small + k * mid + 2 * tail)


def truncation_bound(sym: StateSymbol, cutoff: CutoffSpec, x, xi_norm: float) -> float:
    """``sum_j phi_j(x) [2 nu_j(|y|>=R) + |xi| int_{1<|y|<2R}|y|(1-chi(y/R)) nu_j]``,
    an upper bound for ``|p(x, xi) - p_R(x, xi)|``."""
    R = cutoff.R(x)
    w = _outer_weight(cutoff.chi, R)
    tot = 0.0
    for phi, base in sym.terms():
        chars = _as_characteristics(base)
        tail = chars.jump_mass(x, lambda r: np.ones_like(r), R, math.inf)
        drift = chars.jump_mass(x, lambda r: r * w(r), max(1.0, R), 2 * R)
        tot += float(phi(x)) * (2 * tail + xi_norm * drift)
    return tot


__all__ = [
    "CutoffSpec",
    "StateCharacteristics",
    "StateSymbol",
    "cubic_cutoff",
    "evaluate_symbol",
    "truncate_symbol",
    "truncate_characteristics",
    "truncation_defect",
    "perturbation_apply",
    "perturbation_bound",
    "standard_bound",
    "truncation_bound",
]
