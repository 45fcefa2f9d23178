"""Characteristic exponents, Levy triplets and the Levy-Khintchine integral.

Conventions
-----------
A Levy process ``L`` with exponent ``psi`` satisfies
``E exp(i xi . (L_t - L_0)) = exp(-t psi(xi))`` and

    psi(xi) = -i b.xi + 1/2 xi.Q xi
              + int (1 - exp(i y.xi) + i y.xi 1_{|y|<1}) n(y) dy.

The isotropic stable exponent is pinned to ``|xi|**alpha`` exactly; its jump
density constant is derived from that normalisation (see
:func:`stable_density_constant`).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, CapabilityError, ParameterDomainError

FAMILIES = (
    "isotropic_stable",
    "relativistic_stable",
    "truncated_stable",
    "homographic",
    "generic",
)

_FAMILY_ALIASES = {
    "stable": "isotropic_stable",
    "isotropic": "isotropic_stable",
    "relativistic": "relativistic_stable",
    "truncated": "truncated_stable",
}


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the adaptive Levy-Khintchine quadrature.

    ``eps`` and ``far`` are the inner and outer panel breaks; ``None`` picks
    them from the frequency (``eps = min(1, 1/|xi|) / 10``,
    ``far = max(1, 40 / |xi|)``).
    """

    rtol: float = 1e-8
    atol: float = 1e-12
    limit: int = 500
    eps: Optional[float] = None
    far: Optional[float] = None
    fail_rtol: float = 1e-5

    def __post_init__(self):
        if self.rtol <= 0 or self.limit <= 0:
            raise ParameterDomainError("quadrature resolution must be positive")


DEFAULT_QUAD = QuadratureConfig()


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def stable_density_constant(alpha: float, d: int = 1) -> float:
    """Constant ``c`` with ``int (1-cos y.xi) c|y|^{-d-alpha} dy = |xi|^alpha``."""
    if not 0 < alpha < 2:
        raise ParameterDomainError("stable jump density needs alpha in (0, 2)")
    return (
        alpha
        * 2 ** (alpha - 1)
        * math.gamma((d + alpha) / 2)
        / (math.pi ** (d / 2) * math.gamma(1 - alpha / 2))
    )


@dataclass(frozen=True)
class LevyTriplet:
    """Levy triplet ``(b, Q, nu)`` with ``nu`` given by a density and/or atoms.

    Parameters
    ----------
    b : array_like, shape (d,)
        Drift.
    Q : array_like, shape (d, d)
        Symmetric positive semidefinite diffusion matrix.
    density : callable, optional
        In ``d == 1`` a vectorised ``y -> n(y)`` on ``R \\ {0}``.  In ``d >= 2``
        the density must be radial and is given as ``r -> n(r)``.
    beta : float
        Declared tail exponent: ``n(y) <= C |y|^{-d-beta}`` for ``|y| >= 1``.
    small_exponent : float
        Declared blow-up exponent at the origin, ``n(y) ~ |y|^{-d-small_exponent}``.
    atoms : tuple of (locations, weights), optional
        Finite point masses (``d == 1`` only).
    symmetric : bool
        Declares ``n(y) == n(-y)``; skips the odd part of the quadrature.
    support : float
        ``n`` vanishes for ``|y| > support``.
    breakpoints : tuple of float
        Radii where ``n`` is not smooth (used as quadrature panel breaks).
    validate : bool
        Run the integrability check ``int min(|y|^2, 1) n < inf`` on creation.
    """

    b: np.ndarray = None
    Q: np.ndarray = None
    density: Optional[Callable] = None
    beta: float = 2.0
    small_exponent: float = 0.0
    atoms: Optional[tuple] = None
    symmetric: bool = False
    support: float = math.inf
    breakpoints: tuple = ()
    dim: int = 1
    validate: bool = True
    label: str = ""

    def __post_init__(self):
        d = int(self.dim)
        b = np.zeros(d) if self.b is None else np.atleast_1d(np.asarray(self.b, float))
        Q = np.zeros((d, d)) if self.Q is None else np.atleast_2d(np.asarray(self.Q, float))
        if b.shape != (d,) or Q.shape != (d, d):
            raise ParameterDomainError(f"b/Q shapes {b.shape}/{Q.shape} do not match dim={d}")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ParameterDomainError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ParameterDomainError("Q must be positive semidefinite")
        if not 0 < self.beta <= 2:
            raise ParameterDomainError("tail exponent beta must lie in (0, 2]")
        if self.atoms is not None and d != 1:
            raise CapabilityError("atomic jump measures are supported in d=1 only")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "dim", d)
        if self.atoms is not None:
            loc, w = (np.atleast_1d(np.asarray(a, float)) for a in self.atoms)
            if np.any(w < 0) or np.any(loc == 0):
                raise ParameterDomainError("atoms need positive weights away from 0")
            object.__setattr__(self, "atoms", (loc, w))
        if self.validate and self.density is not None:
            mass = self.integrability()
            if not np.isfinite(mass):
                raise ParameterDomainError("int min(|y|^2,1) n(y) dy is not finite")

    # -- measure functionals -------------------------------------------------
    def radial_mass(self, g: Callable, lo: float, hi: float) -> float:
        """``int_{lo<|y|<hi} g(|y|) n(y) dy`` for a radial weight ``g``."""
        val = 0.0
        if self.density is not None and hi > lo:
            hi_eff = min(hi, self.support)
            if hi_eff > lo:
                val += _radial_integral(self, g, lo, hi_eff)
        if self.atoms is not None:
            loc, w = self.atoms
            r = np.abs(loc)
            sel = (r > lo) & (r < hi)
            val += float(np.sum(g(r[sel]) * w[sel]))
        return val

    def integrability(self) -> float:
        """``int min(|y|^2, 1) nu(dy)``; ``inf`` when the quadrature sees divergence.

        Divergence shows up as an inner (outer) block of decades carrying at
        least the mass of the adjacent block, which cannot happen for a
        summable power law.
        """
        if self.density is not None:
            sq = lambda r: r**2  # noqa: E731
            one = lambda r: np.ones_like(r)  # noqa: E731
            inner = _radial_integral(self, sq, 1e-12, 1e-8)
            outer = _radial_integral(self, sq, 1e-8, 1e-4)
            if inner > 0 and inner >= outer:
                return math.inf
            if self.support > 1e12:
                near = _radial_integral(self, one, 1e4, 1e8)
                far = _radial_integral(self, one, 1e8, 1e12)
                if far > 0 and far >= near:
                    return math.inf
        return self.radial_mass(lambda r: r**2, 0.0, 1.0) + self.tail_mass(1.0)

    def tail_mass(self, r: float) -> float:
        """``nu(|y| >= r)``."""
        return self.radial_mass(lambda s: np.ones_like(s), r, math.inf)

    def has_jumps(self) -> bool:
        return self.density is not None or (self.atoms is not None and len(self.atoms[0]) > 0)


def _panel_points(lo, hi, extra=()):
    pts = sorted({p for p in (1.0, *extra) if lo < p < hi})
    return [lo, *pts, hi]


def _quad(f, a, b, cfg, **kw):
    """scipy.integrate.quad with warnings captured; returns (value, abserr, ok)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(
            f, a, b, epsabs=cfg.atol, epsrel=cfg.rtol, limit=cfg.limit, **kw
        )
    ok = not any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    return val, err, ok


def _sum_quads(f, edges, cfg):
    total, err, ok = 0.0, 0.0, True
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        if math.isinf(b):
            v, e, o = _quad(f, a, np.inf, cfg)
        else:
            v, e, o = _quad(f, a, b, cfg)
        total += v
        err += e
        ok &= o
    return total, err, ok


def _radial_integral(trip: LevyTriplet, g, lo, hi, cfg=DEFAULT_QUAD):
    n = trip.density
    if trip.dim == 1:
        def h(u):
            return g(u) * (n(u) + n(-u))
    else:
        area = sphere_area(trip.dim)
        d = trip.dim

        def h(u):
            return area * g(u) * n(u) * u ** (d - 1)
    edges = _panel_points(lo, hi, trip.breakpoints + (1e-3, 1e-6))
    val, _, _ = _sum_quads(lambda u: float(h(np.float64(u))), edges, cfg)
    return val


@dataclass(frozen=True)
class ExponentSpec:
    """A characteristic exponent: a closed-form family or a generic triplet."""

    family: str
    dim: int = 1
    alpha: Optional[float] = None
    m: Optional[float] = None
    lam: Optional[float] = None
    triplet: Optional[LevyTriplet] = field(default=None, compare=False)

    def __post_init__(self):
        fam = _FAMILY_ALIASES.get(self.family, self.family)
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ParameterDomainError(f"unknown exponent family {self.family!r}")
        if int(self.dim) < 1:
            raise ParameterDomainError("dimension must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        a = self.alpha
        if fam == "isotropic_stable":
            if a is None or not 0 < a <= 2:
                raise ParameterDomainError("isotropic_stable needs alpha in (0, 2]")
        elif fam == "relativistic_stable":
            if a is None or not 0 < a < 2:
                raise ParameterDomainError("relativistic_stable needs alpha in (0, 2)")
        elif fam == "truncated_stable":
            if a is None or not 0 < a < 1:
                raise ParameterDomainError("truncated_stable needs alpha in (0, 1)")
        elif fam == "homographic":
            if self.lam is None or not self.lam > 0:
                raise ParameterDomainError("homographic needs lam > 0")
        elif fam == "generic":
            if self.triplet is None:
                raise ParameterDomainError("generic exponent needs a LevyTriplet")
            if self.triplet.dim != self.dim:
                raise ParameterDomainError("triplet dimension does not match dim")
        if fam in ("relativistic_stable", "truncated_stable") and not (
            self.m is not None and self.m > 0
        ):
            raise ParameterDomainError(f"{fam} needs m > 0")

    # constructors -------------------------------------------------------
    @classmethod
    def isotropic_stable(cls, alpha, dim=1):
        return cls("isotropic_stable", dim=dim, alpha=alpha)

    @classmethod
    def relativistic_stable(cls, alpha, m, dim=1):
        return cls("relativistic_stable", dim=dim, alpha=alpha, m=m)

    @classmethod
    def truncated_stable(cls, alpha, m, dim=1):
        return cls("truncated_stable", dim=dim, alpha=alpha, m=m)

    @classmethod
    def homographic(cls, lam, dim=1):
        return cls("homographic", dim=dim, lam=lam)

    @classmethod
    def generic(cls, triplet: LevyTriplet):
        return cls("generic", dim=triplet.dim, triplet=triplet)

    # serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        if self.family == "generic":
            raise CapabilityError("generic triplets hold callables and cannot be serialised")
        out = {"family": self.family}
        for key in ("alpha", "m", "lam"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        out["dim"] = self.dim
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExponentSpec":
        allowed = {"family", "alpha", "m", "lam", "dim"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterDomainError(f"unknown exponent keys: {sorted(unknown)}")
        return cls(
            data["family"],
            dim=data.get("dim", 1),
            alpha=data.get("alpha"),
            m=data.get("m"),
            lam=data.get("lam"),
        )

    @property
    def tail_exponent(self) -> float:
        """Exponent ``beta`` with ``n(y) <= C|y|^{-d-beta}`` outside the unit ball."""
        if self.family == "isotropic_stable":
            return self.alpha
        if self.family == "generic":
            return self.triplet.beta
        return 2.0


def _xi_norm(xi, d):
    xi = np.asarray(xi, dtype=float)
    if d == 1:
        return np.abs(xi)
    if xi.shape[-1] != d:
        raise ParameterDomainError(f"xi must have trailing dimension {d}")
    return np.linalg.norm(xi, axis=-1)


def evaluate_exponent(spec: ExponentSpec, xi, quad: QuadratureConfig = DEFAULT_QUAD):
    """Evaluate ``psi(xi)``.

    For ``d == 1`` ``xi`` may have any shape; for ``d >= 2`` the last axis
    holds the coordinates.  Returns a complex array (a Python complex for
    scalar input).
    """
    if spec.family == "generic":
        xi_arr = np.asarray(xi, dtype=float)
        flat = xi_arr.reshape(-1) if spec.dim == 1 else xi_arr.reshape(-1, spec.dim)
        out = np.array([levy_khintchine(spec.triplet, v, quad)[0] for v in flat], dtype=complex)
        shape = xi_arr.shape if spec.dim == 1 else xi_arr.shape[:-1]
        out = out.reshape(shape)
        return complex(out) if out.ndim == 0 else out
    r = _xi_norm(xi, spec.dim)
    a = spec.alpha
    if spec.family == "isotropic_stable":
        val = r**a
    elif spec.family == "relativistic_stable":
        m = spec.m
        val = m**a * np.expm1(0.5 * a * np.log1p((r / m) ** 2))
    elif spec.family == "truncated_stable":
        m = spec.m
        s = r / m
        val = m**a * ((1 + s**2) ** (a / 2) * np.cos(a * np.arctan(s)) - 1.0)
    else:
        lam = spec.lam
        val = lam * r**2 / (1 + lam * r**2)
    val = np.asarray(val, dtype=complex)
    return complex(val) if val.ndim == 0 else val


def transition_cf_reference(spec: ExponentSpec, t: float, xi):
    """``exp(-t psi(xi))``: the characteristic function of ``L_t - L_0``."""
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    if t == 0:
        ones = np.ones(np.shape(_xi_norm(xi, spec.dim)), dtype=complex)
        return complex(ones) if ones.ndim == 0 else ones
    return np.exp(-t * np.asarray(evaluate_exponent(spec, xi)))


# ---------------------------------------------------------------------------
# Levy-Khintchine quadrature
# ---------------------------------------------------------------------------

def _bessel_char(z, d):
    """Normalised radial Fourier kernel: mean of cos(y.xi) over |y|=r, z=r|xi|."""
    nu = d / 2 - 1
    z = np.asarray(z, float)
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    val = math.gamma(d / 2) * (2 / zs) ** nu * special.jv(nu, zs)
    series = 1 - z**2 / (2 * d) + z**4 / (8 * d * (d + 2))
    return np.where(small, series, val)


def _one_minus_bessel_char(z, d):
    z = np.asarray(z, float)
    small = z < 1e-3
    return np.where(small, z**2 / (2 * d) - z**4 / (8 * d * (d + 2)), 1 - _bessel_char(z, d))


def _one_minus_cos(z):
    return 2.0 * math.sin(0.5 * z) ** 2


def _z_minus_sin(z):
    if abs(z) < 1e-2:
        return z**3 / 6 - z**5 / 120
    return z - math.sin(z)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_GL_X10, _GL_W10 = np.polynomial.legendre.leggauss(10)


def _panel_gauss(f, a, b, width):
    """Fixed Gauss-Legendre over panels of ``width``; returns (value, err)."""
    edges = np.arange(a, b, width)
    edges = np.append(edges, b)
    lo, hi = edges[:-1], edges[1:]
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    v20 = np.sum(half * (f(mid[:, None] + half[:, None] * _GL_X) @ _GL_W))
    v10 = np.sum(half * (f(mid[:, None] + half[:, None] * _GL_X10) @ _GL_W10))
    return float(v20), float(abs(v20 - v10))


def levy_khintchine(triplet: LevyTriplet, xi, quad: QuadratureConfig = DEFAULT_QUAD):
    """Evaluate the Levy-Khintchine exponent of ``triplet`` at one frequency.

    The jump integral is split into panels at ``eps``, 1 and ``far``; the
    oscillatory tail beyond ``far`` uses a Fourier-weighted rule (d = 1) or
    panel-wise Gauss-Legendre over half periods (radial densities, d >= 2).

    Returns
    -------
    value : complex
    abserr : float
        Absolute error estimate of the jump integral.

    Raises
    ------
    AccuracyError
        If the adaptive quadrature fails to converge to ``quad.fail_rtol``.
    """
    d = triplet.dim
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (d,):
        raise ParameterDomainError(f"xi must be a {d}-vector")
    k = float(np.linalg.norm(xi))
    if k == 0.0:
        return 0j, 0.0
    val = complex(0.5 * xi @ triplet.Q @ xi, -float(triplet.b @ xi))
    err = 0.0
    if triplet.atoms is not None:
        loc, w = triplet.atoms
        y = loc * xi[0]
        comp = np.where(np.abs(loc) < 1, y, 0.0)
        val += complex(np.sum(w * 2 * np.sin(0.5 * y) ** 2), np.sum(w * (comp - np.sin(y))))
    if triplet.density is None:
        return val, err
    eps = quad.eps if quad.eps is not None else min(1.0, 1.0 / k) / 10
    far = quad.far if quad.far is not None else max(1.0, 40.0 / k)
    supp = triplet.support
    n = triplet.density
    inner_hi = min(far, supp)
    edges = _panel_points(0.0, inner_hi, (eps,) + tuple(triplet.breakpoints))
    if d == 1:
        x1 = float(xi[0])

        def n_even(u):
            return float(n(np.float64(u)) + n(np.float64(-u)))

        re_val, err, ok = _sum_quads(lambda u: _one_minus_cos(u * x1) * n_even(u), edges, quad)
        if supp > far:
            v1, e1, o1 = _quad(n_even, far, supp, quad)
            v2, e2, o2 = _quad(n_even, far, supp, quad, weight="cos", wvar=abs(x1))
            re_val += v1 - v2
            err += e1 + e2
            ok = ok and o1 and o2
        im_val = 0.0
        if not triplet.symmetric:
            def n_odd(u):
                return float(n(np.float64(u)) - n(np.float64(-u)))

            def im_f(u):
                z = u * x1
                return (_z_minus_sin(z) if u < 1 else -math.sin(z)) * n_odd(u)

            im_val, e, o = _sum_quads(im_f, edges, quad)
            err, ok = err + e, ok and o
            if supp > far:
                v2, e2, o2 = _quad(n_odd, far, supp, quad, weight="sin", wvar=x1)
                im_val -= v2
                err += e2
                ok = ok and o2
        val += complex(re_val, im_val)
    else:
        # radial density: the odd part vanishes
        area = sphere_area(d)

        def radial(u):
            return area * n(u) * u ** (d - 1)

        v, err, ok = _sum_quads(
            lambda u: float(radial(np.float64(u)) * _one_minus_bessel_char(u * k, d)), edges, quad
        )
        if supp > far:
            mass, e1, o1 = _quad(lambda u: float(radial(np.float64(u))), far, supp, quad)
            far2 = min(supp, 200 * far)
            osc, e2 = _panel_gauss(lambda u: radial(u) * _bessel_char(u * k, d), far, far2,
                                   math.pi / k)
            rest = 0.0
            if supp > far2:
                rest, _, _ = _quad(lambda u: float(radial(np.float64(u))), far2, supp, quad)
            env = (far2 * k) ** (-(d - 1) / 2) * math.gamma(d / 2) * 2 ** (d / 2 - 1) * 0.8
            v += mass - osc
            err += e1 + e2 + env * rest
            ok = ok and o1
        val += complex(v, 0.0)
    scale = max(abs(val), 1.0)
    if not ok and err > quad.fail_rtol * scale:
        raise AccuracyError(
            f"Levy-Khintchine quadrature did not converge at |xi|={k:g}", residual=err
        )
    return val, err


# ---------------------------------------------------------------------------
# Jump densities of the closed-form families
# ---------------------------------------------------------------------------

def jump_density(spec: ExponentSpec) -> Optional[Callable]:
    """Jump density of ``spec`` (radial profile ``r -> n(r)`` when d >= 2).

    Returns ``None`` for the Gaussian case (isotropic alpha = 2).
    """
    d = spec.dim
    fam = spec.family
    if fam == "generic":
        return spec.triplet.density
    if fam == "isotropic_stable":
        if spec.alpha == 2:
            return None
        c = stable_density_constant(spec.alpha, d)
        a = spec.alpha
        return lambda y: c * np.abs(y) ** (-d - a)
    if fam == "relativistic_stable":
        a, m = spec.alpha, spec.m
        c = a * 2 ** ((a - d) / 2) * m ** ((d + a) / 2) / (math.pi ** (d / 2) * math.gamma(1 - a / 2))
        order = (d + a) / 2

        def n_rel(y):
            r = np.abs(y)
            return c * r ** (-order) * special.kv(order, m * r)
        return n_rel
    if fam == "truncated_stable":
        if d != 1:
            raise CapabilityError("truncated_stable jump density is available in d=1 only")
        a, m = spec.alpha, spec.m
        c = a / (2 * math.gamma(1 - a))
        return lambda y: c * np.abs(y) ** (-1 - a) * np.exp(-m * np.abs(y))
    lam = spec.lam
    nu = 1 - d / 2

    def n_hom(y):
        r = np.abs(y)
        A = r**2 / 4
        return (2 / lam) * (4 * math.pi) ** (-d / 2) * (A * lam) ** (nu / 2) * special.kv(
            nu, 2 * np.sqrt(A / lam)
        )
    return n_hom


def to_triplet(spec: ExponentSpec) -> LevyTriplet:
    """Levy triplet of a closed-form family (identity for ``generic``)."""
    if spec.family == "generic":
        return spec.triplet
    d = spec.dim
    if spec.family == "isotropic_stable" and spec.alpha == 2:
        return LevyTriplet(Q=2 * np.eye(d), dim=d, symmetric=True, beta=2.0, label="gaussian")
    small = {"isotropic_stable": spec.alpha, "relativistic_stable": spec.alpha,
             "truncated_stable": spec.alpha, "homographic": 0.0}[spec.family]
    return LevyTriplet(
        density=jump_density(spec),
        dim=d,
        beta=spec.tail_exponent,
        small_exponent=small,
        symmetric=True,
        validate=False,
        label=spec.family,
    )
