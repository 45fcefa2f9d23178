"""Pseudo-differential generator ``Af(x) = -int e^{i x.xi} p(x, xi) f^(xi) dxi``
applied through the discrete Fourier transform."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, CapabilityError, ParameterDomainError
from .levy import DEFAULT_QUAD, ExponentSpec, QuadratureConfig, evaluate_exponent, jump_density
from .symbols import StateCharacteristics, StateSymbol, evaluate_symbol


@dataclass(frozen=True)
class TransformGrid:
    """Uniform grid ``center + h * (j - n/2)``, ``j = 0..n-1`` per axis.

    ``n`` must be a power of two.
    """

    n: int = 2**13
    h: float = 0.05
    center: float = 0.0

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ParameterDomainError("transform grid length must be a power of two >= 8")
        if not self.h > 0:
            raise ParameterDomainError("grid spacing must be positive")

    @property
    def length(self) -> float:
        return self.n * self.h

    def points(self) -> np.ndarray:
        return self.center + self.h * (np.arange(self.n) - self.n // 2)

    def frequencies(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.n, self.h)


DEFAULT_GRID_1D = TransformGrid()
DEFAULT_GRID_2D = TransformGrid(n=256, h=0.1)


def _spectrum(f, grid: TransformGrid, dim: int, tol: float):
    y = grid.points()
    if dim == 1:
        fv = np.asarray(f(y), float) if callable(f) else np.asarray(f, float)
        if fv.shape != (grid.n,):
            raise ParameterDomainError("sampled f does not match the grid")
        band = max(1, grid.n // 32)
        edge = grid.h * (np.abs(fv[:band]).sum() + np.abs(fv[-band:]).sum())
        F = np.fft.fft(fv) * np.exp(-1j * grid.frequencies() * y[0])
    else:
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        pts = np.stack([Y1, Y2], axis=-1)
        fv = np.asarray(f(pts), float) if callable(f) else np.asarray(f, float)
        if fv.shape != (grid.n, grid.n):
            raise ParameterDomainError("sampled f does not match the grid")
        band = max(1, grid.n // 32)
        mask = np.zeros_like(fv, bool)
        mask[:band] = mask[-band:] = True
        mask[:, :band] = mask[:, -band:] = True
        edge = grid.h**2 * np.abs(fv[mask]).sum()
        xi = grid.frequencies()
        F = np.fft.fft2(fv) * np.exp(-1j * (xi[:, None] + xi[None, :]) * y[0])
    l1 = grid.h**dim * np.abs(fv).sum()
    if edge > tol * max(1.0, l1):
        raise AccuracyError("test function has non-negligible mass at the grid boundary",
                            residual=edge)
    xi = np.abs(grid.frequencies())
    nyq = math.pi / grid.h
    hi = xi > 0.75 * nyq
    if dim == 1:
        hi_energy = np.abs(F[hi]).sum()
    else:
        hi_energy = np.abs(F[hi[:, None] | hi[None, :]]).sum()
    if hi_energy > tol * np.abs(F).sum():
        raise AccuracyError("grid too coarse: spectrum not resolved (aliasing)",
                            residual=hi_energy / np.abs(F).sum())
    return fv, F, l1


def _image_error(sym: StateSymbol, x, grid: TransformGrid, l1: float, width: float) -> float:
    """``||f||_1 sum_{m != 0} p-jump density at |m L| - |x - c| - width``."""
    tot = 0.0
    dist0 = float(np.linalg.norm(np.atleast_1d(x) - grid.center)) + width
    m = np.arange(1, 60)
    r = m * grid.length - dist0
    r = r[r > 0]
    # images beyond the last one: the density decreases, so the sum is below
    # the integral from the last evaluated image on
    r_tail = 60 * grid.length - dist0
    for phi, base in sym.terms():
        if isinstance(base, ExponentSpec):
            n = jump_density(base)
            if n is None:
                continue
            dens, supp = n, np.inf
        elif isinstance(base, StateCharacteristics):
            if base.density is None:
                continue
            supp = base.support_at(x)
            dens = lambda y, _b=base: _b.density(x, y)  # noqa: E731
        else:
            continue
        vals = np.where(r <= supp, dens(r), 0.0)
        tail = 0.0
        if r_tail < supp:
            # log scale keeps quad away from the flat far tail
            u0, u1 = math.log(r_tail), min(math.log(supp), math.log(r_tail) + 200.0)
            tail = integrate.quad(lambda u: float(dens(np.array([math.exp(u)]))[0]) * math.exp(u),
                                  u0, u1, limit=200)[0] / grid.length
        tot += float(phi(x)) * 2 * (float(np.sum(vals)) + tail)
    return l1 * tot


def apply_generator(
    sym: StateSymbol,
    f,
    x,
    quad: QuadratureConfig = DEFAULT_QUAD,
    grid: Optional[TransformGrid] = None,
    tol: float = 1e-10,
    return_error: bool = False,
):
    """Apply the generator with symbol ``sym`` to ``f`` at the point(s) ``x``.

    Parameters
    ----------
    sym : StateSymbol
    f : callable or ndarray
        Real test function (vectorised callable) or its samples on ``grid``.
    x : float, d-vector or array of points
    grid : TransformGrid, optional
        Defaults to ``n = 2**13, h = 0.05`` (d = 1) or ``256, 0.1`` (d = 2).
    tol : float
        Relative threshold for boundary mass and for spectral energy in the
        top quarter of the band.
    return_error : bool
        Also return an error estimate (periodic images plus dropped modes).

    Raises
    ------
    AccuracyError
        If ``f`` is not negligible at the boundary or not resolved by the grid.
    """
    d = sym.dim
    if d > 2:
        raise CapabilityError("transform-based generator supports d = 1, 2")
    grid = grid or (DEFAULT_GRID_1D if d == 1 else DEFAULT_GRID_2D)
    fv, F, l1 = _spectrum(f, grid, d, tol)
    xi1 = grid.frequencies()
    N = grid.n**d
    absF = np.abs(F)
    keep = absF > 1e-17 * absF.max()
    dropped = absF[~keep].sum() / N
    if d == 1:
        # Hermitian symmetry: only nonnegative frequencies are evaluated
        pos = keep & (xi1 >= 0)
        xi_eval = xi1[pos]
        Fe = F[pos]
        weight = np.where(xi_eval == 0, 1.0, 2.0)
        nyq = pos & (np.arange(grid.n) == grid.n // 2)
        weight[nyq[pos]] = 1.0
    else:
        X1, X2 = np.meshgrid(xi1, xi1, indexing="ij")
        xi_eval = np.stack([X1[keep], X2[keep]], axis=-1)
        Fe = F[keep]
    width = _support_width(fv, grid, d)
    pts = np.asarray(x, float)
    scalar = pts.ndim == 0 if d == 1 else pts.ndim == 1
    pts = pts.reshape(-1) if d == 1 else pts.reshape(-1, d)
    out = np.empty(len(pts))
    errs = np.empty(len(pts))
    for i, xp in enumerate(pts):
        p = np.asarray(evaluate_symbol(sym, xp, xi_eval, quad), complex)
        if d == 1:
            s = np.sum(weight * np.real(np.exp(1j * xi_eval * xp) * p * Fe))
        else:
            s = np.real(np.sum(np.exp(1j * xi_eval @ xp) * p * Fe))
        out[i] = -s / N
        pmax = float(np.abs(p).max()) if p.size else 0.0
        errs[i] = _image_error(sym, xp, grid, l1, width) + dropped * pmax * 2
    if scalar:
        out, errs = float(out[0]), float(errs[0])
    return (out, errs) if return_error else out


def _support_width(fv, grid, d) -> float:
    """Radius around the grid center holding all but 1e-12 of ``|f|``."""
    a = np.abs(fv)
    tot = a.sum()
    if tot == 0:
        return 0.0
    y = grid.points() - grid.center
    if d == 1:
        r = np.abs(y)
    else:
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        r = np.hypot(Y1, Y2)
    order = np.argsort(r.reshape(-1))
    cum = np.cumsum(a.reshape(-1)[order])
    idx = np.searchsorted(cum, tot * (1 - 1e-12))
    return float(r.reshape(-1)[order][min(idx, len(order) - 1)])


def generator_function(sym: StateSymbol, f: Callable, grid: Optional[TransformGrid] = None,
                       tol: float = 1e-10) -> Callable:
    """Vectorised ``x -> Af(x)`` for a decomposable symbol in d = 1.

    One inverse FFT per summand gives ``A_psi f`` on the grid; values are
    interpolated with a cubic spline.  Off the grid, ``f`` vanishes and
    ``A_psi f(x) ~ ||f||_1 n(|x - c|)`` is used.
    """
    if sym.dim != 1:
        raise CapabilityError("generator_function supports d = 1")
    terms = []
    for phi, base in sym.terms():
        if isinstance(base, StateCharacteristics):
            if base.source is None:
                raise CapabilityError("generator_function needs x-independent exponents")
            base = base.source
        if not isinstance(base, ExponentSpec):
            raise CapabilityError("generator_function needs x-independent exponents")
        terms.append((phi, base))
    grid = grid or DEFAULT_GRID_1D
    fv, F, l1 = _spectrum(f, grid, 1, tol)
    y = grid.points()
    xi = grid.frequencies()
    half = grid.length / 2 - grid.h
    parts = []
    for phi, base in terms:
        psi = np.asarray(evaluate_exponent(base, xi), complex)
        vals = -np.real(np.fft.ifft(psi * F * np.exp(1j * xi * y[0])))
        parts.append((phi, CubicSpline(y, vals), jump_density(base)))

    def Af(x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        inside = np.abs(x - grid.center) <= half
        for phi, spline, n in parts:
            val = np.empty_like(x)
            val[inside] = spline(x[inside])
            if n is not None:
                val[~inside] = l1 * n(np.abs(x[~inside] - grid.center))
            else:
                val[~inside] = 0.0
            out += phi(x) * val
        return out

    return Af


def direct_generator(sym: StateSymbol, f: Callable, df: Callable, d2f: Callable, x,
                     quad: QuadratureConfig = DEFAULT_QUAD, f_scale: float = 8.0) -> float:
    """Integro-differential form of ``Af(x)`` in d = 1 (independent of the FFT route)::

        b f' + Q f''/2 + int (f(x+y) - f(x) - y f'(x) 1_{|y|<1}) n(x, y) dy
    """
    if sym.dim != 1:
        raise CapabilityError("direct_generator supports d = 1")
    x = float(x)
    total = 0.0
    for phi, base in sym.terms():
        if isinstance(base, ExponentSpec):
            base = StateCharacteristics.from_exponent(base)
        trip = base.triplet_at(x)
        fx, d1, d2 = float(f(x)), float(df(x)), float(d2f(x))
        val = float(trip.b[0]) * d1 + 0.5 * float(trip.Q[0, 0]) * d2
        n = trip.density
        if n is not None:
            def g(y):
                comp = y * d1 if abs(y) < 1 else 0.0
                return (float(f(x + y)) - fx - comp) * float(n(y))
            supp = trip.support
            for sgn in (1, -1):
                # f(x + y) lives near y = -x: split there so quad sees it
                near = {abs(-x + s * f_scale) for s in (-1, 0, 1) if sgn * (-x + s * f_scale) > 0}
                bps = sorted({*trip.breakpoints, 1.0, *near})
                edges_pos = [0.0] + [p for p in bps if 0 < p < supp] + [supp]
                for a, b in zip(edges_pos[:-1], edges_pos[1:]):
                    v, _ = integrate.quad(lambda u: g(sgn * u), a, b, limit=500,
                                          epsabs=1e-13, epsrel=1e-10)
                    val += v
        if trip.atoms is not None:
            loc, w = trip.atoms
            comp = np.where(np.abs(loc) < 1, loc * d1, 0.0)
            val += float(np.sum(w * (f(x + loc) - fx - comp)))
        total += float(phi(x)) * val
    return total
