"""Numeric probes of the continuity characterisation of rich Feller symbols.

Sub-verdicts (ids ``appen1.iii.a`` .. ``appen1.iii.d``):

(a) ``x -> b(x)`` continuous: modulus of continuity along decreasing h;
(b) ``x -> nu(x, .)`` vaguely continuous: moduli of ``int g dnu(x, .)`` for
    a panel of radial bumps;
(c) ``sup_K nu(x, B(0,R)^c) -> 0`` as ``R -> inf``;
(d) ``sup_K int_{|y|<=r} |y|^2 nu(x, dy) -> 0`` as ``r -> 0``.

The diffusion part is probed separately and only reported in diagnostics.
A finite panel of test functions can support continuity, never certify it.
"""
from __future__ import annotations

import numpy as np

from .conditions import DEFAULT_GRIDS, ProbeGrids
from .errors import CapabilityError, ParameterDomainError
from .levy import ExponentSpec, LevyTriplet, sphere_area
from .reports import PASS, ConditionReport, combine, trace_report
from .symbols import StateCharacteristics


def _box(K, d):
    box = np.asarray(K, float).reshape(d, 2)
    if np.any(box[:, 1] < box[:, 0]):
        raise ParameterDomainError("compact box needs lo <= hi on every axis")
    return box


def box_points(K, d: int, n: int) -> np.ndarray:
    """Uniform grid of the box plus log-spaced offsets around its center.

    The offsets (1e-10 .. 1e-1 along the first axis) resolve isolated
    discontinuities at the center.
    """
    box = _box(K, d)
    center = box.mean(axis=1)
    offs = np.geomspace(1e-10, 1e-1, 10)
    if d == 1:
        pts = np.linspace(box[0, 0], box[0, 1], n)
        extra = np.concatenate([center[0] - offs, [center[0]], center[0] + offs])
        return np.unique(np.concatenate([pts, extra]))[:, None]
    m = max(2, int(np.ceil(n ** (1 / d))))
    axes = [np.linspace(lo, hi, m) for lo, hi in box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    e1 = np.zeros(d)
    e1[0] = 1
    extra = np.concatenate([center - offs[:, None] * e1, [center], center + offs[:, None] * e1])
    return np.concatenate([grid, extra])


def _arg(x, d):
    return float(x[0]) if d == 1 else np.asarray(x, float)


def _modulus(fn, pts, hs, d):
    """``max_x max_{e} |fn(x + h e) - fn(x)|`` for each h (e = +-coordinate axes)."""
    base = [np.atleast_1d(np.asarray(fn(_arg(p, d)), float)) for p in pts]
    out = np.zeros(len(hs))
    dirs = np.concatenate([np.eye(d), -np.eye(d)])
    for k, h in enumerate(hs):
        worst = 0.0
        for p, v0 in zip(pts, base):
            for e in dirs:
                v = np.atleast_1d(np.asarray(fn(_arg(p + h * e, d)), float))
                worst = max(worst, float(np.max(np.abs(v - v0))))
        out[k] = worst
    return out


def _bump(rho):
    """Smooth radial bump supported in ``rho/2 < |y| < 3 rho/2``."""
    def g(r):
        u = (np.asarray(r, float) - rho) / (rho / 2)
        inside = np.abs(u) < 1
        out = np.zeros_like(u)
        out[inside] = np.exp(1 - 1 / (1 - u[inside] ** 2))
        return out
    return g


_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


def _bump_panel(trip: LevyTriplet, bumps) -> np.ndarray:
    """``int g dnu`` for each ``(g, rho)``; fixed Gauss-Legendre per smooth piece."""
    out = np.zeros(len(bumps))
    d = trip.dim
    for k, (g, rho) in enumerate(bumps):
        lo, hi = rho / 2, min(1.5 * rho, trip.support)
        if trip.density is not None and hi > lo:
            edges = [lo] + sorted(p for p in trip.breakpoints if lo < p < hi) + [hi]
            for a, b in zip(edges[:-1], edges[1:]):
                u = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
                n = trip.density
                if d == 1:
                    dens = np.asarray(n(u), float) + np.asarray(n(-u), float)
                else:
                    dens = sphere_area(d) * u ** (d - 1) * np.asarray(n(u), float)
                out[k] += 0.5 * (b - a) * float(np.sum(_GL_W * g(u) * dens))
        if trip.atoms is not None:
            loc, w = trip.atoms
            out[k] += float(np.sum(g(np.abs(loc)) * w))
    return out


def _as_chars(chars) -> StateCharacteristics:
    if isinstance(chars, StateCharacteristics):
        return chars
    if isinstance(chars, ExponentSpec):
        return StateCharacteristics.from_exponent(chars)
    if isinstance(chars, LevyTriplet):
        return StateCharacteristics.from_triplet(chars)
    raise ParameterDomainError("continuity_probe needs StateCharacteristics")


def continuity_probe(chars, K, grids: ProbeGrids = DEFAULT_GRIDS) -> ConditionReport:
    """Probe the four continuity conditions on the compact box ``K``.

    Parameters
    ----------
    chars : StateCharacteristics (ExponentSpec or LevyTriplet accepted)
    K : sequence
        ``(lo, hi)`` in d = 1, ``((lo1, hi1), (lo2, hi2))`` in d = 2.
    grids : ProbeGrids

    Returns
    -------
    ConditionReport
        Id ``appen1.iii`` with four subreports.  ``diagnostics["Q_continuity"]``
        holds the separate verdict for the diffusion matrix.
    """
    chars = _as_chars(chars)
    d = chars.dim
    if d > 2:
        raise CapabilityError("continuity probe supports d <= 2")
    hs = np.asarray(grids.h_grid)
    fine = box_points(K, d, grids.k_points)
    coarse = box_points(K, d, grids.k_coarse)
    inv_h = 1 / hs

    # (a) drift
    omega_b = _modulus(chars.b_at, fine, hs, d)
    rep_a = trace_report("appen1.iii.a", inv_h, omega_b, "decay",
                         notes="modulus of continuity of b along 1/h")

    # (b) vague continuity on a bump panel
    rhos = np.geomspace(1e-2, 1e2, grids.bumps)
    bumps = [(_bump(r), r) for r in rhos]
    cache = {}

    def panel(x):
        key = tuple(np.atleast_1d(x).tolist())
        if key not in cache:
            cache[key] = _bump_panel(chars.triplet_at(x), bumps)
        return cache[key]

    scale = np.max([np.abs(panel(_arg(p, d))) for p in coarse], axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    omega_nu = _modulus(lambda x: panel(x) / scale, coarse, hs, d)
    rep_b = trace_report("appen1.iii.b", inv_h, omega_nu, "decay",
                         notes=f"relative modulus of int g dnu(x,.) over {len(rhos)} radial bumps")

    # (c) uniform tightness at infinity
    if chars.source is not None:
        trips = [chars.triplet_at(_arg(coarse[0], d))]
    else:
        trips = [chars.triplet_at(_arg(p, d)) for p in coarse]
    Rs = np.asarray(grids.R_grid)
    tail = np.array([max(t.tail_mass(R) for t in trips) for R in Rs])
    rep_c = trace_report("appen1.iii.c", Rs, tail, "decay",
                         notes="sup_K nu(x, B(0,R)^c) along R")

    # (d) uniform small-jump second moment
    rs = np.asarray(grids.r_small)[::-1]
    small = np.array([max(t.radial_mass(lambda u: u**2, 0.0, r) for t in trips) for r in rs])
    rep_d = trace_report("appen1.iii.d", 1 / rs, small, "decay",
                         notes="sup_K int_{|y|<=r} |y|^2 nu(x,dy) along 1/r")

    subs = [rep_a, rep_b, rep_c, rep_d]
    omega_Q = _modulus(lambda x: chars.Q_at(x).ravel(), fine, hs, d)
    q_rep = trace_report("Q_continuity", inv_h, omega_Q, "decay")
    notes = ""
    if q_rep.verdict != PASS:
        notes = ("diffusion matrix Q(x) appears discontinuous on K; this is the documented "
                 "Q-discontinuity case and is not folded into the verdict")
    return ConditionReport(
        "appen1.iii",
        combine(s.verdict for s in subs),
        subreports=subs,
        notes=notes,
        diagnostics={
            "Q_continuity": q_rep.verdict,
            "Q_modulus": list(zip(hs.tolist(), omega_Q.tolist())),
            "box": np.asarray(K, float).tolist(),
            "bump_radii": rhos.tolist(),
        },
    )


def continuity_json(report: ConditionReport) -> dict:
    """Flat ``{subverdicts, grids, values}`` view of a continuity report."""
    subs = report.subreports
    return {
        "condition_id": report.condition_id,
        "verdict": report.verdict,
        "subverdicts": [{"id": s.condition_id, "verdict": s.verdict} for s in subs],
        "grids": [[p[0] for p in s.raw] for s in subs],
        "values": [[p[1] for p in s.raw] for s in subs],
        "notes": report.notes,
        "diagnostics": report.to_dict()["diagnostics"],
    }


__all__ = ["continuity_probe", "continuity_json", "box_points"]
