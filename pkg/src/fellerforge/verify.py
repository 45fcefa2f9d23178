"""Statistical experiments: characteristic functions, two-sample tests and
Monte Carlo probes of the weak-uniqueness, maximal-inequality, moment,
perpetual-integral and martingale statements.

Every experiment returns a :class:`VerifyReport` whose verdict is recomputed
from its metrics and thresholds by a registered rule (:func:`recheck`).
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .coefficients import StateCoefficient, as_coefficient
from .errors import DomainError, ParameterDomainError
from .generator import generator_function
from .levy import ExponentSpec
from .paths import Ensemble, MCConfig
from .reports import FAIL, INCONCLUSIVE, PASS
from .sde import euler_maruyama, simulate_levy
from .symbols import StateSymbol, evaluate_symbol
from .timechange import simulate_timechanged

#: Comparison grid: 0 and +-10 log-spaced points in [0.1, 10].
CF_GRID = np.concatenate([-np.logspace(-1, 1, 10)[::-1], [0.0], np.logspace(-1, 1, 10)])


@dataclass(frozen=True)
class CFEstimate:
    """Empirical characteristic function with delta-method standard errors."""

    xi: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n: int

    def to_csv(self, path) -> None:
        """Rows ``xi,re,im,se``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "re", "im", "se"])
            for x, v, s in zip(self.xi, self.values, self.std_errors):
                w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag)),
                            repr(float(s))])


def empirical_cf(samples, xi_grid=CF_GRID) -> CFEstimate:
    """``(1/n) sum_j exp(i xi x_j)`` with SE ``sqrt((1 - |value|^2) / n)``.

    The variance ``1 - |value|^2`` is computed as the sample mean of
    ``|exp(i xi x_j) - value|^2`` so that a point mass has SE exactly 0.

    Raises
    ------
    DomainError
        For an empty sample or non-finite values.
    """
    x = np.asarray(samples, float).ravel()
    if x.size == 0:
        raise DomainError("empirical CF needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples contain non-finite values")
    xi = np.atleast_1d(np.asarray(xi_grid, float))
    ph = np.outer(x, xi)
    c, s = np.cos(ph), np.sin(ph)
    re = c.sum(axis=0) / x.size
    im = s.sum(axis=0) / x.size
    vals = re + 1j * im
    # mean of |e^{i xi x} - value|^2, i.e. 1 - |value|^2 without cancellation
    var = (((c - re) ** 2).sum(axis=0) + ((s - im) ** 2).sum(axis=0)) / x.size
    se = np.sqrt(var / x.size)
    return CFEstimate(xi, vals, se, int(x.size))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("KS test needs two nonempty samples")
    with np.errstate(divide="ignore"):
        res = stats.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)


def config_hash(config: dict) -> str:
    return hashlib.sha256(_canonical(config).encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return v


def _num(v):
    if isinstance(v, str):
        return {"nan": math.nan, "inf": math.inf, "-inf": -math.inf}.get(v, v)
    if isinstance(v, list):
        return [_num(x) for x in v]
    return v


@dataclass
class VerifyReport:
    """Outcome of one experiment.

    Attributes
    ----------
    experiment : str
    metrics : dict of named numbers (lists allowed)
    thresholds : dict
    verdict : {"pass", "fail", "inconclusive"}
    seed : int
    config : dict
        Everything needed to replay the experiment.
    notes : str
    """

    experiment: str
    metrics: dict
    thresholds: dict
    verdict: str
    seed: int = 0
    config: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def to_dict(self) -> dict:
        return {
            "id": self.experiment,
            "metrics": _jsonable(self.metrics),
            "thresholds": _jsonable(self.thresholds),
            "verdict": self.verdict,
            "seed": int(self.seed),
            "config_hash": self.config_hash,
            "config": _jsonable(self.config),
            "notes": self.notes,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "VerifyReport":
        return cls(
            experiment=data["id"],
            metrics={k: _num(v) for k, v in data["metrics"].items()},
            thresholds={k: _num(v) for k, v in data["thresholds"].items()},
            verdict=data["verdict"],
            seed=int(data.get("seed", 0)),
            config=data.get("config", {}),
            notes=data.get("notes", ""),
        )


def _rule_cross(m, t):
    if m["exploded_em"] > 0 or m["exploded_tc"] > 0:
        return FAIL
    ok = m["cf_pass_fraction"] >= t["cf_fraction"] and m["ks_p"] >= t["ks_p"]
    return PASS if ok else FAIL


def _rule_maximal(m, t):
    if not m["monotone"] or not math.isfinite(m["c_hat"]):
        return FAIL
    if m["c_hat_refined"] <= (1 + t["refine_rtol"]) * m["c_hat"] + 1e-300:
        return PASS
    return INCONCLUSIVE


def _rule_moment(m, t):
    if not math.isfinite(m["slope"]):
        return FAIL
    if m["slope"] >= m["target_slope"] - t["slope_margin"] and m["c_spread"] <= t["c_spread"]:
        return PASS
    return INCONCLUSIVE


def _rule_perpetual(m, t):
    if m.get("precondition", PASS) != PASS:
        return INCONCLUSIVE
    growth = m["p05_growth_per_decade"]
    if len(growth) and min(growth) >= t["growth_per_decade"]:
        return PASS
    return INCONCLUSIVE


def _rule_martingale(m, t):
    z = np.abs(np.asarray(m["z_scores"], float))
    return PASS if np.all(z <= t["z_max"]) else FAIL


RULES = {
    "cross-validate": _rule_cross,
    "maximal-inequality": _rule_maximal,
    "moment-scaling": _rule_moment,
    "perpetual": _rule_perpetual,
    "martingale": _rule_martingale,
}


def recheck(report: VerifyReport) -> str:
    """Recompute the verdict from metrics and thresholds alone."""
    return RULES[report.experiment](report.metrics, report.thresholds)


def _finish(experiment, metrics, thresholds, seed, config, notes="") -> VerifyReport:
    rep = VerifyReport(experiment, metrics, thresholds, INCONCLUSIVE, seed, config, notes)
    rep.verdict = recheck(rep)
    return rep


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def compare_cf(a, b, xi_grid=CF_GRID, n_se: float = 3.0):
    """Per-point ``|cf_a - cf_b| <= n_se * sqrt(se_a^2 + se_b^2)``."""
    ca, cb = empirical_cf(a, xi_grid), empirical_cf(b, xi_grid)
    diff = np.abs(ca.values - cb.values)
    se = np.sqrt(ca.std_errors**2 + cb.std_errors**2)
    ok = diff <= n_se * se
    ratio = np.where(se > 0, diff / np.where(se > 0, se, 1), np.where(diff > 0, np.inf, 0.0))
    return ok, ratio, ca, cb


def cross_validate_weak(sigma, alpha: float, x0: float = 0.0, t: float = 1.0,
                        mc: MCConfig = MCConfig(n_paths=100_000),
                        xi_grid=CF_GRID) -> VerifyReport:
    """Compare Euler-Maruyama and time-change samples of ``X_t``.

    The SDE ``dX = sigma(X-) dL`` with symmetric alpha-stable ``L`` is sampled
    directly and through the time change of ``L`` with ``phi = |sigma|^alpha``.
    Pass: CF within 3 combined SE on >= 95% of the grid and KS p >= 0.01;
    any exploded path fails.
    """
    if not 0 < alpha <= 2:
        raise ParameterDomainError("alpha must lie in (0, 2]")
    sigma = as_coefficient(sigma, 1)
    driver = ExponentSpec.isotropic_stable(alpha)
    mc_t = MCConfig(mc.n_paths, t, mc.dt, mc.seed, mc.escape_radius, mc.threads)
    em = euler_maruyama(sigma, driver, x0, mc_t, stream_id=1)
    if _is_const(sigma):
        phi = StateCoefficient.constant(abs(float(sigma.spec["value"])) ** alpha)
    else:
        phi = StateCoefficient.power_of(sigma, alpha)
    tc = simulate_timechanged(driver, phi, x0, t, mc_t, stream_id=2)
    a, b = em.at(), tc.at()
    a_ok, b_ok = a[np.isfinite(a)], b[np.isfinite(b)]
    metrics = {
        "exploded_em": int(em.exploded.sum()),
        "exploded_tc": int(tc.exploded.sum()),
        "censored_tc": int(tc.censored.sum()),
    }
    if a_ok.size and b_ok.size:
        ok, ratio, ca, cb = compare_cf(a_ok, b_ok, xi_grid)
        ks, p = ks_two_sample(a_ok, b_ok)
        metrics.update(cf_pass_fraction=float(ok.mean()), max_cf_ratio=float(ratio.max()),
                       cf_ratio=ratio.tolist(), ks_stat=ks, ks_p=p)
    else:
        metrics.update(cf_pass_fraction=0.0, max_cf_ratio=math.inf, cf_ratio=[], ks_stat=1.0,
                       ks_p=0.0)
    config = {"sigma": sigma.spec, "alpha": alpha, "x0": x0, "t": t, "mc": mc_t.to_dict(),
              "xi_grid": np.asarray(xi_grid).tolist()}
    return _finish("cross-validate", metrics,
                   {"cf_sigma": 3.0, "cf_fraction": 0.95, "ks_p": 0.01}, mc.seed, config)


def _is_const(c: StateCoefficient) -> bool:
    return c.spec.get("kind") == "constant"


def _sup_symbol(sym: StateSymbol, x0: float, r: float, nz: int = 65, nxi: int = 33) -> float:
    z = x0 + np.linspace(-r, r, nz)
    xi = np.linspace(0, 1 / r, nxi)
    return float(max(np.max(np.abs(evaluate_symbol(sym, zz, xi))) for zz in z))


def maximal_inequality_probe(ensemble: Ensemble, x0: float, t: float, r_grid,
                             sym: StateSymbol, refine_rtol: float = 0.5) -> VerifyReport:
    """``P(sup_{s<=t} |X_s - x0| > r)`` against ``t sup_{|z-x0|<=r} sup_{|xi|<=1/r} |p(z,xi)|``.

    The fitted constant is the largest ratio; refinement inserts geometric
    midpoints into the r grid and re-fits.
    """
    r = np.asarray(r_grid, float)
    if r.ndim != 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ParameterDomainError("r_grid must be positive and increasing")
    sup = ensemble.sup_at(t)
    sup = np.where(np.isnan(sup), np.inf, sup)

    def fit(rs):
        probs = np.array([(sup > v).mean() for v in rs])
        bounds = np.array([t * _sup_symbol(sym, x0, v) for v in rs])
        ratio = np.where(bounds > 0, probs / np.where(bounds > 0, bounds, 1),
                         np.where(probs > 0, np.inf, 0.0))
        return probs, bounds, ratio

    probs, bounds, ratio = fit(r)
    fine = np.sort(np.concatenate([r, np.sqrt(r[:-1] * r[1:])]))
    _, _, ratio_f = fit(fine)
    metrics = {
        "r": r.tolist(), "prob": probs.tolist(), "bound": bounds.tolist(),
        "ratio": ratio.tolist(), "c_hat": float(ratio.max()),
        "c_hat_refined": float(ratio_f.max()),
        "monotone": bool(np.all(np.diff(probs) <= 0)),
    }
    config = {"t": t, "x0": x0, "r_grid": r.tolist(), "ensemble": ensemble.meta.get("mc", {})}
    return _finish("maximal-inequality", metrics, {"refine_rtol": refine_rtol},
                   int(ensemble.meta.get("mc", {}).get("seed", 0)), config)


def moment_scaling_probe(sigma, alpha: float, kappa: float, t_grid=None, x0: float = 0.0,
                         mc: MCConfig = MCConfig(n_paths=10_000),
                         ensemble: Optional[Ensemble] = None) -> VerifyReport:
    """Fit ``E sup_{s<=t} |X_s - x0|^kappa ~ c t^{slope}`` over ``t_grid``.

    Pass: ``slope >= kappa/alpha - 0.1`` and the ratios
    ``m(t) / t^{kappa/alpha}`` vary by at most a factor 2 (stable constant).

    Raises
    ------
    DomainError
        If ``kappa >= alpha`` or ``kappa < 0``.
    """
    if not 0 <= kappa < alpha:
        raise DomainError("moment scaling needs 0 <= kappa < alpha")
    t = np.asarray(np.linspace(0.125, 1.0, 8) if t_grid is None else t_grid, float)
    if np.any(t <= 0) or np.any(t > 1) or np.any(np.diff(t) <= 0):
        raise ParameterDomainError("t_grid must be increasing in (0, 1]")
    if ensemble is None:
        driver = ExponentSpec.isotropic_stable(alpha)
        mc_t = MCConfig(mc.n_paths, float(t[-1]), mc.dt, mc.seed, mc.escape_radius, mc.threads)
        ensemble = euler_maruyama(sigma, driver, x0, mc_t, record_times=t)
    moments = np.array([np.mean(ensemble.sup_at(v) ** kappa) for v in t])
    target = kappa / alpha
    if kappa == 0:
        slope = 0.0
    else:
        slope = float(np.polyfit(np.log(t), np.log(moments), 1)[0])
    c = moments / t**target
    metrics = {"t": t.tolist(), "moments": moments.tolist(), "slope": slope,
               "target_slope": target, "c_hat": float(c.max()),
               "c_spread": float(c.max() / c.min()) if c.min() > 0 else math.inf}
    config = {"alpha": alpha, "kappa": kappa, "t_grid": t.tolist(), "x0": x0,
              "sigma": as_coefficient(sigma).spec, "mc": mc.to_dict()}
    return _finish("moment-scaling", metrics, {"slope_margin": 0.1, "c_spread": 2.0},
                   mc.seed, config)


def perpetual_integral_mc(driver: ExponentSpec, f, horizons, mc: MCConfig = MCConfig(n_paths=1000),
                          x0: float = 0.0, precondition: Optional[str] = None) -> VerifyReport:
    """``I(T) = int_0^T f(X_s) ds`` along driver paths for increasing horizons.

    Reports the median and 5th percentile of ``I(T)``; "consistent with
    divergence" (pass) when the 5th percentile grows by at least 1.5x per
    decade of horizon, inconclusive otherwise.
    """
    T = np.asarray(horizons, float)
    if T.ndim != 1 or np.any(T <= 0) or np.any(np.diff(T) <= 0):
        raise ParameterDomainError("horizons must be positive and increasing")
    f = as_coefficient(f, driver.dim)
    if precondition is None:
        from .conditions import check_perpetual
        precondition = check_perpetual(f, driver).verdict
    mc_t = MCConfig(mc.n_paths, float(T[-1]), mc.dt, mc.seed, mc.escape_radius, mc.threads)
    if _is_const(f):
        c = float(f.spec["value"])
        I = np.tile(c * T, (mc.n_paths, 1))
        exploded = 0
    else:
        ens = simulate_levy(driver, x0, mc_t, record_times=T, integrands=[f])
        I = ens.meta["integrals"][..., 0]
        exploded = int(ens.exploded.sum())
        I = I[~ens.exploded]
    p05 = np.percentile(I, 5, axis=0)
    med = np.median(I, axis=0)
    decades = np.log10(T[1:] / T[:-1])
    growth = (p05[1:] / p05[:-1]) ** (1 / decades) if len(T) > 1 else np.array([])
    metrics = {"horizons": T.tolist(), "p05": p05.tolist(), "median": med.tolist(),
               "p05_growth_per_decade": growth.tolist(), "exploded": exploded,
               "precondition": precondition}
    config = {"driver": driver.to_dict(), "f": f.spec, "horizons": T.tolist(), "x0": x0,
              "mc": mc_t.to_dict()}
    rep = _finish("perpetual", metrics, {"growth_per_decade": 1.5}, mc.seed, config)
    rep.notes = ("consistent with divergence" if rep.verdict == PASS
                 else "no divergence signature on this horizon range")
    return rep


def martingale_residual(ensemble: Ensemble, f: Callable, sym: StateSymbol, t_grid,
                        z_max: float = 4.0, Af: Optional[Callable] = None) -> VerifyReport:
    """Mean of ``M_t = f(X_t) - f(X_0) - int_0^t Af(X_s) ds`` and of the
    increment ``M_t - M_{t/2}`` on the events ``{X_{t/2} > x0}``, ``{X_{t/2} <= x0}``.

    ``Af`` defaults to :func:`generator_function` (spectral route).  Pass if
    every mean is within ``z_max`` standard errors of 0.
    """
    t = np.atleast_1d(np.asarray(t_grid, float))
    if Af is None:
        Af = generator_function(sym, f)
    half = t / 2
    times = np.unique(np.concatenate([half, t]))
    integ, states = ensemble.observe([Af], times)
    integ = integ[..., 0]
    X = states[..., 0]
    x0 = float(ensemble.x0[0])
    f0 = np.asarray(f(np.full(X.shape[0], x0)), float)
    live = ~ensemble.exploded
    M = np.asarray(f(X), float) - f0[:, None] - integ
    z, means, ses = [], [], []

    def test(v):
        v = v[np.isfinite(v)]
        if v.size < 2:
            return
        mu = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(v.size))
        means.append(mu)
        ses.append(se)
        z.append(0.0 if mu == 0 and se == 0 else (mu / se if se > 0 else math.inf))

    for tt, hh in zip(t, half):
        jt = int(np.searchsorted(times, tt))
        jh = int(np.searchsorted(times, hh))
        test(M[live, jt])
        inc = M[live, jt] - M[live, jh]
        pos = X[live, jh] > x0
        test(inc[pos])
        test(inc[~pos])
    metrics = {"t": t.tolist(), "means": means, "std_errors": ses, "z_scores": z}
    config = {"t_grid": t.tolist(), "ensemble": ensemble.meta.get("mc", {}),
              "symbol": sym.to_dict() if hasattr(sym, "to_dict") else {}}
    return _finish("martingale", metrics, {"z_max": z_max},
                   int(ensemble.meta.get("mc", {}).get("seed", 0)), config)


__all__ = [
    "CF_GRID", "CFEstimate", "empirical_cf", "ks_two_sample", "compare_cf",
    "VerifyReport", "recheck", "config_hash",
    "cross_validate_weak", "maximal_inequality_probe", "moment_scaling_probe",
    "perpetual_integral_mc", "martingale_residual",
]
