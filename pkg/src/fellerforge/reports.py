"""Condition reports and the three-way trace verdict rules."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
VERDICTS = (PASS, FAIL, INCONCLUSIVE)

#: Relative change over the last third below which a trace counts as stabilised.
STABLE_RTOL = 0.01
#: Growth over the last third at or above which a trace counts as divergent.
DIVERGENCE_FACTOR = 10.0


def combine(verdicts) -> str:
    """Any fail -> fail; all pass -> pass; otherwise inconclusive."""
    verdicts = list(verdicts)
    if any(v == FAIL for v in verdicts):
        return FAIL
    if verdicts and all(v == PASS for v in verdicts):
        return PASS
    return INCONCLUSIVE


def _last_third_start(n: int) -> int:
    return max(0, n - 1 - max(1, (n - 1) // 3))


def tail_infimum(values) -> np.ndarray:
    """``min_{j >= k} G_j``: the finite-grid liminf estimator."""
    g = np.asarray(values, float)
    g = np.where(np.isnan(g), np.inf, g)
    return np.minimum.accumulate(g[::-1])[::-1]


def running_sup(values) -> np.ndarray:
    g = np.asarray(values, float)
    g = np.where(np.isnan(g), np.inf, g)
    return np.maximum.accumulate(g)


def tail_sup(values) -> np.ndarray:
    g = np.asarray(values, float)
    g = np.where(np.isnan(g), np.inf, g)
    return np.maximum.accumulate(g[::-1])[::-1]


def _growth(trace: np.ndarray) -> float:
    i0 = _last_third_start(len(trace))
    a, b = trace[i0], trace[-1]
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def stabilised_verdict(trace) -> str:
    """Verdict for a nondecreasing trace (tail infimum or running sup).

    pass: finite and relative change < 1% over the last third;
    fail: non-finite or growth >= 10x over the last third;
    otherwise inconclusive.
    """
    t = np.asarray(trace, float)
    if not np.all(np.isfinite(t[_last_third_start(len(t)):])):
        return FAIL
    g = _growth(t)
    if g >= DIVERGENCE_FACTOR:
        return FAIL
    if abs(g - 1.0) < STABLE_RTOL:
        return PASS
    return INCONCLUSIVE


def decay_verdict(values, rel_floor: float = 1e-2) -> str:
    """Verdict for quantities that must tend to 0 along the grid.

    pass: identically 0 at the end, or the tail sup falls by >= 10x over
    the last third, or ends below ``rel_floor`` times its start;
    fail: non-finite, growing >= 10x, or stabilised at a positive level;
    otherwise inconclusive.
    """
    g = np.asarray(values, float)
    if not np.all(np.isfinite(g)):
        return FAIL
    s = tail_sup(g)
    if s[-1] == 0:
        return PASS
    i0 = _last_third_start(len(g))
    if g[i0] > 0 and g[-1] >= DIVERGENCE_FACTOR * g[i0]:
        return FAIL
    if s[-1] * DIVERGENCE_FACTOR <= s[i0] or (s[0] > 0 and s[-1] <= rel_floor * s[0]):
        return PASS
    if abs(s[-1] / s[i0] - 1.0) < STABLE_RTOL:
        return FAIL
    return INCONCLUSIVE


@dataclass
class ConditionReport:
    """Verdict plus grid diagnostics for one hypothesis.

    Attributes
    ----------
    condition_id : str
    verdict : {"pass", "fail", "inconclusive"}
    trace : list of (grid point, value)
        The verdict-defining trace.
    tolerance : float
    notes : str
    trace_kind : str
        ``tail_inf``, ``running_sup``, ``decay`` or ``registry``.
    fitted : dict
        Fitted constants (e.g. ``C``, ``c``, ``limit``).
    raw : list of (grid point, value)
        Unprocessed grid values before the inf/sup transform.
    subreports : list of ConditionReport
    diagnostics : dict
        Extra information never folded into the verdict.
    """

    condition_id: str
    verdict: str
    trace: list = field(default_factory=list)
    tolerance: float = STABLE_RTOL
    notes: str = ""
    trace_kind: str = ""
    fitted: dict = field(default_factory=dict)
    raw: list = field(default_factory=list)
    subreports: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"invalid verdict {self.verdict!r}")

    def sub(self, condition_id: str) -> Optional["ConditionReport"]:
        for r in self.subreports:
            if r.condition_id == condition_id:
                return r
        return None

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "verdict": self.verdict,
            "trace": [[_num(a), _num(b)] for a, b in self.trace],
            "raw": [[_num(a), _num(b)] for a, b in self.raw],
            "tolerance": self.tolerance,
            "trace_kind": self.trace_kind,
            "fitted": {k: _num(v) for k, v in self.fitted.items()},
            "notes": self.notes,
            "diagnostics": _jsonable(self.diagnostics),
            "subreports": [r.to_dict() for r in self.subreports],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "ConditionReport":
        return cls(
            condition_id=data["condition_id"],
            verdict=data["verdict"],
            trace=[tuple(p) for p in data.get("trace", [])],
            tolerance=data.get("tolerance", STABLE_RTOL),
            notes=data.get("notes", ""),
            trace_kind=data.get("trace_kind", ""),
            fitted=dict(data.get("fitted", {})),
            raw=[tuple(p) for p in data.get("raw", [])],
            subreports=[cls.from_dict(s) for s in data.get("subreports", [])],
            diagnostics=dict(data.get("diagnostics", {})),
        )


def _num(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float, int, np.integer)) and not isinstance(obj, bool):
        return _num(obj)
    return obj


def trace_report(condition_id: str, grid, values, kind: str, notes: str = "",
                 **extra) -> ConditionReport:
    """Build a report from raw grid values using the rule for ``kind``."""
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    if kind == "tail_inf":
        tr = tail_infimum(values)
        verdict = stabilised_verdict(tr)
        fitted = {"limit": tr[-1]}
    elif kind == "running_sup":
        tr = running_sup(values)
        verdict = stabilised_verdict(tr)
        i0 = _last_third_start(len(values))
        tail = values[i0:]
        fitted = {"C": tr[-1],
                  "C_lsq": float(np.mean(tail)) if np.all(np.isfinite(tail)) else math.inf}
    elif kind == "decay":
        tr = tail_sup(values)
        verdict = decay_verdict(values)
        fitted = {"final": tr[-1]}
    else:
        raise ValueError(f"unknown trace kind {kind!r}")
    return ConditionReport(
        condition_id=condition_id,
        verdict=verdict,
        trace=list(zip(grid.tolist(), tr.tolist())),
        raw=list(zip(grid.tolist(), values.tolist())),
        trace_kind=kind,
        fitted=fitted,
        notes=notes,
        **extra,
    )
