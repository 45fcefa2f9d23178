"""Path skeletons, Monte Carlo configuration and path ensembles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ParameterDomainError

#: State used for the cemetery point after explosion (all coordinates NaN).
CEMETERY = math.nan

OK, EXPLODED, CENSORED = "ok", "exploded", "censored"


def is_cemetery(state) -> bool:
    return bool(np.all(np.isnan(np.asarray(state, float))))


@dataclass(frozen=True)
class PathSkeleton:
    """Piecewise-constant cadlag path: ``X_t = states[i]`` on ``[times[i], times[i+1])``.

    Attributes
    ----------
    times : ndarray, shape (n,)
        Strictly increasing, ``times[0] == 0``.
    states : ndarray, shape (n, d)
    exploded : bool
    explosion_time : float or None
        From this time on the path sits in the cemetery.
    censored : bool
        The simulation budget ended before the requested horizon.
    """

    times: np.ndarray
    states: np.ndarray
    exploded: bool = False
    explosion_time: Optional[float] = None
    censored: bool = False
    path_id: int = 0

    def __post_init__(self):
        t = np.asarray(self.times, float)
        x = np.asarray(self.states, float)
        if x.ndim == 1:
            x = x[:, None]
        if t.ndim != 1 or len(t) == 0 or t[0] != 0:
            raise ParameterDomainError("path times must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ParameterDomainError("path times must be strictly increasing")
        if len(x) != len(t):
            raise ParameterDomainError("times and states differ in length")
        if self.exploded and self.explosion_time is None:
            raise ParameterDomainError("exploded path needs an explosion time")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def flag(self) -> str:
        return EXPLODED if self.exploded else (CENSORED if self.censored else OK)

    def state_at(self, t) -> np.ndarray:
        """``X_t`` (cemetery state after the explosion time)."""
        t = float(t)
        if t < 0:
            raise DomainError("negative time")
        if self.exploded and t >= self.explosion_time:
            return np.full(self.dim, CEMETERY)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.states[i]

    def sup_deviation(self, t: float, x0=None) -> float:
        """``sup_{s <= t} |X_s - x0|`` (``x0`` defaults to ``X_0``)."""
        x0 = self.states[0] if x0 is None else np.atleast_1d(np.asarray(x0, float))
        i = int(np.searchsorted(self.times, t, side="right"))
        dev = np.linalg.norm(self.states[:i] - x0, axis=1)
        return float(np.nanmax(dev)) if i else 0.0


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings shared by the path engines.

    Attributes
    ----------
    n_paths : int
    horizon : float
    dt : float, optional
        Simulation step; the default is ``horizon * 2**-10`` for ``alpha >= 1``
        and ``horizon * 2**-12`` below (see :meth:`step`).
    seed : int
    escape_radius : float
        A path is exploded once ``|X| > escape_radius``.
    threads : int, optional
        Worker threads; results do not depend on it.
    store_paths : bool
        Keep full path skeletons (memory grows with ``n_paths * steps``).
    """

    n_paths: int = 10_000
    horizon: float = 1.0
    dt: Optional[float] = None
    seed: int = 0
    escape_radius: float = 1e8
    threads: Optional[int] = None
    store_paths: bool = False

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ParameterDomainError("n_paths must be >= 1")
        if not self.horizon > 0:
            raise ParameterDomainError("horizon must be positive")
        if self.dt is not None and not 0 < self.dt <= self.horizon:
            raise ParameterDomainError("dt must lie in (0, horizon]")
        if not self.escape_radius > 0:
            raise ParameterDomainError("escape radius must be positive")

    def step(self, alpha: float = 2.0) -> float:
        if self.dt is not None:
            return float(self.dt)
        return self.horizon * (2.0**-10 if alpha >= 1 else 2.0**-12)

    def grid(self, alpha: float = 2.0):
        """``(n_steps, times)`` of the uniform simulation grid on [0, horizon]."""
        n = max(1, int(math.ceil(self.horizon / self.step(alpha) - 1e-9)))
        h = self.horizon / n
        times = np.arange(n + 1) * h
        times[-1] = self.horizon
        return n, times

    def to_dict(self) -> dict:
        return {
            "n_paths": int(self.n_paths), "horizon": float(self.horizon),
            "dt": None if self.dt is None else float(self.dt), "seed": int(self.seed),
            "escape_radius": float(self.escape_radius), "store_paths": bool(self.store_paths),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MCConfig":
        allowed = {"n_paths", "horizon", "dt", "seed", "escape_radius", "threads", "store_paths"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterDomainError(f"unknown MC config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Ensemble:
    """Summary of a simulated path ensemble at the record times.

    Attributes
    ----------
    record_times : ndarray, shape (m,)
    states : ndarray, shape (n, m, d)
        State at each record time (NaN in the cemetery or after censoring).
    sup_dev : ndarray, shape (n, m)
        ``sup_{s <= t} |X_s - x0|``.
    exploded, censored : bool arrays, shape (n,)
    explosion_time : ndarray, shape (n,)
        NaN unless exploded.
    clock : ndarray, shape (n, m), optional
        ``alpha_t`` at the record times (time-change ensembles).
    paths : list of PathSkeleton, optional
    replay : callable, optional
        ``replay(integrands, record_times) -> (integrals, states)`` with
        integrals ``int_0^t g(X_s) ds`` of shape (n, m, q) and states of shape
        (n, m, d), recomputed from the same random streams.
    """

    record_times: np.ndarray
    states: np.ndarray
    sup_dev: np.ndarray
    exploded: np.ndarray
    censored: np.ndarray
    explosion_time: np.ndarray
    x0: np.ndarray
    clock: Optional[np.ndarray] = None
    paths: Optional[list] = None
    replay: Optional[Callable] = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def _index(self, t) -> int:
        idx = np.flatnonzero(np.isclose(self.record_times, t, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise DomainError(f"time {t} is not a record time")
        return int(idx[0])

    def at(self, t: Optional[float] = None) -> np.ndarray:
        """States at record time ``t`` (default: last); shape (n,) for d = 1."""
        j = -1 if t is None else self._index(t)
        out = self.states[:, j, :]
        return out[:, 0] if self.dim == 1 else out

    def sup_at(self, t: Optional[float] = None) -> np.ndarray:
        j = -1 if t is None else self._index(t)
        return self.sup_dev[:, j]

    def flags(self) -> np.ndarray:
        out = np.full(self.n_paths, OK, dtype=object)
        out[self.censored] = CENSORED
        out[self.exploded] = EXPLODED
        return out

    def counts(self) -> dict:
        return {"exploded": int(self.exploded.sum()), "censored": int(self.censored.sum()),
                "ok": int(self.n_paths - self.exploded.sum() - self.censored.sum())}

    def integrate(self, g: Callable, times=None) -> np.ndarray:
        """``int_0^t g(X_s) ds`` per path and time (piecewise-exact); shape (n, m)."""
        if self.replay is None:
            raise DomainError("ensemble cannot be replayed")
        return self.observe([g], times)[0][..., 0]

    def observe(self, integrands, times=None):
        """Replay the ensemble: ``(integrals (n, m, q), states (n, m, d))`` at ``times``."""
        if self.replay is None:
            raise DomainError("ensemble cannot be replayed")
        times = self.record_times if times is None else np.atleast_1d(np.asarray(times, float))
        return self.replay(list(integrands), times)

    def to_csv(self, path) -> None:
        """Rows ``path_id,t,state_1..state_d,flag`` (full skeletons if stored)."""
        flags = self.flags()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "t"] + [f"state_{k + 1}" for k in range(self.dim)] + ["flag"])
            if self.paths is not None:
                for p in self.paths:
                    for t, x in zip(p.times, p.states):
                        w.writerow([p.path_id, repr(float(t))] + [repr(float(v)) for v in x]
                                   + [p.flag])
                return
            for i in range(self.n_paths):
                for j, t in enumerate(self.record_times):
                    w.writerow([i, repr(float(t))] + [repr(float(v)) for v in self.states[i, j]]
                               + [flags[i]])


def read_ensemble_csv(path) -> dict:
    """Parse an ensemble CSV into ``{path_id: (times, states, flag)}``."""
    out = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        d = len(header) - 3
        for row in r:
            pid = int(row[0])
            ts, xs, _ = out.setdefault(pid, ([], [], row[-1]))
            ts.append(float(row[1]))
            xs.append([float(v) for v in row[2:2 + d]])
    return {k: (np.array(t), np.array(x), f) for k, (t, x, f) in out.items()}


__all__ = [
    "CEMETERY", "OK", "EXPLODED", "CENSORED", "is_cemetery",
    "PathSkeleton", "MCConfig", "Ensemble", "read_ensemble_csv",
]
