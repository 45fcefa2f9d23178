"""State coefficients ``x -> phi(x)``: builtin forms, tables and expressions.

Expressions use a small arithmetic grammar: numbers, the variables ``x``
(d = 1), ``r = |x|`` and ``x1 .. xd``, the operators ``+ - * / ^`` (``**`` is
accepted too) and the functions ``sin cos exp abs min max sqrt``.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ParameterDomainError

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "min": np.minimum,
    "max": np.maximum,
}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _compile_expression(expr: str, dim: int) -> Callable:
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ParameterDomainError(f"cannot parse expression {expr!r}: {exc.msg}") from None
    names = {"r"} | ({"x"} if dim == 1 else set()) | {f"x{k + 1}" for k in range(dim)}

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ParameterDomainError(f"invalid literal in {expr!r}")
            return
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ParameterDomainError(f"unknown name {node.id!r} in {expr!r}")
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            check(node.operand)
            return
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and not node.keywords
        ):
            arity = 2 if node.func.id in ("min", "max") else 1
            if len(node.args) != arity:
                raise ParameterDomainError(f"{node.func.id} takes {arity} argument(s)")
            for a in node.args:
                check(a)
            return
        raise ParameterDomainError(f"unsupported syntax in {expr!r}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        return _FUNCS[node.func.id](*(ev(a, env) for a in node.args))

    body = tree.body

    def func(x):
        x = np.asarray(x, float)
        if dim == 1:
            env = {"x": x, "r": np.abs(x), "x1": x}
        else:
            env = {"r": np.linalg.norm(x, axis=-1)}
            env.update({f"x{k + 1}": x[..., k] for k in range(dim)})
        with np.errstate(all="ignore"):
            out = ev(body, env)
        return np.broadcast_to(np.asarray(out, float), env["r"].shape).copy()

    return func


def _norm(x, dim):
    x = np.asarray(x, float)
    return np.abs(x) if dim == 1 else np.linalg.norm(x, axis=-1)


@dataclass(frozen=True)
class StateCoefficient:
    """A state-dependent coefficient ``x -> phi(x)``.

    Attributes
    ----------
    func : callable
        Vectorised evaluation.  In d = 1 the input may have any shape; for
        d >= 2 the trailing axis holds coordinates.
    growth : float or None
        Declared growth exponent ``gamma`` with ``phi(x) = O(|x|^gamma)``;
        ``inf`` for super-polynomial growth.
    spec : dict
        Serialisable description; ``from_spec(spec)`` rebuilds the coefficient.
    dim : int
    """

    func: Callable = field(compare=False)
    growth: Optional[float]
    spec: dict
    dim: int = 1

    def __call__(self, x):
        return self.func(x)

    # builtin forms ---------------------------------------------------------
    @classmethod
    def constant(cls, value: float, dim: int = 1):
        v = float(value)
        return cls(lambda x: np.full(np.shape(_norm(x, dim)), v), 0.0,
                   {"kind": "constant", "value": v}, dim)

    @classmethod
    def power(cls, gamma: float, offset: float = 1.0, coef: float = 1.0, dim: int = 1):
        """``offset + coef |x|^gamma``."""
        g, o, c = float(gamma), float(offset), float(coef)
        if g < 0:
            raise ParameterDomainError("power coefficient needs gamma >= 0")
        return cls(lambda x: o + c * _norm(x, dim) ** g, g,
                   {"kind": "power", "gamma": g, "offset": o, "coef": c}, dim)

    @classmethod
    def trig(cls, a: float, dim: int = 1):
        """``1 + a sin(x_1)``; positive for ``|a| < 1``."""
        a = float(a)
        if abs(a) >= 1:
            raise ParameterDomainError("bounded-trig coefficient needs |a| < 1")

        def f(x):
            x = np.asarray(x, float)
            return 1 + a * np.sin(x if dim == 1 else x[..., 0])
        return cls(f, 0.0, {"kind": "trig", "a": a}, dim)

    @classmethod
    def exponential(cls, rate: float = 1.0, dim: int = 1):
        """``exp(rate |x|)``."""
        k = float(rate)
        return cls(lambda x: np.exp(k * _norm(x, dim)), math.inf if k > 0 else 0.0,
                   {"kind": "exponential", "rate": k}, dim)

    @classmethod
    def tabulated(cls, grid, values, interp: str = "linear"):
        """Radial table ``|x| -> value`` (d = 1 tables are in ``x`` itself).

        Outside the grid the end values are held constant.
        """
        g = np.asarray(grid, float)
        v = np.asarray(values, float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 2 or np.any(np.diff(g) <= 0):
            raise ParameterDomainError("tabulated coefficient needs an increasing grid")
        if interp == "linear":
            def f(x):
                return np.interp(np.asarray(x, float), g, v)
        elif interp == "cubic":
            spline = CubicSpline(g, v)

            def f(x):
                return spline(np.clip(np.asarray(x, float), g[0], g[-1]))
        else:
            raise ParameterDomainError(f"unknown interpolation rule {interp!r}")
        return cls(f, 0.0, {"kind": "tabulated", "grid": g.tolist(), "values": v.tolist(),
                            "interp": interp}, 1)

    @classmethod
    def expression(cls, expr: str, dim: int = 1, growth: Optional[float] = None):
        func = _compile_expression(expr, dim)
        if growth is None:
            growth = _estimate_growth(func, dim)
        return cls(func, growth, {"kind": "expression", "expr": expr, "dim": dim}, dim)

    @classmethod
    def power_of(cls, base: "StateCoefficient", alpha: float):
        """``|base(x)|^alpha``, e.g. ``phi = |sigma|^alpha``."""
        a = float(alpha)
        g = None if base.growth is None else base.growth * a
        return cls(lambda x: np.abs(base(x)) ** a, g,
                   {"kind": "power_of", "base": base.spec, "alpha": a}, base.dim)

    @classmethod
    def from_callable(cls, func: Callable, growth: Optional[float] = None, dim: int = 1,
                      name: str = "callable"):
        """Wrap an arbitrary vectorised callable (not serialisable)."""
        return cls(lambda x: np.asarray(func(np.asarray(x, float)), float), growth,
                   {"kind": "callable", "name": name}, dim)

    # serialisation -------------------------------------------------------------
    @classmethod
    def from_spec(cls, spec, dim: int = 1) -> "StateCoefficient":
        """Rebuild from :attr:`spec`; a bare number or string is accepted."""
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return cls.constant(spec, dim)
        if isinstance(spec, str):
            return cls.expression(spec, dim)
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ParameterDomainError(f"invalid coefficient spec {spec!r}")
        kind = spec["kind"]
        params = {k: v for k, v in spec.items() if k != "kind"}
        allowed = {
            "constant": {"value"},
            "power": {"gamma", "offset", "coef"},
            "trig": {"a"},
            "exponential": {"rate"},
            "tabulated": {"grid", "values", "interp"},
            "expression": {"expr", "dim", "growth"},
            "power_of": {"base", "alpha"},
        }
        if kind not in allowed:
            raise ParameterDomainError(f"unknown coefficient kind {kind!r}")
        unknown = set(params) - allowed[kind]
        if unknown:
            raise ParameterDomainError(f"unknown keys for {kind}: {sorted(unknown)}")
        if kind == "power_of":
            return cls.power_of(cls.from_spec(params["base"], dim), params["alpha"])
        if kind == "tabulated":
            return cls.tabulated(**params)
        if kind == "expression":
            return cls.expression(params["expr"], params.get("dim", dim), params.get("growth"))
        return getattr(cls, kind)(**params, dim=dim)

    # checks ----------------------------------------------------------------------
    def check_positive(self, points) -> None:
        """Raise DomainError unless ``phi`` is finite and positive at ``points``."""
        vals = np.asarray(self(points), float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("coefficient is not finite at all probe points")
        if np.any(vals <= 0):
            raise DomainError("coefficient must be strictly positive")


def _estimate_growth(func, dim) -> float:
    r = np.array([1e3, 1e5])
    pts = r if dim == 1 else np.column_stack([r] + [np.zeros(2)] * (dim - 1))
    with np.errstate(all="ignore"):
        v = np.abs(np.asarray(func(pts), float))
        if dim == 1:
            v = np.maximum(v, np.abs(np.asarray(func(-pts), float)))
    if not np.all(np.isfinite(v)):
        return math.inf
    if np.any(v == 0):
        return 0.0
    slope = float(np.log(v[1] / v[0]) / np.log(r[1] / r[0]))
    return max(0.0, round(slope, 3))


def as_coefficient(obj, dim: int = 1) -> StateCoefficient:
    """Coerce numbers, expression strings, spec dicts and callables."""
    if isinstance(obj, StateCoefficient):
        return obj
    if callable(obj):
        return StateCoefficient.from_callable(obj, dim=dim)
    return StateCoefficient.from_spec(obj, dim)
