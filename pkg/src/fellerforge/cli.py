"""Command-line front end: ``forge <command> [options]``.

Every command accepts ``--config`` (strict JSON object whose keys are the
command's option names), ``--seed``, ``--threads``, ``--out`` and
``--replay``.  Explicit flags override config values.  Files are written
only inside ``--out``; the JSON report is also printed to standard output.

Exit codes: 0 pass or success, 2 fail, 3 inconclusive, 1 usage or config
error, 4 numerical-accuracy error.  Errors are reported as JSON on standard
error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from .coefficients import StateCoefficient
from .conditions import (
    DEFAULT_GRIDS,
    ProbeGrids,
    check_cor15,
    check_cor17,
    check_decomposable_pair,
    check_growth_timechange,
    check_perpetual,
    check_stable_dominated,
    check_thm13,
)
from .continuity import continuity_json, continuity_probe
from .errors import (
    AccuracyError,
    CensoredError,
    ForgeError,
    SimulationBudgetError,
)
from .levy import ExponentSpec
from .paths import MCConfig
from .reports import FAIL, INCONCLUSIVE, PASS
from .rng import RngStream
from .sampling import sample_increments, write_samples_csv
from .sde import euler_maruyama
from .symbols import CutoffSpec, StateCharacteristics, StateSymbol
from .timechange import simulate_timechanged
from .verify import (
    cross_validate_weak,
    empirical_cf,
    maximal_inequality_probe,
    martingale_residual,
    moment_scaling_probe,
    perpetual_integral_mc,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_ACCURACY = 0, 1, 2, 3, 4
_VERDICT_EXIT = {PASS: EXIT_OK, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    """Bad command line or configuration."""


class ReplayMismatch(Exception):
    """A replayed run did not reproduce the stored report."""


# ---------------------------------------------------------------------------
# option types
# ---------------------------------------------------------------------------

def _float(v):
    if isinstance(v, bool):
        raise UsageError(f"expected a number, got {v!r}")
    return float(v)


def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise UsageError(f"expected an integer, got {v!r}")
    return int(float(v)) if isinstance(v, str) else int(v)


def _str(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return repr(v)
    if not isinstance(v, str):
        raise UsageError(f"expected a string, got {v!r}")
    return v


def _bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "1", "yes", "false", "0", "no"):
        return v.lower() in ("true", "1", "yes")
    raise UsageError(f"expected a boolean, got {v!r}")


def _floats(v):
    if isinstance(v, str):
        v = [p for p in v.replace(" ", "").split(",") if p]
    if not isinstance(v, (list, tuple)):
        raise UsageError(f"expected a list of numbers, got {v!r}")
    return [_float(x) for x in v]


def _json(v):
    if isinstance(v, str):
        try:
            return _loads(v)
        except ValueError:
            # bare coefficient expressions stay strings
            return v
    return v


def _coef(v):
    if isinstance(v, str):
        return _json(v)
    return v


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValueError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _loads(text: str):
    return json.loads(text, parse_constant=_reject_constant, object_pairs_hook=_no_duplicates)


# ---------------------------------------------------------------------------
# command option tables: dest -> (type, default, help)
# ---------------------------------------------------------------------------

_MC = {
    "n": (_int, 10_000, "number of paths"),
    "t": (_float, 1.0, "time horizon"),
    "dt": (_float, None, "simulation step (default horizon*2^-10, 2^-12 for alpha<1)"),
    "x0": (_float, 0.0, "initial state"),
    "escape_radius": (_float, 1e8, "explosion threshold"),
}

OPTIONS = {
    "sample": {
        "family": (_str, "stable", "exponent family"),
        "alpha": (_float, 1.5, "stability index"),
        "m": (_float, None, "mass / truncation parameter"),
        "lam": (_float, None, "homographic parameter"),
        "dim": (_int, 1, "dimension"),
        "t": (_float, 1.0, "time"),
        "n": (_int, 100_000, "number of samples"),
        "xi": (_floats, None, "CF grid (default: 21-point comparison grid)"),
    },
    "simulate-sde": {
        "sigma": (_coef, "1", "coefficient sigma(x)"),
        "alpha": (_float, 1.5, "driver index"),
        "record": (_floats, None, "record times"),
        "store_paths": (_bool, False, "write full skeletons"),
        **_MC,
    },
    "time-change": {
        "phi": (_coef, "1", "time-change coefficient phi(x)"),
        "alpha": (_float, 1.5, "driver index"),
        "record": (_floats, None, "record times"),
        **_MC,
    },
    "check": {
        "condition": (_str, None, "time-eq5 | time-eq6 | thm13 | cor15 | cor17 | cor19 | app5 "
                                  "| appen1.iii"),
        "phi": (_coef, "1", "coefficient phi(x)"),
        "alpha": (_float, None, "shortcut for a stable exponent"),
        "exponent": (_json, None, "exponent spec, e.g. {\"family\": \"stable\", \"alpha\": 1.5}"),
        "chars": (_json, None, "state characteristics, e.g. {\"kind\": \"stable_like\", "
                               "\"alpha\": \"1.2+0.4*sin(x)\"}"),
        "f": (_coef, None, "weight f(x) (time-eq6)"),
        "phi2": (_coef, None, "second coefficient (app5)"),
        "exponent2": (_json, None, "second exponent (app5)"),
        "beta": (_float, None, "dominating index (cor19)"),
        "cutoff": (_json, None, "cutoff spec (thm13)"),
        "box": (_floats, None, "compact box lo,hi[,lo2,hi2] (appen1.iii)"),
        "grids": (_json, None, "probe grid overrides"),
        "dim": (_int, 1, "dimension"),
    },
    "cross-validate": {
        "sigma": (_coef, "1", "coefficient sigma(x)"),
        "alpha": (_float, 1.5, "driver index"),
        **{**_MC, "n": (_int, 100_000, "paths per method")},
    },
    "perpetual": {
        "alpha": (_float, 1.5, "driver index"),
        "exponent": (_json, None, "driver exponent spec (overrides alpha)"),
        "f": (_coef, "1/(1+abs(x)^1.5)", "integrand f(x)"),
        "horizons": (_floats, [10.0, 100.0, 1000.0], "increasing horizons"),
        "n": (_int, 1000, "number of paths"),
        "x0": (_float, 0.0, "initial state"),
        "dt": (_float, None, "simulation step"),
    },
    "probe": {
        "kind": (_str, None, "maximal-inequality | moment-scaling | martingale | continuity"),
        "sigma": (_coef, "1", "coefficient sigma(x)"),
        "alpha": (_float, 1.5, "driver index"),
        "kappa": (_float, 1.0, "moment order (moment-scaling)"),
        "r_grid": (_floats, list(np.geomspace(1, 100, 9)), "radii (maximal-inequality)"),
        "t_grid": (_floats, None, "times in (0, 1]"),
        "f": (_coef, "exp(-x^2)", "test function (martingale)"),
        "chars": (_json, None, "state characteristics (continuity)"),
        "exponent": (_json, None, "exponent spec (continuity)"),
        "box": (_floats, [-1.0, 1.0], "compact box (continuity)"),
        "grids": (_json, None, "probe grid overrides (continuity)"),
        **_MC,
    },
    "report": {
        "inputs": (lambda v: [_str(x) for x in (v if isinstance(v, list) else [v])], [],
                   "JSON reports to merge"),
    },
}

PROBE_KINDS = ("maximal-inequality", "moment-scaling", "martingale", "continuity")
CONDITIONS = ("time-eq5", "time-eq6", "thm13", "cor15", "cor17", "cor19", "app5", "appen1.iii")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="forge", description="Feller-process simulation and verification toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON object with option values")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--replay", help="stored report to re-run and compare")
        for dest, (_, _, hlp) in opts.items():
            if cmd == "probe" and dest == "kind":
                sp.add_argument("kind", nargs="?", choices=PROBE_KINDS, default=None, help=hlp)
            elif cmd == "report" and dest == "inputs":
                sp.add_argument("inputs", nargs="*", default=None, help=hlp)
            elif opts[dest][0] is _bool:
                sp.add_argument("--" + dest.replace("_", "-"), dest=dest, action="store_const",
                                const=True, default=None, help=hlp)
            else:
                sp.add_argument("--" + dest.replace("_", "-"), dest=dest, default=None, help=hlp)
    return p


def _read_json(path):
    try:
        with open(path) as fh:
            return _loads(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None


def resolve_options(cmd: str, args: argparse.Namespace) -> dict:
    """Defaults, then config values, then explicit flags; all type-checked."""
    table = OPTIONS[cmd]
    merged = {k: v[1] for k, v in table.items()}
    merged["seed"] = 0
    if args.config:
        cfg = _read_json(args.config)
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        allowed = set(table) | {"seed", "threads"}
        unknown = sorted(k for k in cfg if k.replace("-", "_") not in allowed)
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {unknown}")
        merged.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for k in list(table) + ["seed", "threads"]:
        v = getattr(args, k, None)
        if v is not None and not (k == "inputs" and v == []):
            merged[k] = v
    out = {}
    for k, v in merged.items():
        if v is None or k not in table:
            out[k] = v
            continue
        try:
            out[k] = table[k][0](v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"option {k}: {exc}") from None
    out["seed"] = _int(out["seed"])
    if out.get("threads") is not None:
        out["threads"] = _int(out["threads"])
    return out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _coefficient(spec, dim: int = 1) -> StateCoefficient:
    return StateCoefficient.from_spec(spec, dim)


def _exponent(o, key="exponent", dim=1) -> Optional[ExponentSpec]:
    spec = o.get(key)
    if spec is None:
        if o.get("alpha") is None or key != "exponent":
            return None
        return ExponentSpec.isotropic_stable(o["alpha"], dim)
    if not isinstance(spec, dict):
        raise UsageError(f"{key} must be a JSON object")
    spec = dict(spec)
    spec.setdefault("dim", dim)
    return ExponentSpec.from_dict(spec)


def _characteristics(spec, dim=1) -> StateCharacteristics:
    if not isinstance(spec, dict) or spec.get("kind") != "stable_like":
        raise UsageError('chars must be {"kind": "stable_like", "alpha": <coefficient>}')
    extra = set(spec) - {"kind", "alpha"}
    if extra:
        raise UsageError(f"unknown chars keys: {sorted(extra)}")
    return StateCharacteristics.stable_like(_coefficient(spec["alpha"], dim), dim)


def _grids(spec) -> ProbeGrids:
    if spec is None:
        return DEFAULT_GRIDS
    if not isinstance(spec, dict):
        raise UsageError("grids must be a JSON object")
    fields = set(ProbeGrids.__dataclass_fields__)
    unknown = set(spec) - fields
    if unknown:
        raise UsageError(f"unknown grid keys: {sorted(unknown)}")
    return ProbeGrids(**{k: tuple(v) if isinstance(v, list) else v for k, v in spec.items()})


def _mc(o, horizon=None) -> MCConfig:
    return MCConfig(n_paths=o["n"], horizon=o["t"] if horizon is None else horizon, dt=o.get("dt"),
                    seed=o["seed"], escape_radius=o.get("escape_radius", 1e8),
                    threads=o.get("threads"), store_paths=bool(o.get("store_paths", False)))


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _summary(ens) -> dict:
    x = ens.at()
    live = x[np.isfinite(x)] if x.ndim == 1 else x[np.all(np.isfinite(x), axis=1)]
    return {
        **ens.counts(),
        "mean": float(np.mean(live)) if live.size else math.nan,
        "median": float(np.median(live)) if live.size else math.nan,
    }


# ---------------------------------------------------------------------------
# commands: each returns (report dict, verdict or None)
# ---------------------------------------------------------------------------

def cmd_sample(o, out):
    spec = ExponentSpec(o["family"], dim=o["dim"], alpha=o["alpha"], m=o["m"], lam=o["lam"])
    if spec.family not in ("isotropic_stable", "relativistic_stable", "truncated_stable"):
        spec = ExponentSpec(o["family"], dim=o["dim"], m=o["m"], lam=o["lam"])
    x = sample_increments(spec, o["t"], o["n"], RngStream(o["seed"]), o.get("threads"))
    write_samples_csv(_out_path(out, "samples.csv"), x)
    metrics = {"n": int(len(x)), "mean": np.mean(x, axis=0).tolist(),
               "variance": np.var(x, axis=0, ddof=1).tolist(),
               "median": np.median(x, axis=0).tolist()}
    if spec.dim == 1:
        cf = empirical_cf(x, o["xi"]) if o["xi"] else empirical_cf(x)
        cf.to_csv(_out_path(out, "cf.csv"))
    return {"id": "sample", "metrics": metrics, "exponent": spec.to_dict()}, None


def cmd_simulate_sde(o, out):
    driver = ExponentSpec.isotropic_stable(o["alpha"])
    ens = euler_maruyama(_coefficient(o["sigma"]), driver, o["x0"], _mc(o), record_times=o["record"])
    ens.to_csv(_out_path(out, "ensemble.csv"))
    return {"id": "simulate-sde", "metrics": _summary(ens), "meta": ens.meta}, None


def cmd_time_change(o, out):
    driver = ExponentSpec.isotropic_stable(o["alpha"])
    ens = simulate_timechanged(driver, _coefficient(o["phi"]), o["x0"], o["t"], _mc(o),
                               record_times=o["record"])
    ens.to_csv(_out_path(out, "ensemble.csv"))
    with open(_out_path(out, "clock.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "t", "alpha_t"])
        for i in range(ens.n_paths):
            for j, t in enumerate(ens.record_times):
                w.writerow([i, repr(float(t)), repr(float(ens.clock[i, j]))])
    return {"id": "time-change", "metrics": _summary(ens), "meta": ens.meta}, None


def cmd_check(o, out):
    cond = o["condition"]
    if cond not in CONDITIONS:
        raise UsageError(f"--condition must be one of {list(CONDITIONS)}")
    d = o["dim"]
    grids = _grids(o["grids"])
    phi = _coefficient(o["phi"], d)
    chars = _characteristics(o["chars"], d) if o["chars"] is not None else None
    expo = _exponent(o, dim=d)
    base = chars if chars is not None else expo

    def need(x, what):
        if x is None:
            raise UsageError(f"{cond} needs {what}")
        return x

    if cond == "time-eq5":
        rep = check_growth_timechange(phi, need(base, "an exponent or chars"), grids)
    elif cond == "time-eq6":
        rep = check_perpetual(_coefficient(need(o["f"], "f"), d), need(expo, "an exponent"), grids)
    elif cond == "thm13":
        cutoff = CutoffSpec.from_dict(o["cutoff"]) if o["cutoff"] else CutoffSpec()
        rep = check_thm13(phi, need(base, "an exponent or chars"), cutoff, grids)
    elif cond == "cor15":
        rep = check_cor15(phi, need(expo, "an exponent"), grids)
    elif cond == "cor17":
        rep = check_cor17(phi, need(expo, "an exponent"), grids)
    elif cond == "cor19":
        rep = check_stable_dominated(phi, need(base, "chars"), o["beta"], grids)
    elif cond == "app5":
        expo2 = need(_exponent(o, "exponent2", d), "exponent2")
        rep = check_decomposable_pair(phi, need(expo, "an exponent"),
                                      _coefficient(need(o["phi2"], "phi2"), d), expo2, grids)
    else:
        return _continuity(o, d, grids, base)
    data = rep.to_dict()
    data["id"] = rep.condition_id
    return data, rep.verdict


def _continuity(o, d, grids, base):
    if base is None:
        raise UsageError("continuity needs an exponent or chars")
    box = o["box"]
    if len(box) != 2 * d:
        raise UsageError(f"box needs {2 * d} numbers")
    rep = continuity_probe(base, box, grids)
    data = continuity_json(rep)
    data["id"] = rep.condition_id
    return data, rep.verdict


def cmd_cross_validate(o, out):
    rep = cross_validate_weak(_coefficient(o["sigma"]), o["alpha"], o["x0"], o["t"], _mc(o))
    return rep.to_dict(), rep.verdict


def cmd_perpetual(o, out):
    driver = _exponent(o) or ExponentSpec.isotropic_stable(o["alpha"])
    mc = MCConfig(n_paths=o["n"], horizon=max(o["horizons"]), dt=o["dt"], seed=o["seed"],
                  threads=o.get("threads"))
    rep = perpetual_integral_mc(driver, _coefficient(o["f"], driver.dim), o["horizons"], mc,
                                o["x0"])
    return rep.to_dict(), rep.verdict


def cmd_probe(o, out):
    kind = o["kind"]
    if kind not in PROBE_KINDS:
        raise UsageError(f"probe kind must be one of {list(PROBE_KINDS)}")
    if kind == "continuity":
        chars = _characteristics(o["chars"]) if o["chars"] is not None else None
        base = chars if chars is not None else _exponent(o)
        return _continuity(o, 1, _grids(o["grids"]), base)
    sigma = _coefficient(o["sigma"])
    driver = ExponentSpec.isotropic_stable(o["alpha"])
    if kind == "moment-scaling":
        rep = moment_scaling_probe(sigma, o["alpha"], o["kappa"], o["t_grid"], o["x0"], _mc(o))
        return rep.to_dict(), rep.verdict
    sym = StateSymbol(StateCoefficient.power_of(sigma, o["alpha"]), driver)
    if kind == "maximal-inequality":
        ens = euler_maruyama(sigma, driver, o["x0"], _mc(o))
        rep = maximal_inequality_probe(ens, o["x0"], o["t"], o["r_grid"], sym)
    else:
        t_grid = o["t_grid"] or [o["t"] / 4, o["t"] / 2, o["t"]]
        ens = euler_maruyama(sigma, driver, o["x0"], _mc(o))
        f = _coefficient(o["f"])
        rep = martingale_residual(ens, f, sym, t_grid)
    return rep.to_dict(), rep.verdict


def cmd_report(o, out):
    if not o["inputs"]:
        raise UsageError("report needs at least one input JSON file")
    rows = []
    for path in o["inputs"]:
        data = _read_json(path)
        if not isinstance(data, dict) or "id" not in data:
            raise UsageError(f"{path} is not a forge report")
        rows.append({
            "file": os.path.basename(path),
            "id": data.get("id", data.get("condition_id", "")),
            "verdict": data.get("verdict", "n/a"),
            "seed": data.get("seed", ""),
            "config_hash": data.get("config_hash", ""),
        })
    target = _out_path(out, "summary.csv")
    with open(target, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["file", "id", "verdict", "seed", "config_hash"],
                           quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        w.writerows(rows)
    counts = {v: sum(r["verdict"] == v for r in rows) for v in (PASS, FAIL, INCONCLUSIVE)}
    return {"id": "report", "metrics": counts, "rows": rows}, None


COMMANDS: dict = {
    "sample": cmd_sample,
    "simulate-sde": cmd_simulate_sde,
    "time-change": cmd_time_change,
    "check": cmd_check,
    "cross-validate": cmd_cross_validate,
    "perpetual": cmd_perpetual,
    "probe": cmd_probe,
    "report": cmd_report,
}


def _report_name(cmd, o) -> str:
    if cmd == "check":
        return f"check-{o['condition']}.json"
    if cmd == "probe":
        return f"probe-{o['kind']}.json"
    return f"{cmd}.json"


def _comparable(data: dict) -> dict:
    return {k: v for k, v in data.items() if k not in ("cli",)}


def execute(cmd: str, options: dict, out: str):
    """Run one command with resolved options; returns ``(report dict, verdict)``."""
    data, verdict = COMMANDS[cmd](options, out)
    stored = {k: v for k, v in options.items() if k != "threads"}
    data["cli"] = {"command": cmd, "options": stored}
    data = json.loads(json.dumps(data, default=_default))
    return data, verdict


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _finite_json(data):
    """Strict JSON: non-finite numbers become strings."""
    if isinstance(data, dict):
        return {k: _finite_json(v) for k, v in data.items()}
    if isinstance(data, list):
        return [_finite_json(v) for v in data]
    if isinstance(data, float) and not math.isfinite(data):
        return "nan" if math.isnan(data) else ("inf" if data > 0 else "-inf")
    return data


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run_command(argv=None) -> int:
    """Parse ``argv``, run the command, write outputs; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command; choose one of " + ", ".join(OPTIONS))
        cmd = args.command
        stored = None
        if args.replay:
            stored = _read_json(args.replay)
            cli = stored.get("cli") if isinstance(stored, dict) else None
            if not cli or cli.get("command") != cmd:
                raise UsageError(f"{args.replay} is not a {cmd} report")
            options = dict(cli["options"])
            if args.threads is not None:
                options["threads"] = args.threads
        else:
            options = resolve_options(cmd, args)
        data, verdict = execute(cmd, options, args.out)
        data = _finite_json(data)
        if stored is not None and _comparable(_finite_json(stored)) != _comparable(data):
            raise ReplayMismatch(f"replay of {args.replay} did not reproduce the stored report")
        with open(_out_path(args.out, _report_name(cmd, options)), "w") as fh:
            json.dump(data, fh, indent=2, allow_nan=False)
        sys.stdout.write(json.dumps(data, allow_nan=False) + "\n")
        return EXIT_OK if verdict is None else _VERDICT_EXIT[verdict]
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except (AccuracyError, SimulationBudgetError, CensoredError, ReplayMismatch) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_ACCURACY)
    except (ForgeError, ValueError, KeyError, TypeError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_USAGE)


def main(argv=None) -> int:
    code = run_command(argv)
    if argv is None:
        sys.exit(code)
    return code


__all__ = ["run_command", "main", "build_parser", "resolve_options", "execute", "OPTIONS",
           "COMMANDS", "CONDITIONS", "PROBE_KINDS"]
