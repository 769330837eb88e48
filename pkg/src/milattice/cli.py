"""Command-line front end.

Usage::

    milattice COMMAND --config run.json [--set params.gamma=0.001] [--out DIR] [--jobs N]

The configuration is JSON.  ``params`` holds the model (``gamma``,
``lambda``, ``omega`` or ``omega2``, ``p`` and the forcing ``h``); numeric
fields also accept short arithmetic strings such as ``"12/(37*sqrt(2))"``
and ``p`` accepts multiples of pi such as ``"pi/4"``.  Forcings are given as
``{"const": 0.25, "cos": {"1": 0.5}, "sin": {"2": 1.0}}`` or in the serialized
``{"K_max": K, "coeffs": [[re, im], ...]}`` form.

Results go to standard output (or to files under ``--out``), diagnostics to
standard error.  Exit status is 0 on success, 2 for an invalid
configuration and 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import ast
import copy
import io
import json
import math
import operator
import os
import sys

import numpy as np

from . import asymptotics, existence, floquet, galerkin, model
from .errors import ConfigError, MILatticeError
from .model import ModelParams, parse_pi_multiple
from .series import TrigSeries

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

COMMANDS = ("resonances", "theta", "certify", "solve-contraction", "asymptotics", "solve",
            "continue", "floquet", "simulate")

DEFAULTS = {
    "solver": {"J": 64, "tol": 1e-11, "max_iter": 50},
    "contraction": {"tol": 1e-13, "force": False},
    "asymptotics": {"k0": None, "forcing_order": 1, "sign_eps": 1, "eps": None, "branch": 0},
    "continuation": {"h_shape": None, "h0_start": 0.0, "h0_end": 0.05, "h0_bounds": None,
                     "ds0": 1e-3, "ds_max": 0.02, "max_points": 5000, "validate": True},
    "floquet": {"N": 200, "steps_per_period": 2000, "tol_margin": 1e-6},
    "simulate": {"N": 200, "periods": 10.0, "steps_per_period": 2000, "stride": 100,
                 "ceiling": 1e6, "initial": "wave", "perturbation": 0.0, "seed": 0,
                 "snapshot_stride": 0},
}


# -- float formatting -----------------------------------------------------------

def fmt(x: float) -> str:
    return f"{x:.17g}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else json.dumps(str(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- config parsing ---------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin}


def number(value, path: str) -> float:
    """A float from a JSON number or a short arithmetic expression."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(path, "expected a number")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError("unsupported expression")

    try:
        return float(ev(ast.parse(value, mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(path, f"cannot evaluate {value!r}: {exc}") from None


def parse_series(data, path: str) -> TrigSeries:
    if data is None:
        return TrigSeries.zeros()
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    try:
        if "coeffs" in data:
            return TrigSeries.from_json(data)
        cos = {int(k): number(v, f"{path}.cos.{k}") for k, v in (data.get("cos") or {}).items()}
        sin = {int(k): number(v, f"{path}.sin.{k}") for k, v in (data.get("sin") or {}).items()}
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    bad = set(data) - {"const", "cos", "sin"}
    if bad:
        raise ConfigError(f"{path}.{sorted(bad)[0]}", "unknown key")
    if any(k <= 0 for k in list(cos) + list(sin)):
        raise ConfigError(path, "cos/sin mode indices must be >= 1")
    const = number(data.get("const", 0.0), f"{path}.const")
    return TrigSeries.from_cos_sin(const, cos, sin)


def parse_params(data) -> ModelParams:
    if not isinstance(data, dict):
        raise ConfigError("params", "missing or not an object")
    for key in ("lambda", "p"):
        if key not in data:
            raise ConfigError(f"params.{key}", "required")
    if "omega" in data:
        omega = number(data["omega"], "params.omega")
    elif "omega2" in data:
        w2 = number(data["omega2"], "params.omega2")
        if not w2 > 0:
            raise ConfigError("params.omega2", "must be > 0")
        omega = math.sqrt(w2)
    else:
        raise ConfigError("params.omega", "required")
    gamma = number(data.get("gamma", 0.0), "params.gamma")
    lam = number(data["lambda"], "params.lambda")
    h = parse_series(data.get("h"), "params.h")
    p_raw = data["p"]
    frac = None
    p = 1.0
    if isinstance(p_raw, str) and "pi" in p_raw.lower():
        try:
            frac = parse_pi_multiple(p_raw)
        except (ValueError, ZeroDivisionError):
            frac = None
        if frac is None:
            p = number(p_raw, "params.p")
    else:
        p = number(p_raw, "params.p")
    try:
        return ModelParams(gamma, lam, omega, p, h, frac)
    except ValueError as exc:
        field_, _, msg = str(exc).partition(":")
        raise ConfigError(f"params.{field_.strip()}", msg.strip() or str(exc)) from None


def set_override(cfg: dict, assignment: str) -> None:
    """Apply ``a.b.c=value``; the value is parsed as JSON when possible."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(assignment, "expected key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(".".join(parts[:i + 1]), "not an object")
        node = nxt
    node[parts[-1]] = value


def load_config(path: str | None, overrides=()) -> dict:
    cfg: dict = {}
    if path:
        try:
            with open(path) as f:
                cfg = json.load(f)
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("--config", "top level must be an object")
    for a in overrides:
        set_override(cfg, a)
    unknown = set(cfg) - set(DEFAULTS) - {"params"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown block")
    for block, defaults in DEFAULTS.items():
        given = cfg.get(block) or {}
        if not isinstance(given, dict):
            raise ConfigError(block, "expected an object")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(f"{block}.{sorted(unknown)[0]}", "unknown key")
        merged = copy.deepcopy(defaults)
        merged.update(given)
        cfg[block] = merged
    return cfg


def _int(cfg, block, key, lo=None) -> int:
    v = cfg[block][key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{block}.{key}", "expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{block}.{key}", f"must be >= {lo}")
    return int(v)


def _pos(cfg, block, key) -> float:
    v = number(cfg[block][key], f"{block}.{key}")
    if not v > 0:
        raise ConfigError(f"{block}.{key}", "must be > 0")
    return v


# -- commands -------------------------------------------------------------------------

def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _asymptotic_guess(params: ModelParams, cfg) -> tuple[ModelParams, TrigSeries]:
    a = cfg["asymptotics"]
    eps = number(a["eps"], "asymptotics.eps")
    order = _int(cfg, "asymptotics", "forcing_order", 1)
    pred = asymptotics.predict(params, a["k0"], order, a["sign_eps"])
    branches = [pred] + list(pred.companions)
    b = _int(cfg, "asymptotics", "branch", 0)
    if b >= len(branches):
        raise ConfigError("asymptotics.branch", f"only {len(branches)} branches predicted")
    log(f"asymptotic guess: regime {branches[b].regime}, eps={eps:g}")
    return asymptotics.scaled_problem(params, eps, order), branches[b].profile(eps)


def solve_wave(params: ModelParams, cfg) -> tuple[ModelParams, galerkin.GalerkinSolution]:
    J = _int(cfg, "solver", "J", 2)
    tol = _pos(cfg, "solver", "tol")
    guess = None
    if cfg["asymptotics"]["eps"] is not None:
        params, guess = _asymptotic_guess(params, cfg)
    sol = galerkin.newton_solve(params, guess, J=J, tol=tol,
                                max_iter=_int(cfg, "solver", "max_iter", 1))
    log(f"newton: {sol.iterations} iterations, residual {sol.residual_norm:.3e}")
    return params, sol


def cmd_resonances(params, cfg, args):
    return {"resonances.json": model.resonance_scan(params).to_dict()}


def cmd_theta(params, cfg, args):
    return {"theta.json": model.theta(params).to_dict()}


def cmd_certify(params, cfg, args):
    return {"certificate.json": existence.certify(params).to_dict()}


def cmd_solve_contraction(params, cfg, args):
    c = cfg["contraction"]
    res = existence.solve_contraction(params, tol=_pos(cfg, "contraction", "tol"),
                                      force=bool(c["force"]))
    log(f"contraction: {res.iterations} iterations, observed rate {res.observed_rate:.4f}")
    return {"contraction.json": {"iterations": res.iterations, "residual": res.residual,
                                 "observed_rate": res.observed_rate,
                                 "max_iterate_norm": res.max_iterate_norm, "K_work": res.K_work,
                                 "certificate": res.certificate.to_dict(),
                                 "series": res.U.to_dict()}}


def cmd_asymptotics(params, cfg, args):
    a = cfg["asymptotics"]
    eps = None if a["eps"] is None else number(a["eps"], "asymptotics.eps")
    pred = asymptotics.predict(params, a["k0"], _int(cfg, "asymptotics", "forcing_order", 1),
                               a["sign_eps"])
    return {"asymptotics.json": pred.to_dict(eps)}


def cmd_solve(params, cfg, args):
    _, sol = solve_wave(params, cfg)
    return {"solution.json": sol.to_dict()}


def cmd_continue(params, cfg, args):
    c = cfg["continuation"]
    shape = parse_series(c["h_shape"], "continuation.h_shape") if c["h_shape"] else params.h
    if shape.highest_mode() == 0 and abs(shape.coeff(0)) == 0:
        raise ConfigError("continuation.h_shape", "forcing shape is zero")
    h0a = number(c["h0_start"], "continuation.h0_start")
    h0b = number(c["h0_end"], "continuation.h0_end")
    bounds = c["h0_bounds"]
    if bounds is not None:
        if not isinstance(bounds, list) or len(bounds) != 2:
            raise ConfigError("continuation.h0_bounds", "expected [lo, hi]")
        bounds = (number(bounds[0], "continuation.h0_bounds[0]"),
                  number(bounds[1], "continuation.h0_bounds[1]"))
    curve = galerkin.continue_in_h0(
        params, shape, (h0a, h0b), J=_int(cfg, "solver", "J", 2), tol=_pos(cfg, "solver", "tol"),
        ds0=_pos(cfg, "continuation", "ds0"), ds_max=_pos(cfg, "continuation", "ds_max"),
        max_points=_int(cfg, "continuation", "max_points", 2),
        validate=bool(c["validate"]), h0_bounds=bounds)
    log(f"continuation: {len(curve.points)} points, {curve.n_folds} folds, stop: {curve.stop_reason}")
    for f in curve.folds:
        log(f"  fold at h0={f.h0:.10g}, A={f.amplitude:.10g}")
    buf = io.StringIO()
    curve.to_csv(buf)
    return {"continuation.csv": buf.getvalue()}


def _check_ring(params, N, path):
    if not floquet.ring_compatible(params, N):
        raise ConfigError(path, f"p*N must be a multiple of 2*pi (N={N})")


def cmd_floquet(params, cfg, args):
    N = _int(cfg, "floquet", "N", 2)
    spp = _int(cfg, "floquet", "steps_per_period", 1)
    params, sol = solve_wave(params, cfg)
    if sol.series.highest_mode() > 0:
        _check_ring(params, N, "floquet.N")
    res = floquet.monodromy(params, sol, N, spp, jobs=args.jobs,
                            tol_margin=_pos(cfg, "floquet", "tol_margin"), keep_matrix=False)
    log(f"floquet: {res.classification}, max |mu| = {res.max_modulus:.10g}")
    buf = io.StringIO()
    buf.write("modulus,phase\n")
    for m, ph in res.csv_rows():
        buf.write(f"{fmt(m)},{fmt(ph)}\n")
    return {"multipliers.json": res.to_dict(), "multipliers.csv": buf.getvalue()}


def cmd_simulate(params, cfg, args):
    s = cfg["simulate"]
    N = _int(cfg, "simulate", "N", 2)
    spp = _int(cfg, "simulate", "steps_per_period", 1)
    stride = _int(cfg, "simulate", "stride", 1)
    params, sol = solve_wave(params, cfg)
    if s["initial"] == "wave":
        if sol.series.highest_mode() > 0:
            _check_ring(params, N, "simulate.N")
        state = floquet.wave_state(params, sol, N)
    elif s["initial"] == "zero":
        state = floquet.LatticeState.zeros(N)
    else:
        raise ConfigError("simulate.initial", "expected 'wave' or 'zero'")
    amp = number(s["perturbation"], "simulate.perturbation")
    if amp:
        rng = np.random.default_rng(_int(cfg, "simulate", "seed"))
        state = floquet.LatticeState(state.u + amp * rng.standard_normal(N), state.v, state.t)
    T = 2 * math.pi / params.omega
    dt = T / spp
    res = floquet.simulate(params, state, _pos(cfg, "simulate", "periods") * T, dt, reference=sol,
                           stride=stride, ceiling=_pos(cfg, "simulate", "ceiling"),
                           snapshot_stride=_int(cfg, "simulate", "snapshot_stride", 0) or stride)
    log(f"simulate: blow_up={res.blow_up}, growth={res.growth}")
    buf = io.StringIO()
    res.snapshots_csv(buf)
    return {"simulation.json": res.summary(), "trajectory.csv": buf.getvalue()}


HANDLERS = {
    "resonances": cmd_resonances, "theta": cmd_theta, "certify": cmd_certify,
    "solve-contraction": cmd_solve_contraction, "asymptotics": cmd_asymptotics,
    "solve": cmd_solve, "continue": cmd_continue, "floquet": cmd_floquet,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="milattice",
                                 description="Travelling waves of the magneto-inductive lattice")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="directory for output files (default: standard output)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for monodromy columns")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration field, e.g. params.gamma=0.001")
    return ap


def emit(outputs: dict, out_dir: str | None) -> None:
    for name, data in outputs.items():
        text = dumps(data) + "\n" if not isinstance(data, str) else data
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, name), "w", newline="") as f:
                f.write(text)
            log(f"wrote {os.path.join(out_dir, name)}")
        else:
            sys.stdout.write(text)


def run(command: str, cfg: dict, args) -> dict:
    params = parse_params(cfg.get("params"))
    return HANDLERS[command](params, cfg, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        cfg = load_config(args.config, args.set)
        outputs = run(args.command, cfg, args)
    except ConfigError as exc:
        log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except MILatticeError as exc:
        log(f"solver failure ({type(exc).__name__}): {exc}")
        return EXIT_SOLVER
    except ValueError as exc:
        log(f"invalid input: {exc}")
        return EXIT_CONFIG
    emit(outputs, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
