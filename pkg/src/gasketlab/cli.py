"""Command-line interface: ``gasketlab <command> [options]``.

Every command prints a JSON summary on standard output.  Errors are printed
as JSON ``{"code", "message"}`` on standard error; the exit status is 0 on
success, 1 for domain errors and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .approx import best_chebyshev, best_one_sided_below, fractal_basis
from .config import ConfigError, load_config, merge
from .constraints import admissible_intervals, choose_alpha, compute_extrema
from .dimension import dimension_bounds, estimate_dimension, holder_data
from .energy import (
    energy_sequence,
    graph_energy,
    harmonic_extend,
    multiharmonic_basis,
    pointwise_laplacian,
    solve_poisson,
)
from .errors import GasketError, InfeasibleError
from .expr import FIGURE_B, FIGURE_F, constant, parse
from .fractal import (
    FractalSystem,
    ScalingFamily,
    construct,
    error_bound,
    parse_alpha_table,
    round_up_level,
)
from .gasket import SGFunction, build_level_graph, sample
from .io import json_text, write_csv, write_json, write_surface

DEFAULTS = {
    "f_expr": None,
    "b_expr": None,
    "const": None,
    "alpha": None,
    "alpha_expr": None,
    "alpha_table": None,
    "N": 1,
    "level": 6,
    "out": None,
    "z_scale": 1.0,
    "threads": 1,
    "seed": 0,
    "boundary": "1,0,0",
    "max_m": 8,
    "K": None,
    "solve": False,
    "Mtilde": None,
    "report": None,
    "pick": "midpoint",
    "mode": "chebyshev",
    "k": 1,
    "m": 6,
    "n_min": 3,
    "n_max": 8,
    "q": 3,
    "csv": None,
    "out_dir": "reproduce_out",
}


class UsageError(GasketError, ValueError):
    code = "usage"
    exit_status = 2


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _nonneg_int(s) -> int:
    try:
        v = int(s)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _pos_int(s) -> int:
    v = _nonneg_int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


CASTS = {
    "N": _pos_int,
    "level": _nonneg_int,
    "z_scale": float,
    "threads": _pos_int,
    "seed": int,
    "max_m": _nonneg_int,
    "K": float,
    "solve": _bool,
    "Mtilde": float,
    "k": _nonneg_int,
    "m": _nonneg_int,
    "n_min": _nonneg_int,
    "n_max": _nonneg_int,
    "q": _nonneg_int,
    "const": float,
    "alpha": float,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"code": "usage", "message": message}, sort_keys=True) + "\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--out", help="output file ('-' for stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=_pos_int, help="worker cap (kernels are single-threaded)")
    common.add_argument("--z-scale", dest="z_scale", type=float)

    fn = argparse.ArgumentParser(add_help=False)
    fn.add_argument("--f-expr", dest="f_expr")
    fn.add_argument("--const", type=float, help="use the constant function")
    fn.add_argument("--b-expr", dest="b_expr")
    fn.add_argument("--alpha", type=float)
    fn.add_argument("--alpha-expr", dest="alpha_expr")
    fn.add_argument("--alpha-table", dest="alpha_table")
    fn.add_argument("--N", type=_pos_int)
    fn.add_argument("--level", type=_nonneg_int)

    p = _Parser(prog="gasketlab", description="Fractal functions on the Sierpinski gasket.")
    p.add_argument("--version", action="version", version=f"gasketlab {__version__} ({kernels.BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("mesh", parents=[common, fn], help="export V_m with optional values")
    s = sub.add_parser("harmonic", parents=[common, fn], help="harmonic extension of boundary values")
    s.add_argument("--boundary", help="three comma-separated values")
    s = sub.add_parser("energy", parents=[common, fn], help="graph energies E_0..E_m")
    s.add_argument("--max-m", dest="max_m", type=_nonneg_int)
    s.add_argument("--K", type=float, help="lower Hoelder constant for the envelope")
    s = sub.add_parser("laplacian", parents=[common, fn], help="pointwise Laplacian or Poisson solve")
    s.add_argument("--solve", action="store_const", const=True, help="solve Delta u = f with u = 0 on V_0")
    sub.add_parser("fractal", parents=[common, fn], help="construct f^alpha")
    s = sub.add_parser("constrain", parents=[common, fn], help="range-preserving scaling intervals")
    s.add_argument("--Mtilde", type=float)
    s.add_argument("--report", help="CSV of word,lo,hi,feasible")
    s.add_argument("--pick", choices=["midpoint", "lo", "hi"])
    s = sub.add_parser("approx", parents=[common, fn], help="best Chebyshev or one-sided approximation")
    s.add_argument("--mode", choices=["chebyshev", "onesided"])
    s.add_argument("--k", type=_nonneg_int)
    s.add_argument("--m", type=_nonneg_int)
    s = sub.add_parser("dimension", parents=[common, fn], help="box-counting dimension estimate")
    s.add_argument("--n-min", dest="n_min", type=_nonneg_int)
    s.add_argument("--n-max", dest="n_max", type=_nonneg_int)
    s.add_argument("--q", type=_nonneg_int)
    s.add_argument("--csv", help="CSV of n,N_delta,lower_env,upper_env")
    s = sub.add_parser("reproduce", parents=[common], help="regenerate the figure data")
    s.add_argument("--out-dir", dest="out_dir")
    s.add_argument("--level", type=_nonneg_int)
    return p


def _settings(args) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    file_values = {}
    if args.config:
        raw = load_config(args.config)
        for key, value in raw.items():
            k = key if key in DEFAULTS else {"n": "N", "mtilde": "Mtilde"}.get(key, key)
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                file_values[k] = CASTS[k](value) if k in CASTS else value
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None
    return merge(flags, file_values, DEFAULTS)


def _notice(message: str) -> None:
    sys.stderr.write(json.dumps({"notice": message}, sort_keys=True) + "\n")


def _function(cfg, default=None, required=True):
    if cfg["const"] is not None and cfg["f_expr"] is not None:
        raise UsageError("give only one of --f-expr and --const")
    if cfg["const"] is not None:
        return constant(cfg["const"])
    if cfg["f_expr"] is not None:
        return parse(cfg["f_expr"])
    if default is not None:
        return parse(default)
    if required:
        raise UsageError("a function is required (--f-expr or --const)")
    return None


def _base(cfg, default=None):
    src = cfg["b_expr"] if cfg["b_expr"] is not None else default
    return "harmonic" if src is None else parse(src)


def _alpha(cfg, required=True):
    given = [k for k in ("alpha", "alpha_expr", "alpha_table") if cfg[k] is not None]
    if len(given) > 1:
        raise UsageError("give only one of --alpha, --alpha-expr and --alpha-table")
    N = cfg["N"]
    if not given:
        if required:
            raise UsageError("a scaling is required (--alpha, --alpha-expr or --alpha-table)")
        return None
    if given[0] == "alpha":
        return ScalingFamily.constant(cfg["alpha"], N)
    if given[0] == "alpha_expr":
        return ScalingFamily.from_function(parse(cfg["alpha_expr"]), N)
    try:
        text = Path(cfg["alpha_table"]).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read alpha table: {exc}") from None
    return parse_alpha_table(text, N)


def _level(cfg, key="level") -> int:
    level, N = cfg[key], cfg["N"]
    rounded = round_up_level(level, N)
    if rounded != level:
        _notice(f"level {level} rounded up to {rounded}, a multiple of N={N}")
    return rounded


def _emit(cfg, payload) -> None:
    sys.stdout.write(json_text(payload))


# --- commands ----------------------------------------------------------------


def cmd_mesh(cfg):
    g = build_level_graph(cfg["level"])
    f = _function(cfg, required=False)
    sf = sample(f, g) if f is not None else SGFunction(g, np.zeros(g.n_vertices))
    if cfg["out"]:
        write_surface(cfg["out"], sf, cfg["z_scale"])
    _emit(cfg, {"level": g.level, "vertices": g.n_vertices, "edges": len(g.edges), "cells": len(g.cells)})


def cmd_harmonic(cfg):
    try:
        bnd = [float(v) for v in str(cfg["boundary"]).split(",")]
    except ValueError:
        raise UsageError(f"bad --boundary {cfg['boundary']!r}") from None
    if len(bnd) != 3:
        raise UsageError("--boundary needs three values")
    h = harmonic_extend(bnd, cfg["level"])
    if cfg["out"]:
        write_surface(cfg["out"], h, cfg["z_scale"])
    mids = h.values[3:6].tolist() if h.level >= 1 else []
    _emit(cfg, {"boundary": bnd, "level": h.level, "energy": graph_energy(h), "midpoints": mids})


def cmd_energy(cfg):
    f = _function(cfg)
    seq = energy_sequence(f, cfg["max_m"], K=cfg["K"])
    if cfg["out"]:
        write_csv(cfg["out"], ["m", "E_m", "envelope"], ((m, e, "" if env is None else env) for m, e, env in seq.rows()))
    _emit(
        cfg,
        {
            "values": list(seq.values),
            "status": seq.status,
            "nondecreasing": seq.nondecreasing,
            "envelope": None if seq.envelope is None else list(seq.envelope),
            "envelope_holds": seq.envelope_holds,
        },
    )


def cmd_laplacian(cfg):
    f = _function(cfg)
    M = cfg["level"]
    if cfg["solve"]:
        u = solve_poisson(f, (0.0, 0.0, 0.0), M)
        if cfg["out"]:
            write_surface(cfg["out"], u, cfg["z_scale"])
        _emit(cfg, {"level": M, "mode": "poisson", "max_abs": u.sup_norm()})
        return
    g = build_level_graph(M + 1)
    lap = pointwise_laplacian(sample(f, g), M)
    coords = build_level_graph(M).coords
    if cfg["out"]:
        write_csv(
            cfg["out"],
            ["id", "x", "y", "value"],
            ((int(i), coords[i, 0], coords[i, 1], v) for i, v in zip(lap.ids.tolist(), lap.values.tolist())),
        )
    _emit(cfg, {"level": M, "mode": "pointwise", "max_abs": lap.max_abs()})


def cmd_fractal(cfg):
    f = _function(cfg, default=FIGURE_F)
    alpha = _alpha(cfg)
    M = _level(cfg)
    res = construct(FractalSystem(f, alpha, M, _base(cfg)))
    if cfg["out"]:
        write_surface(cfg["out"], res.values, cfg["z_scale"])
    eb = error_bound(res)
    v = res.values.values
    _emit(
        cfg,
        {
            "level": M,
            "N": alpha.N,
            "min": float(v.min()),
            "max": float(v.max()),
            "junction_discrepancy": res.junction_discrepancy,
            "sup_distance": res.sup_distance,
            "error_bound": {"lhs": eb.lhs, "rhs": eb.rhs, "holds": eb.holds},
        },
    )


def cmd_constrain(cfg):
    f = _function(cfg)
    b = _base(cfg)
    N = cfg["N"]
    M = _level(cfg)
    g = build_level_graph(M)
    fv = sample(f, g)
    bv = harmonic_extend(fv.values[:3], M) if isinstance(b, str) else sample(b, g)
    Mt = float(fv.values.max()) if cfg["Mtilde"] is None else cfg["Mtilde"]
    if fv.values.min() < 0 or fv.values.max() > Mt:
        # f^alpha = f on V_N, so no scaling can repair this
        raise InfeasibleError(f"f leaves [0, {Mt}] on the samples")
    report = compute_extrema(fv, bv, N, M)
    ivs = admissible_intervals(report, Mt)
    if cfg["report"]:
        write_csv(
            cfg["report"],
            ["word", "lo", "hi", "feasible", "within_hypotheses"],
            ((iv.word, iv.lo, iv.hi, str(iv.feasible).lower(), str(iv.within_hypotheses).lower()) for iv in ivs),
        )
    bad = [iv.word for iv in ivs if not iv.feasible]
    if bad:
        raise InfeasibleError(f"empty admissible interval for words {bad[:10]}")
    alpha = choose_alpha(ivs, cfg["pick"])
    res = construct(FractalSystem(fv, alpha, M, bv))
    if cfg["out"]:
        write_surface(cfg["out"], res.values, cfg["z_scale"])
    v = res.values.values
    _emit(
        cfg,
        {
            "level": M,
            "N": N,
            "Mtilde": Mt,
            "alpha": list(alpha.table),
            "within_hypotheses": all(iv.within_hypotheses for iv in ivs),
            "min": float(v.min()),
            "max": float(v.max()),
            "range_ok": bool(v.min() >= -1e-10 and v.max() <= Mt + 1e-10),
        },
    )


def cmd_approx(cfg):
    f = _function(cfg)
    alpha = _alpha(cfg, required=False)
    m = cfg["m"]
    if alpha is not None:
        m = round_up_level(m, alpha.N)
        if m != cfg["m"]:
            _notice(f"m {cfg['m']} rounded up to {m}, a multiple of N={alpha.N}")
    basis = list(multiharmonic_basis(cfg["k"], m))
    label = "Hk"
    if alpha is not None:
        basis = fractal_basis(basis, alpha, m)
        label = "FalphaHk"
    if cfg["mode"] == "chebyshev":
        res = best_chebyshev(f, basis, m)
    else:
        res = best_one_sided_below(f, basis, m)
    payload = {
        "basis": label,
        "coefficients": res.coefficients.tolist(),
        "error": res.error,
        "m": m,
        "mode": cfg["mode"],
        "active": res.active,
        "objective": res.objective,
    }
    if cfg["out"] and cfg["out"] != "-":
        write_json(cfg["out"], payload)
    _emit(cfg, payload)


def cmd_dimension(cfg):
    f = _function(cfg)
    alpha = _alpha(cfg, required=False)
    level = cfg["n_max"] + cfg["q"]
    bounds = None
    target = f
    if alpha is not None:
        level = round_up_level(level, alpha.N)
        res = construct(FractalSystem(f, alpha, level, _base(cfg)))
        target = res.values
        try:
            bounds = dimension_bounds(holder_data(res), alpha.N)
        except ValueError:
            bounds = None
    rep = estimate_dimension(target, (cfg["n_min"], cfg["n_max"]), cfg["q"], bounds.upper if bounds else None)
    if cfg["csv"]:
        write_csv(cfg["csv"], ["n", "N_delta", "lower_env", "upper_env"], rep.rows())
    payload = rep.to_dict()
    if bounds is not None:
        payload["regime"] = bounds.regime
    if cfg["out"] and cfg["out"] != "-":
        write_json(cfg["out"], payload)
    _emit(cfg, payload)


REPRODUCE_ALPHAS = (0.3, 0.4, 0.5, 0.6)
SWEEP_ALPHAS = tuple(round(0.1 * i, 1) for i in range(10))


def reproduce_figures(out_dir, level: int = 6, sweep_level: int = 8, z_scale: float = 1.0) -> dict:
    """Write the figure surfaces, the iteration snapshots and the alpha sweep.

    Returns a manifest mapping file names to SHA-256 digests.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    f, b = parse(FIGURE_F), parse(FIGURE_B)
    files = []
    for a in REPRODUCE_ALPHAS:
        res = construct(FractalSystem(f, ScalingFamily.constant(a), level, b))
        name = f"fig2_alpha_{a:.1f}.ply"
        write_surface(out / name, res.values, z_scale)
        files.append(name)
    for it in range(1, 5):
        res = construct(FractalSystem(f, ScalingFamily.constant(0.7), it, b))
        name = f"fig1_iteration_{it}.ply"
        write_surface(out / name, res.values, z_scale)
        files.append(name)
    rows = []
    for a in SWEEP_ALPHAS:
        res = construct(FractalSystem(f, ScalingFamily.constant(a), sweep_level, b))
        eb = error_bound(res)
        rows.append((a, eb.lhs, eb.rhs))
    write_csv(out / "alpha_sweep.csv", ["alpha", "sup_error", "bound"], rows)
    files.append("alpha_sweep.csv")
    return {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in files}


def cmd_reproduce(cfg):
    out_dir = cfg["out"] or cfg["out_dir"]
    level = cfg["level"]
    manifest = reproduce_figures(out_dir, level=level, z_scale=cfg["z_scale"])
    payload = {"files": manifest, "level": level, "seed": cfg["seed"]}
    write_json(Path(out_dir) / "manifest.json", payload)
    _emit(cfg, payload)


COMMANDS = {
    "mesh": cmd_mesh,
    "harmonic": cmd_harmonic,
    "energy": cmd_energy,
    "laplacian": cmd_laplacian,
    "fractal": cmd_fractal,
    "constrain": cmd_constrain,
    "approx": cmd_approx,
    "dimension": cmd_dimension,
    "reproduce": cmd_reproduce,
}


def _fail(code: str, message: str, status: int, extra=None) -> int:
    payload = {"code": code, "message": message}
    if extra:
        payload.update(extra)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _settings(args)
        COMMANDS[args.command](cfg)
    except GasketError as exc:
        d = exc.to_dict()
        return _fail(d.pop("code"), d.pop("message"), exc.exit_status, d)
    except OSError as exc:
        return _fail("io_error", str(exc), 1)
    except ValueError as exc:
        return _fail("invalid_value", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
