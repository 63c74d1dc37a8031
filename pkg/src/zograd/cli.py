"""Declarative experiment runner.

Subcommands reproduce the package's quantities as deterministic artifacts:

* ``bounds``       -- table of every applicable closed-form bound;
* ``risk-curve``   -- Monte Carlo risk of an estimator across budgets,
                      next to its closed-form reference;
* ``brute-force``  -- direct minimization over small linear designs;
* ``sp-demo``      -- simultaneous-perturbation blow-up curve;
* ``worstcase``    -- samples of the extremal function (CSV, optional SVG
                      polyline for p = 1 or heat lattice for p = 2);
* ``verify``       -- the full acceptance suite, one PASS/FAIL line per
                      criterion, exit status 0 iff all pass.

Configuration comes from a single JSON document (--config) and/or flags;
flags override the file.  Unknown config keys are rejected before any
computation.  The environment variable ZOGRAD_SEED provides a default seed.
Exit codes: 0 success, 1 acceptance failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import acceptance, report
from ._streams import fold_seed
from .core import FunctionClassSpec, NoiseSpec
from .errors import ZogradError
from .estimators import (
    LinearDesign,
    SPConfig,
    cfd_design_1d,
    cfd_design_multi,
    forward_difference_design,
    optimal_delta,
)
from .risk import bounds_table, cfd_worst_case_mse, exact_worst_case_risk_linear
from .verify import (
    best_ffd_delta,
    brute_force_linear_minimax,
    ffd_benchmark_mse,
    mc_mse,
    sp_blowup_curve,
)
from .worstcase import (
    f_star_1d,
    f_star_multi,
    same_sign_spike_adversary,
    spike_adversary,
)

COMMANDS = ("bounds", "risk-curve", "brute-force", "sp-demo", "worstcase", "verify")
FORMATS = ("csv", "json", "svg")

KNOWN_KEYS = {
    "command", "a", "b", "n", "n_list", "p", "q", "eps", "estimator", "delta",
    "reps", "seed", "rho_list", "h", "out", "format", "plot",
}

_DEFAULTS = {
    "a": 1.0, "b": 1.0, "p": 1, "q": "2", "eps": 1.0, "h": 1.0,
    "estimator": "cfd", "delta": "optimal", "format": "csv",
    "reps": 100_000,
}


class ConfigError(ZogradError):
    pass


@dataclass
class ExperimentConfig:
    """Validated description of one CLI experiment."""

    command: str
    a: float = 1.0
    b: float = 1.0
    n: int | None = None
    n_list: list | None = None
    p: int = 1
    q: str = "2"
    eps: float = 1.0
    estimator: str = "cfd"
    delta: str | float = "optimal"
    reps: int | None = None
    seed: int = acceptance.DEFAULT_SEED
    rho_list: list | None = None
    h: float = 1.0
    out: str | None = None
    format: str = "csv"
    plot: str | None = None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON config document")
    common.add_argument("--a", type=float, help="remainder coefficient a > 0")
    common.add_argument("--b", type=float, help="noise variance bound b")
    common.add_argument("--n", type=int, help="evaluation budget")
    common.add_argument("--n-list", dest="n_list", metavar="N1,N2,...",
                        help="comma-separated budgets (risk-curve)")
    common.add_argument("--p", type=int, help="input dimension")
    common.add_argument("--q", choices=["1", "2", "inf"], help="remainder norm")
    common.add_argument("--eps", type=float, help="gradient gap of the extremal pair")
    common.add_argument("--estimator", metavar="{cfd,ffd,sp,custom:FILE}",
                        help="estimator selector")
    common.add_argument("--delta", metavar="{optimal,REAL}",
                        help="perturbation size or 'optimal'")
    common.add_argument("--reps", type=int, help="Monte Carlo replications")
    common.add_argument("--seed", type=int, help="RNG seed (default $ZOGRAD_SEED)")
    common.add_argument("--rho-list", dest="rho_list", metavar="R1,R2,...",
                        help="comma-separated gradient magnitudes (sp-demo)")
    common.add_argument("--h", type=float, help="SP scaling parameter")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=list(FORMATS), help="output format")
    common.add_argument("--plot", metavar="PATH",
                        help="also render a matplotlib figure to PATH")

    parser = argparse.ArgumentParser(
        prog="zograd",
        description="zeroth-order gradient estimation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common])
    return parser


def _line_of_key(text: str, key: str) -> int:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return 1


def _parse_floats(val, key: str) -> list[float]:
    if isinstance(val, (list, tuple)):
        return [float(v) for v in val]
    try:
        return [float(tok) for tok in str(val).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {val!r}")


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}:{err.lineno}:{err.colno}: invalid JSON: {err.msg}")
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}:1: config must be a JSON object")
        for key in raw:
            if key not in KNOWN_KEYS:
                raise ConfigError(f"{path}:{_line_of_key(text, key)}: unknown config key {key!r}")
        if "command" in raw and raw["command"] != args.command:
            raise ConfigError(
                f"{path}:{_line_of_key(text, 'command')}: config command "
                f"{raw['command']!r} does not match invoked command {args.command!r}"
            )

    merged: dict = dict(_DEFAULTS)
    env_seed = os.environ.get("ZOGRAD_SEED")
    if env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"ZOGRAD_SEED must be an integer, got {env_seed!r}")
    else:
        merged["seed"] = acceptance.DEFAULT_SEED
    merged["reps"] = None  # per-command default resolved below
    for key, val in raw.items():
        if key != "command":
            merged[key] = val
    for key in KNOWN_KEYS - {"command"}:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val

    cfg = ExperimentConfig(command=args.command, **merged)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {cfg.format!r}")
    cfg.a = float(cfg.a)
    cfg.b = float(cfg.b)
    cfg.p = int(cfg.p)
    cfg.eps = float(cfg.eps)
    cfg.h = float(cfg.h)
    cfg.seed = int(cfg.seed)
    cfg.q = str(cfg.q)
    if cfg.q not in ("1", "2", "inf"):
        raise ConfigError(f"q must be 1, 2 or inf, got {cfg.q!r}")
    if cfg.a <= 0:
        raise ConfigError("a must be positive")
    if cfg.b < 0:
        raise ConfigError("b must be nonnegative")
    if cfg.p < 1:
        raise ConfigError("p must be >= 1")
    if cfg.n is not None:
        cfg.n = int(cfg.n)
    if cfg.n_list is not None:
        cfg.n_list = [int(v) for v in _parse_floats(cfg.n_list, "n_list")]
    if cfg.rho_list is not None:
        cfg.rho_list = _parse_floats(cfg.rho_list, "rho_list")
    if cfg.reps is not None:
        cfg.reps = int(cfg.reps)
        if cfg.reps < 100:
            raise ConfigError("reps must be >= 100")
    if cfg.delta != "optimal":
        try:
            cfg.delta = float(cfg.delta)
        except (TypeError, ValueError):
            raise ConfigError(f"delta must be 'optimal' or a number, got {cfg.delta!r}")
        if cfg.delta <= 0:
            raise ConfigError("delta must be positive")

    if cfg.command == "bounds" and cfg.n is None:
        raise ConfigError("bounds requires --n")
    if cfg.command == "brute-force":
        if cfg.n is None:
            raise ConfigError("brute-force requires --n (2..4)")
        if not 2 <= cfg.n <= 4:
            raise ConfigError("brute-force supports n in {2, 3, 4}")
    if cfg.command == "risk-curve":
        if cfg.n_list is None:
            if cfg.n is None and not cfg.estimator.startswith("custom:"):
                raise ConfigError("risk-curve requires --n-list (or --n)")
            cfg.n_list = [cfg.n] if cfg.n is not None else []
        if not (cfg.estimator in ("cfd", "ffd", "sp") or cfg.estimator.startswith("custom:")):
            raise ConfigError(f"unknown estimator {cfg.estimator!r}")
        if cfg.estimator == "ffd" and cfg.p != 1:
            raise ConfigError("the forward-difference baseline is one-dimensional")
    if cfg.command == "sp-demo":
        if cfg.rho_list is None:
            cfg.rho_list = [1.0, 2.0, 4.0, 8.0]
        if cfg.n is None:
            cfg.n = 2
    if cfg.command == "worstcase":
        if cfg.p not in (1, 2):
            raise ConfigError("worstcase emits samples for p in {1, 2} only")
        if cfg.eps <= 0:
            raise ConfigError("eps must be positive")
    if cfg.format == "svg" and cfg.command != "worstcase":
        raise ConfigError("svg output is only available for the worstcase command")
    if cfg.plot is not None and cfg.command not in ("worstcase", "risk-curve", "sp-demo"):
        raise ConfigError(f"{cfg.command} has no figure rendering; drop --plot")


def _emit(cfg: ExperimentConfig, columns, rows, params, svg_text=None) -> None:
    if cfg.format == "csv":
        report.write_text(report.render_csv(columns, rows), cfg.out)
    elif cfg.format == "json":
        report.write_text(report.render_json(cfg.command, params, columns, rows), cfg.out)
    else:
        if svg_text is None:
            raise ConfigError(f"{cfg.command} has no svg rendering")
        report.write_text(svg_text, cfg.out)


def _q_value(cfg: ExperimentConfig):
    return math.inf if cfg.q == "inf" else int(cfg.q)


def _cmd_bounds(cfg: ExperimentConfig) -> int:
    table = bounds_table(cfg.n, cfg.a, cfg.b, cfg.p, _q_value(cfg))
    columns = ["a", "b", "n", "p", "q", "bound", "value"]
    rows = [[cfg.a, cfg.b, cfg.n, cfg.p, cfg.q, name, value] for name, value in table.items()]
    params = {"a": cfg.a, "b": cfg.b, "n": cfg.n, "p": cfg.p, "q": cfg.q}
    _emit(cfg, columns, rows, params)
    return 0


def _cmd_worstcase(cfg: ExperimentConfig) -> int:
    q = _q_value(cfg)
    params = {"eps": cfg.eps, "a": cfg.a, "p": cfg.p, "q": cfg.q}
    if cfg.p == 1:
        fs = f_star_1d(cfg.eps, cfg.a)
        half = 2.0 * fs.argmax_t()
        xs = np.linspace(-half, half, 1001)
        ys = fs(xs)
        columns = ["x", "f_star"]
        rows = list(zip(xs.tolist(), ys.tolist()))
        svg = report.svg_polyline(xs.tolist(), ys.tolist())
        _emit(cfg, columns, rows, params, svg_text=svg)
        if cfg.plot:
            report.fig_worstcase_1d(cfg.plot, xs, ys)
        return 0
    spec = FunctionClassSpec(a=cfg.a, p=2, q=q, x0=np.zeros(2))
    fs = f_star_multi(cfg.eps, spec)
    half = math.sqrt(3.0 * cfg.eps / cfg.a)
    axis = np.linspace(-half, half, 101)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    vals = fs(pts)
    columns = ["x1", "x2", "f_star"]
    rows = list(zip(pts[:, 0].tolist(), pts[:, 1].tolist(), vals.tolist()))
    svg = report.svg_lattice(pts[:, 0].tolist(), pts[:, 1].tolist(), vals.tolist())
    _emit(cfg, columns, rows, params, svg_text=svg)
    if cfg.plot:
        report.fig_worstcase_2d(cfg.plot, pts[:, 0], pts[:, 1], vals)
    return 0


def _cmd_brute_force(cfg: ExperimentConfig) -> int:
    res = brute_force_linear_minimax(cfg.n, cfg.a, cfg.b)
    columns = ["name", "value"]
    rows = [["value", res.value], ["scanned_min", res.scanned_min],
            ["candidates", res.candidates]]
    for j in range(res.design.n):
        rows.append([f"delta_{j}", float(res.design.deltas[j, 0])])
    for j in range(res.design.n):
        rows.append([f"weight_{j}", float(res.design.weights[j, 0])])
    params = {"n": cfg.n, "a": cfg.a, "b": cfg.b}
    _emit(cfg, columns, rows, params)
    return 0


def _cmd_sp_demo(cfg: ExperimentConfig) -> int:
    reps = cfg.reps if cfg.reps is not None else _DEFAULTS["reps"]
    curve = sp_blowup_curve(cfg.rho_list, cfg.p, cfg.n, cfg.h, reps, cfg.seed)
    columns = ["rho", "empirical", "analytic", "std_error"]
    rows = [[pt.rho, pt.empirical, pt.analytic, pt.std_error] for pt in curve]
    params = {"p": cfg.p, "n": cfg.n, "h": cfg.h, "reps": reps, "seed": cfg.seed}
    _emit(cfg, columns, rows, params)
    if cfg.plot:
        report.fig_sp_demo(
            cfg.plot,
            [pt.rho for pt in curve],
            [pt.empirical for pt in curve],
            [pt.analytic for pt in curve],
        )
    return 0


def _load_custom_design(spec: str) -> LinearDesign:
    path = Path(spec.split(":", 1)[1])
    if not path.exists():
        raise ConfigError(f"custom design file not found: {path}")
    try:
        doc = json.loads(path.read_text())
        return LinearDesign(deltas=np.asarray(doc["deltas"], dtype=float),
                            weights=np.asarray(doc["weights"], dtype=float))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{path}: invalid design document ({err})")


def _cmd_risk_curve(cfg: ExperimentConfig) -> int:
    reps = cfg.reps if cfg.reps is not None else _DEFAULTS["reps"]
    q = _q_value(cfg)
    a, b, p = cfg.a, cfg.b, cfg.p
    x0 = np.zeros(p)
    spec = FunctionClassSpec(a=a, p=p, q=q, x0=x0)
    noise = NoiseSpec.gaussian(b) if b > 0 else NoiseSpec.none()
    rows = []

    if cfg.estimator.startswith("custom:"):
        design = _load_custom_design(cfg.estimator)
        if design.p != p:
            raise ConfigError(f"custom design has p={design.p}, config says p={p}")
        adversary = spike_adversary(design, spec)
        rep = mc_mse(design, adversary, noise, x0, reps, cfg.seed)
        bound = exact_worst_case_risk_linear(design, a, b, q).upper
        rows.append([design.n, rep.mse, rep.bias_sq, rep.variance, rep.std_error, bound])
    else:
        for i, n in enumerate(cfg.n_list):
            seed_i = fold_seed(cfg.seed, i)
            if cfg.estimator == "cfd":
                delta = optimal_delta(a, b, n, p) if cfg.delta == "optimal" else cfg.delta
                design = cfd_design_1d(n, delta) if p == 1 else cfd_design_multi(n, p, delta)
                adversary = (spike_adversary(design, spec) if p == 1
                             else same_sign_spike_adversary(design, spec))
                rep = mc_mse(design, adversary, noise, x0, reps, seed_i)
                bound = cfd_worst_case_mse(n, a, b, p, delta)
            elif cfg.estimator == "ffd":
                delta = best_ffd_delta(n, b) if cfg.delta == "optimal" else cfg.delta
                design = forward_difference_design(n, delta)

                def half_quadratic(x):
                    return 0.5 * np.asarray(x, dtype=float) ** 2

                rep = mc_mse(design, half_quadratic, noise, x0, reps, seed_i, grad0=[0.0])
                bound = ffd_benchmark_mse(n, delta, b)
            else:  # sp
                config = SPConfig(h=cfg.h, n=n)

                def ramp(pts):
                    pts = np.asarray(pts, dtype=float)
                    return pts - x0[0] if p == 1 else (pts - x0).sum(axis=-1)

                rep = mc_mse(config, ramp, noise, x0, reps, seed_i, grad0=np.ones(p))
                # unit ramp + constant-variance noise: perturbation cross-talk
                # plus the noise term p*b/(n h^2)
                bound = 2.0 * p * (p - 1) / n + p * b / (n * cfg.h**2)
            rows.append([n, rep.mse, rep.bias_sq, rep.variance, rep.std_error, bound])

    columns = ["n", "mse", "bias_sq", "variance", "std_error", "bound"]
    params = {
        "estimator": cfg.estimator, "a": a, "b": b, "p": p, "q": cfg.q,
        "delta": cfg.delta, "reps": reps, "seed": cfg.seed,
    }
    _emit(cfg, columns, rows, params)
    if cfg.plot and rows:
        report.fig_risk_curve(
            cfg.plot,
            [r[0] for r in rows], [r[1] for r in rows], [r[5] for r in rows],
        )
    return 0


def _cmd_verify(cfg: ExperimentConfig) -> int:
    results = acceptance.run_all(cfg.seed, cfg.reps)
    for res in results:
        print(res.line())
    all_pass = all(res.passed for res in results)
    print(f"{'PASS' if all_pass else 'FAIL'}  acceptance: "
          f"{sum(r.passed for r in results)}/{len(results)} criteria")
    if cfg.out:
        columns = ["number", "name", "status", "detail"]
        rows = [[r.number, r.name, "pass" if r.passed else "fail", r.detail] for r in results]
        params = {"seed": cfg.seed, "reps": cfg.reps}
        fmt = cfg.format if cfg.format in ("csv", "json") else "csv"
        if fmt == "csv":
            # detail strings may contain commas; quote them minimally
            quoted = [[r[0], r[1], r[2], '"' + r[3].replace('"', "'") + '"'] for r in rows]
            report.write_text(report.render_csv(columns, quoted), cfg.out)
        else:
            report.write_text(report.render_json("verify", params, columns, rows), cfg.out)
    return 0 if all_pass else 1


_RUNNERS = {
    "bounds": _cmd_bounds,
    "risk-curve": _cmd_risk_curve,
    "brute-force": _cmd_brute_force,
    "sp-demo": _cmd_sp_demo,
    "worstcase": _cmd_worstcase,
    "verify": _cmd_verify,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute a validated experiment; returns the process exit status."""
    return _RUNNERS[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ZogradError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
