"""Command-line entry point.

Configuration is a plain text file with one ``key = value`` per line and
``#`` comments; ``--set key=value`` overrides file entries.  Every run writes
into ``<out>/<timestamp>_seed<seed>_<subcommand>/`` together with the
effective configuration.

Exit codes
----------
0 success, 1 unexpected error, 2 usage error, 3 configuration error,
4 divergence, 5 I/O error, 6 numerical failure (quadrature or embedding).
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import presets
from . import rng as rngmod
from .covariance import CovarianceSpec, QuadratureError, eval_covariance, first_column
from .experiment import (
    ExperimentConfig,
    SampleFailure,
    convergence_table,
    evolve_demo,
    write_meta,
)
from .fem import Grid1D
from .grf import (
    EmbeddingError,
    choose_padding,
    lift_to_coefficient,
    make_plan,
    padding_diagnostic,
    sample_pair,
)
from .stepper import DivergenceError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DIVERGENCE = 4
EXIT_IO = 5
EXIT_NUMERIC = 6

SUBCOMMANDS = ("sample-field", "padding-check", "covariance-check",
               "converge-time", "converge-space", "evolve")


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _auto_int(text):
    return None if text.strip().lower() == "auto" else int(text)


def _list(conv):
    def parse(text):
        return tuple(conv(p) for p in text.replace(";", ",").split(",") if p.strip())
    return parse


# key -> (parser, default)
KEYS = {
    "preset": (str, None),
    "demo": (str, "random_diffusion"),
    "samples": (int, 100),
    "master_seed": (int, 20240101),
    "sample_index": (int, 0),
    "drift": (str, "allen_cahn"),
    "drift_params": (_list(float), (0.0, 0.0)),
    "g": (str, "half_one_minus_sq"),
    "eps_a": (float, 1e-3),
    "T": (float, 0.1),
    "q": (float, 2.0),
    "quad_tol": (float, 1e-10),
    "allow_rough": (_bool, False),
    "gamma": (float, 1.0),
    "eps_q": (float, 0.1),
    "J": (_auto_int, None),
    "orthonormal": (_bool, False),
    "n_ref": (int, 64),
    "n_levels": (_list(int), ()),
    "dt_ref": (float, 1e-5),
    "dt_levels": (_list(float), ()),
    "padding": (_auto_int, None),
    "padding_list": (_list(int), ()),
    "u0_wavenumber": (int, 2),
    "rho_limit": (float, 1e-6),
    "dt": (float, 1e-5),
    "n": (int, 128),
    "snapshots": (int, 101),
    "points": (int, 21),
}


@dataclass
class RunConfig:
    """Explicitly set keys plus the line each came from (``None`` for overrides)."""

    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def get(self, key):
        if key in self.values:
            return self.values[key]
        return KEYS[key][1]

    def __contains__(self, key):
        return key in self.values

    def effective(self):
        return {k: self.get(k) for k in KEYS}


def _set(cfg, key, raw, line):
    if key not in KEYS:
        raise ConfigError("unknown key", key, line)
    try:
        cfg.values[key] = KEYS[key][0](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid value {raw.strip()!r}: {exc}", key, line) from None
    cfg.lines[key] = line


def parse_config(path=None, overrides=()):
    """Read a ``key = value`` file, then apply ``key=value`` overrides."""
    cfg = RunConfig()
    if path is not None:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                text = raw.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ConfigError("expected 'key = value'", None, lineno)
                key, value = text.split("=", 1)
                _set(cfg, key.strip(), value, lineno)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        _set(cfg, key.strip(), value, None)
    _validate(cfg)
    return cfg


def _validate(cfg):
    q = cfg.get("q")
    if not cfg.get("allow_rough") and q < 2:
        raise ConfigError("q must exceed 2", "q", cfg.lines.get("q"))
    if q <= 0:
        raise ConfigError("q must be positive", "q", cfg.lines.get("q"))
    for key in ("samples", "n_ref", "n", "snapshots", "points"):
        if cfg.get(key) < 1:
            raise ConfigError("must be positive", key, cfg.lines.get(key))
    for key in ("eps_a", "T", "dt_ref", "dt", "quad_tol", "eps_q"):
        if not cfg.get(key) > 0:
            raise ConfigError("must be positive", key, cfg.lines.get(key))
    preset = cfg.get("preset")
    if preset is not None and preset not in presets.STUDIES:
        raise ConfigError(f"unknown preset, choose from {sorted(presets.STUDIES)}",
                          "preset", cfg.lines.get("preset"))
    if cfg.get("demo") not in presets.DEMOS:
        raise ConfigError(f"unknown demo, choose from {sorted(presets.DEMOS)}",
                          "demo", cfg.lines.get("demo"))


def _cov(cfg):
    return CovarianceSpec(cfg.get("q"), quad_tol=cfg.get("quad_tol"),
                          allow_rough=cfg.get("allow_rough"))


_MODEL_KEYS = {"drift": "drift_kind", "g": "g_kind", "eps_a": "eps_a", "T": "T",
               "drift_params": "drift_params"}


def _model(model, cfg):
    try:
        return replace(model, **{f: cfg.get(k) for k, f in _MODEL_KEYS.items() if k in cfg})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def study_config(cfg: RunConfig, kind) -> ExperimentConfig:
    """Preset (if any) with explicitly set keys applied on top."""
    name = cfg.get("preset") or ("time_desk" if kind == "converge_time" else "space_desk")
    base = presets.STUDIES[name](g_kind=cfg.get("g"))
    if base.kind != kind:
        raise ConfigError(f"preset {name!r} is a {base.kind} study", "preset",
                          cfg.lines.get("preset"))
    model = _model(base.model, cfg)
    cov = base.cov
    if {"q", "quad_tol", "allow_rough"} & cfg.values.keys():
        cov = _cov(cfg)
    noise = base.noise
    nk = {k: cfg.get(k) for k in ("gamma", "eps_q", "orthonormal") if k in cfg}
    if nk:
        noise = replace(noise, **nk)
    simple = {k: cfg.get(k) for k in ("samples", "master_seed", "J", "n_ref", "n_levels",
                                      "dt_ref", "dt_levels", "padding", "u0_wavenumber",
                                      "rho_limit") if k in cfg}
    try:
        return replace(base, model=model, cov=cov, noise=noise, **simple)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def demo_config(cfg: RunConfig):
    demo = presets.DEMOS[cfg.get("demo")](seed=cfg.get("master_seed"))
    model = _model(demo.model, cfg)
    simple = {k: cfg.get(k) for k in ("n", "dt", "q", "gamma", "eps_q", "J", "u0_wavenumber",
                                      "sample_index", "snapshots", "padding") if k in cfg}
    return replace(demo, model=model, **simple)


# ------------------------------------------------------------------ commands

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def matern_closed_form(q, x):
    """``2^(1-q) x^q K_q(x) / G(q)``; diagnostic comparison only."""
    from scipy.special import gamma, kv

    x = abs(float(x))
    if x == 0.0:
        return 1.0
    return float(2.0 ** (1.0 - q) * x ** q * kv(q, x) / gamma(q))


def cmd_covariance_check(cfg, outdir):
    spec = _cov(cfg)
    xs = np.linspace(0.0, 1.0, cfg.get("points"))
    rows = []
    for x in xs:
        quad = eval_covariance(spec, x)
        exact = matern_closed_form(spec.q, x)
        rows.append((float(x), quad, exact, quad - exact))
    _write_csv(outdir / "covariance_check.csv",
               ["x", "quadrature", "closed_form", "difference"], rows)
    worst = max(abs(r[3]) for r in rows)
    print(f"max |quadrature - closed form| = {worst:.3e}")


def _padding_for(cfg, spec, P):
    M = cfg.get("padding")
    if M is None:
        M, _ = choose_padding(spec, P)
    return M


def cmd_sample_field(cfg, outdir):
    spec = _cov(cfg)
    grid = Grid1D(cfg.get("n_ref") - 1)
    P = grid.K + 2
    M = _padding_for(cfg, spec, P)
    plan = make_plan(spec, P, M, rho_limit=cfg.get("rho_limit"))
    idx = cfg.get("sample_index")
    gen = rngmod.stream(cfg.get("master_seed"), idx // 2, rngmod.FIELD_STREAM)
    z = sample_pair(plan, gen)[idx % 2]
    fs = lift_to_coefficient(z, cfg.get("eps_a"))
    _write_csv(outdir / "field.csv", ["node_index", "x", "z", "a"],
               [(k, float(x), float(zk), float(ak))
                for k, (x, zk, ak) in enumerate(zip(grid.nodes, fs.z, fs.a))])
    return {"padding": M, "rho_minus": plan.rho_minus,
            "a_min_observed": fs.a_min_observed, "a_max_observed": fs.a_max_observed}


def cmd_padding_check(cfg, outdir):
    spec = _cov(cfg)
    P = cfg.get("n_ref") + 1
    M_list = cfg.get("padding_list") or tuple(m * (P - 1) for m in (0, 1, 2, 4, 8, 16, 24, 32))
    rows = padding_diagnostic(first_column(spec, P), M_list, spec=spec)
    _write_csv(outdir / "padding.csv", ["M", "rho_minus"], rows)
    for M, rho in rows:
        print(f"M={M:6d}  rho_minus={rho:.3e}")


def cmd_converge(cfg, outdir, kind, workers):
    study = study_config(cfg, kind)
    result = convergence_table(study, workers=workers)
    result.write(outdir)
    print(result.table.format())
    mo = result.table.mean_order
    print("mean order " + ("n/a" if mo is None else f"{mo:.3f}"))


def cmd_evolve(cfg, outdir):
    paths = evolve_demo(demo_config(cfg), outdir)
    for label, p in paths.items():
        print(f"{label}: {p}")


def _run_dir(base, seed, sub):
    stamp = time.strftime("%Y%m%dT%H%M%S")
    d = Path(base) / f"{stamp}_seed{seed}_{sub}"
    n = 1
    while d.exists():
        d = Path(base) / f"{stamp}_seed{seed}_{sub}_{n}"
        n += 1
    d.mkdir(parents=True)
    return d


def build_parser():
    p = argparse.ArgumentParser(prog="randspde", description=__doc__.split("\n\n")[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("-c", "--config", help="key = value configuration file")
    p.add_argument("-s", "--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a configuration key")
    p.add_argument("-o", "--out", default="runs", help="base directory for run output")
    p.add_argument("-w", "--workers", type=int, default=None,
                   help="worker processes (default: $RANDSPDE_WORKERS or 1)")
    return p


def dispatch(subcommand, cfg, out="runs", workers=None):
    """Run one subcommand; returns ``(exit_code, run_directory)``."""
    if subcommand not in SUBCOMMANDS:
        print(f"unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE, None
    try:
        outdir = _run_dir(out, cfg.get("master_seed"), subcommand)
        write_meta(outdir / "config_effective.txt", {"subcommand": subcommand, **cfg.effective()})
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, None
    try:
        extra = None
        if subcommand == "covariance-check":
            cmd_covariance_check(cfg, outdir)
        elif subcommand == "sample-field":
            extra = cmd_sample_field(cfg, outdir)
        elif subcommand == "padding-check":
            cmd_padding_check(cfg, outdir)
        elif subcommand == "converge-time":
            cmd_converge(cfg, outdir, "converge_time", workers)
        elif subcommand == "converge-space":
            cmd_converge(cfg, outdir, "converge_space", workers)
        else:
            cmd_evolve(cfg, outdir)
        if extra:
            write_meta(outdir / "meta_sample_field.txt", extra)
    except (DivergenceError, SampleFailure) as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE, outdir
    except (QuadratureError, EmbeddingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, outdir
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, outdir
    except ValueError as exc:  # ConfigError and invalid parameter combinations
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, outdir
    print(f"output in {outdir}")
    return EXIT_OK, outdir


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    code, _ = dispatch(args.subcommand, cfg, args.out, args.workers)
    return code


if __name__ == "__main__":
    sys.exit(main())
