"""Monte Carlo strong-convergence studies and field-evolution demos.

Every sample draws one coefficient field and one Brownian path.  All
refinement levels of that sample reuse both: coarse time steps sum the fine
Brownian increments, coarse meshes subsample the finest-grid field.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .covariance import CovarianceSpec
from .fem import Grid1D, assemble_mass, l2_norm, prolong_to_fine, restrict_to_coarse
from .grf import DEFAULT_RHO_LIMIT, choose_padding, lift_to_coefficient, make_plan, sample_pair
from .noise import NoiseSpec, aggregate, BrownianPath, default_truncation, mode_matrix
from .stepper import DivergenceError, ModelSpec, evolve

__all__ = [
    "DemoVariant",
    "ErrorTable",
    "ExperimentConfig",
    "SampleFailure",
    "StudyResult",
    "convergence_table",
    "evolve_demo",
    "mean_square_error",
    "run_sample",
    "sample_errors",
    "worker_count",
]

KINDS = ("converge_time", "converge_space", "evolve_demo")
WORKERS_ENV = "RANDSPDE_WORKERS"
# normals generated per chunk of the Brownian path (~64 MB of float64)
_CHUNK_BUDGET = 8_000_000


class SampleFailure(RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"sample {index} failed: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a study.

    ``n_ref`` is the number of intervals of the reference mesh
    (``h = 1 / n_ref``).  For ``converge_time`` the levels are the coarse
    time steps ``dt_levels``; for ``converge_space`` they are coarse
    interval counts ``n_levels`` and every level uses ``dt_ref``.
    ``J = None`` and ``padding = None`` are resolved by :meth:`resolved`.
    """

    kind: str = "converge_time"
    samples: int = 100
    master_seed: int = 20240101
    model: ModelSpec = field(default_factory=ModelSpec)
    cov: CovarianceSpec = field(default_factory=lambda: CovarianceSpec(2.0))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    J: int | None = None
    n_ref: int = 64
    n_levels: tuple = ()
    dt_ref: float = 1e-5
    dt_levels: tuple = ()
    padding: int | None = None
    u0_wavenumber: int = 2
    rho_limit: float = DEFAULT_RHO_LIMIT

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.n_ref < 2:
            raise ValueError("n_ref must be at least 2")
        if not self.dt_ref > 0:
            raise ValueError("dt_ref must be positive")
        N = self.steps_ref
        if abs(N * self.dt_ref - self.model.T) > 1e-9 * self.model.T:
            raise ValueError(f"T={self.model.T} is not a multiple of dt_ref={self.dt_ref}")
        if self.kind == "converge_time":
            for dt in self.dt_levels:
                r = self.time_ratio(dt)
                if N % r:
                    raise ValueError(f"dt={dt} does not divide T into whole steps")
        if self.kind == "converge_space":
            for n in self.n_levels:
                if n < 2 or self.n_ref % n:
                    raise ValueError(f"mesh 1/{n} is not nested in 1/{self.n_ref}")

    @property
    def steps_ref(self):
        return int(round(self.model.T / self.dt_ref))

    def time_ratio(self, dt):
        r = int(round(dt / self.dt_ref))
        if r < 1 or abs(r * self.dt_ref - dt) > 1e-9 * dt:
            raise ValueError(f"dt={dt} is not an integer multiple of dt_ref={self.dt_ref}")
        return r

    @property
    def grid_ref(self):
        return Grid1D(self.n_ref - 1)

    @property
    def level_params(self):
        if self.kind == "converge_time":
            return tuple(float(d) for d in self.dt_levels)
        if self.kind == "converge_space":
            return tuple(1.0 / n for n in self.n_levels)
        return ()

    def resolved(self):
        """Fill in ``J`` and ``padding`` from the default rules."""
        cfg = self
        if cfg.J is None:
            cfg = replace(cfg, J=default_truncation(1.0 / cfg.n_ref, cfg.noise.gamma))
        if cfg.noise.J != cfg.J:
            cfg = replace(cfg, noise=replace(cfg.noise, J=cfg.J))
        if cfg.padding is None:
            M, _ = choose_padding(cfg.cov, cfg.n_ref + 1)
            cfg = replace(cfg, padding=M)
        return cfg

    def describe(self):
        """Flat ``key -> value`` record of every setting."""
        d = {
            "kind": self.kind, "samples": self.samples, "master_seed": self.master_seed,
            "n_ref": self.n_ref, "n_levels": list(self.n_levels), "dt_ref": self.dt_ref,
            "dt_levels": list(self.dt_levels), "J": self.J, "padding": self.padding,
            "u0_wavenumber": self.u0_wavenumber, "rho_limit": self.rho_limit,
        }
        d.update({f"model.{k}": v for k, v in asdict(self.model).items()})
        d.update({f"cov.{k}": v for k, v in asdict(self.cov).items()})
        d.update({f"noise.{k}": v for k, v in asdict(self.noise).items()})
        return d


@lru_cache(maxsize=8)
def _plan(cov, P, M, rho_limit):
    return make_plan(cov, P, M, rho_limit=rho_limit)


def sample_field(cfg: ExperimentConfig, index: int, P: int):
    """Coefficient field of sample ``index`` on ``P`` uniform nodes.

    Samples ``2m`` and ``2m + 1`` are the real and imaginary parts of one
    draw, so each embedding draw serves two samples.
    """
    plan = _plan(cfg.cov, P, cfg.padding, cfg.rho_limit)
    gen = rngmod.stream(cfg.master_seed, index // 2, rngmod.FIELD_STREAM)
    pair = sample_pair(plan, gen)
    return lift_to_coefficient(pair[index % 2], cfg.model.eps_a), plan.rho_minus


def _chunk_rows(N, ratios, J):
    step = math.lcm(*ratios)
    per = max(1, _CHUNK_BUDGET // (step * J))
    return min(N, step * per)


def iter_path_chunks(noise: NoiseSpec, N: int, dt: float, gen, rows: int):
    """Yield consecutive pieces of one Brownian path.

    Drawing in pieces consumes the stream exactly as a single
    ``(N, J)`` draw would, so the path does not depend on ``rows``.
    """
    done = 0
    sd = math.sqrt(dt)
    while done < N:
        n = min(rows, N - done)
        inc = gen.standard_normal((n, noise.J))
        inc *= sd
        yield BrownianPath(inc, dt)
        done += n


@dataclass
class SampleResult:
    index: int
    reference: np.ndarray
    levels: list
    errors: list
    rho_minus: float
    a_min: float
    a_max: float


def run_sample(cfg: ExperimentConfig, index: int) -> SampleResult:
    """Reference and coarse solutions of one sample, sharing field and path."""
    if cfg.J is None or cfg.padding is None:
        cfg = cfg.resolved()
    try:
        if cfg.kind == "converge_time":
            return _run_time_sample(cfg, index)
        if cfg.kind == "converge_space":
            return _run_space_sample(cfg, index)
    except DivergenceError as exc:
        raise SampleFailure(index, exc) from exc
    raise ValueError(f"run_sample does not handle kind {cfg.kind!r}")


def _initial(cfg, grid):
    return np.sin(cfg.u0_wavenumber * np.pi * grid.interior)


def _run_time_sample(cfg, index):
    grid = cfg.grid_ref
    fs, rho = sample_field(cfg, index, grid.K + 2)
    N = cfg.steps_ref
    ratios = [1] + [cfg.time_ratio(dt) for dt in cfg.dt_levels]
    phi = mode_matrix(cfg.noise, grid.interior)
    parts = [[] for _ in ratios]
    gen = rngmod.stream(cfg.master_seed, index, rngmod.NOISE_STREAM)
    for piece in iter_path_chunks(cfg.noise, N, cfg.dt_ref, gen, _chunk_rows(N, ratios, cfg.J)):
        for acc, r in zip(parts, ratios):
            acc.append(aggregate(piece, r) @ phi)
    u0 = _initial(cfg, grid)
    sols = []
    for acc, r in zip(parts, ratios):
        dW = np.concatenate(acc)
        traj = evolve(cfg.model, grid, fs.a, u0, cfg.dt_ref * r, N // r, noise=dW,
                      check_every=max(1, 100 // r))
        sols.append(traj.final)
    M = assemble_mass(grid)
    ref = sols[0]
    errors = [l2_norm(ref - u, M) for u in sols[1:]]
    return SampleResult(index, ref, sols[1:], errors, rho, fs.a_min_observed, fs.a_max_observed)


def _run_space_sample(cfg, index):
    fine = cfg.grid_ref
    fs, rho = sample_field(cfg, index, fine.K + 2)
    N = cfg.steps_ref
    phi = mode_matrix(cfg.noise, fine.interior)
    gen = rngmod.stream(cfg.master_seed, index, rngmod.NOISE_STREAM)
    dW = np.concatenate([piece.increments @ phi for piece in
                         iter_path_chunks(cfg.noise, N, cfg.dt_ref, gen,
                                          _chunk_rows(N, [1], cfg.J))])
    u0 = _initial(cfg, fine)
    ref = evolve(cfg.model, fine, fs.a, u0, cfg.dt_ref, N, noise=dW, check_every=100).final
    M = assemble_mass(fine)
    sols, errors = [], []
    for n in cfg.n_levels:
        coarse = Grid1D(n - 1)
        r = cfg.n_ref // n
        # coarse nodes are every r-th fine node, boundary included
        a_coarse = fs.a[::r]
        dW_coarse = dW[:, r - 1::r]
        u = evolve(cfg.model, coarse, a_coarse, restrict_to_coarse(u0, fine, coarse),
                   cfg.dt_ref, N, noise=dW_coarse, check_every=100).final
        sols.append(u)
        errors.append(l2_norm(ref - prolong_to_fine(u, coarse, fine), M))
    return SampleResult(index, ref, sols, errors, rho, fs.a_min_observed, fs.a_max_observed)


def sample_errors(result: SampleResult):
    return list(result.errors)


def mean_square_error(per_sample_errors) -> float:
    """Root mean square of per-sample L2 errors."""
    e = np.asarray(list(per_sample_errors), dtype=float)
    if e.size == 0:
        raise ValueError("no sample errors to average")
    return float(np.sqrt(np.mean(e * e)))


@dataclass
class ErrorTable:
    """Rows ``(level_param, u_error, order)``; order compares each row with the previous one."""

    rows: list

    @classmethod
    def from_errors(cls, params, errors):
        rows = []
        for i, (p, e) in enumerate(zip(params, errors)):
            order = None
            if i > 0:
                p0, e0 = params[i - 1], errors[i - 1]
                order = math.log(e0 / e) / math.log(p0 / p) if e > 0 and e0 > 0 else None
            rows.append((float(p), float(e), order))
        return cls(rows)

    @property
    def orders(self):
        return [o for _, _, o in self.rows if o is not None]

    @property
    def mean_order(self):
        o = self.orders
        return float(np.mean(o)) if o else None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level_param", "u_error", "order"])
            for p, e, o in self.rows:
                w.writerow([f"{p:.17g}", f"{e:.17g}", "" if o is None else f"{o:.17g}"])

    def format(self):
        lines = [f"{'level':>12} {'u_error':>12} {'order':>7}"]
        for p, e, o in self.rows:
            lines.append(f"{p:12.4e} {e:12.4e} {'--' if o is None else f'{o:7.3f}':>7}")
        return "\n".join(lines)


@dataclass
class StudyResult:
    config: ExperimentConfig
    table: ErrorTable
    per_sample: np.ndarray
    meta: dict

    def write(self, outdir):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        kind = self.config.kind
        self.table.to_csv(outdir / f"errors_{kind}.csv")
        write_meta(outdir / f"meta_{kind}.txt", self.meta)
        return outdir


def write_meta(path, meta):
    with open(path, "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {v}\n")


def worker_count(default=1):
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


def _run_indexed(args):
    cfg, index = args
    return run_sample(cfg, index)


def convergence_table(cfg: ExperimentConfig, workers=None) -> StudyResult:
    """Run every sample and reduce in sample order."""
    if cfg.kind not in ("converge_time", "converge_space"):
        raise ValueError("convergence_table needs a converge_* config")
    if len(cfg.level_params) < 1:
        raise ValueError("at least one coarse level is required")
    cfg = cfg.resolved()
    workers = worker_count() if workers is None else max(1, int(workers))
    t0 = time.perf_counter()
    jobs = [(cfg, i) for i in range(cfg.samples)]
    if workers == 1:
        results = [_run_indexed(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    per_sample = np.array([r.errors for r in results])
    errors = [mean_square_error(per_sample[:, i]) for i in range(per_sample.shape[1])]
    table = ErrorTable.from_errors(cfg.level_params, errors)
    meta = dict(cfg.describe())
    meta.update({
        "max_rho_minus": max(r.rho_minus for r in results),
        "min_a_observed": min(r.a_min for r in results),
        "max_a_observed": max(r.a_max for r in results),
        "workers": workers,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    })
    return StudyResult(cfg, table, per_sample, meta)


# ---------------------------------------------------------------- demos

@dataclass(frozen=True)
class DemoVariant:
    """One panel of a demo: random field on/off, noise on/off, and overrides."""

    label: str
    random_field: bool = True
    noisy: bool = True
    q: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class DemoConfig:
    model: ModelSpec
    n: int = 128
    dt: float = 1e-5
    q: float = 2.0
    gamma: float = 1.0
    eps_q: float = 0.1
    J: int | None = None
    u0_wavenumber: int = 4
    master_seed: int = 20240101
    sample_index: int = 0
    snapshots: int = 101
    padding: int | None = None
    variants: tuple = ()


def _chunked_noise(noise, N, dt, gen, nodes):
    phi = mode_matrix(noise, nodes)
    rows = max(1, _CHUNK_BUDGET // noise.J)
    chunks = iter_path_chunks(noise, N, dt, gen, rows)
    state = {"start": 0, "block": np.empty((0, len(nodes)))}

    def get(n):
        while n >= state["start"] + len(state["block"]):
            state["start"] += len(state["block"])
            state["block"] = next(chunks).increments @ phi
        return state["block"][n - state["start"]]

    return get


def evolve_demo(demo: DemoConfig, outdir):
    """Run each variant for one fixed sample and write ``field_<label>.csv``.

    Returns ``{label: path}``.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = Grid1D(demo.n - 1)
    N = int(round(demo.model.T / demo.dt))
    u0 = np.sin(demo.u0_wavenumber * np.pi * grid.interior)
    times = np.linspace(0.0, demo.model.T, demo.snapshots)
    paths = {}
    meta = {f"model.{k}": v for k, v in asdict(demo.model).items()}
    meta.update({k: v for k, v in asdict(demo).items() if k not in ("model", "variants")})
    for var in demo.variants:
        model = demo.model
        if var.random_field:
            q = demo.q if var.q is None else var.q
            cov = CovarianceSpec(q, allow_rough=True)
            M = demo.padding
            rho = None
            if M is None:
                M, rho = choose_padding(cov, grid.K + 2)
            plan = make_plan(cov, grid.K + 2, M, rho_limit=None)
            gen = rngmod.stream(demo.master_seed, demo.sample_index // 2, rngmod.FIELD_STREAM)
            z = sample_pair(plan, gen)[demo.sample_index % 2]
            a = lift_to_coefficient(z, model.eps_a).a
            meta[f"{var.label}.padding"] = M
            meta[f"{var.label}.rho_minus"] = plan.rho_minus
        else:
            a = np.full(grid.K + 2, model.eps_a)
        noise = None
        if var.noisy and model.g_kind != "zero":
            gamma = demo.gamma if var.gamma is None else var.gamma
            J = demo.J or default_truncation(grid.h, gamma)
            spec = NoiseSpec(gamma=gamma, eps_q=demo.eps_q, J=J)
            gen = rngmod.stream(demo.master_seed, demo.sample_index, rngmod.NOISE_STREAM)
            noise = _chunked_noise(spec, N, demo.dt, gen, grid.interior)
            meta[f"{var.label}.J"] = J
        else:
            model = replace(model, g_kind="zero")
        traj = evolve(model, grid, a, u0, demo.dt, N, noise=noise,
                      snapshot_times=times, check_every=100)
        path = outdir / f"field_{var.label}.csv"
        write_snapshots(path, grid, traj.times, traj.snapshots)
        paths[var.label] = path
    write_meta(outdir / "meta_evolve_demo.txt", meta)
    return paths


def write_snapshots(path, grid, times, snaps):
    x = grid.nodes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        for t, u in zip(times, snaps):
            full = np.concatenate([[0.0], u, [0.0]])
            for xi, ui in zip(x, full):
                w.writerow([f"{t:.17g}", f"{xi:.17g}", f"{ui:.17g}"])


def read_snapshots(path):
    """``(times, x, U)`` with ``U[i]`` the full nodal vector at ``times[i]``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    x = data[data[:, 0] == times[0], 1]
    U = data[:, 2].reshape(len(times), len(x))
    return times, x, U
