"""Declarative experiment orchestration.

An ExperimentSpec describes one study: model, methods, stepsizes, friction,
temperature, duration (physical time; steps = round(t_total / dt)),
replicas and seed. The harness runs every (method, stepsize, gamma,
replica) cell on a deterministic noise stream, merges replica histograms
in a fixed order, measures errors against a reference distribution, fits
convergence slopes, and emits CSV.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import make_model
from .reference import (DEFAULT_RDF_RANGE, ReferenceDistribution,
                        quadrature_bin_probabilities, simulated_reference_rdf)
from .rng import NoiseStream
from .stats import Histogram, ensemble_variance, fit_loglog_slope, l1_bin_error
from .trajectories import run_histogram_trajectory

CSV_COLUMNS = ("model", "method", "dt", "gamma", "kBT", "t_total", "replicas",
               "seed", "error", "variance", "diverged", "steps", "wall_s")

# Reference trajectories derive their seed from the study seed; keeping the
# offset fixed means reference noise never aliases a study stream.
REFERENCE_SEED_OFFSET = 0x5EED0FF5


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class BinSpec:
    count: int
    lo: float
    hi: float

    def histogram(self) -> Histogram:
        return Histogram.equal_bins(self.count, self.lo, self.hi)


DEFAULT_BINS = {
    "oscillator": BinSpec(20, -3.5, 3.5),
    "morse": BinSpec(20, *DEFAULT_RDF_RANGE["morse"]),
    "lj": BinSpec(20, *DEFAULT_RDF_RANGE["lj"]),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Full declarative description of one study."""

    model: str
    methods: tuple[str, ...]
    stepsizes: tuple[float, ...]
    gammas: tuple[float, ...]
    kBT: float
    t_total: float
    burn_in_fraction: float = 0.1
    replicas: int = 1
    seed: int = 0
    bins: BinSpec | None = None
    stride: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.stepsizes or any(dt <= 0 for dt in self.stepsizes):
            raise ConfigError("stepsizes must be positive")
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ConfigError("gamma values must be positive")
        if self.kBT <= 0 or self.t_total <= 0:
            raise ConfigError("kBT and t_total must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigError("burn_in_fraction must be in [0, 1)")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        for dt in self.stepsizes:
            if self.steps_for(dt) < 1:
                raise ConfigError(f"t_total={self.t_total} gives no steps at dt={dt}")

    def steps_for(self, dt: float) -> int:
        return round(self.t_total / dt)

    def burn_steps_for(self, dt: float) -> int:
        return int(self.steps_for(dt) * self.burn_in_fraction)

    def bin_spec(self) -> BinSpec:
        return self.bins if self.bins is not None else DEFAULT_BINS[self.model]

    def cells(self) -> list[tuple[str, float, float]]:
        """Deterministic cell order: method (as listed), dt asc, gamma asc."""
        return [(m, dt, g)
                for m in self.methods
                for dt in sorted(self.stepsizes)
                for g in sorted(self.gammas)]


_SPEC_KEYS = {"model", "methods", "stepsizes", "gamma", "kBT", "t_total",
              "burn_in_fraction", "replicas", "seed", "stride",
              "bins.count", "bins.lo", "bins.hi"}


def parse_config(text: str) -> ExperimentSpec:
    """Parse flat key = value config text; unknown keys are errors."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SPEC_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    def need(key):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
        return raw[key]

    def floats(value):
        try:
            return tuple(float(v) for v in value.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"bad numeric list {value!r}") from exc

    def one_float(key, default=None):
        if key not in raw:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return float(raw[key])
        except ValueError as exc:
            raise ConfigError(f"bad number for {key!r}: {raw[key]!r}") from exc

    def one_int(key, default):
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError as exc:
            raise ConfigError(f"bad integer for {key!r}: {raw[key]!r}") from exc

    model = need("model")
    if model not in DEFAULT_BINS:
        raise ConfigError(f"unknown model {model!r}")
    methods = tuple(m for m in need("methods").replace(",", " ").split())

    bins = None
    bin_keys = [k for k in ("bins.count", "bins.lo", "bins.hi") if k in raw]
    if bin_keys:
        if len(bin_keys) != 3:
            raise ConfigError("bins.count, bins.lo and bins.hi must be given together")
        bins = BinSpec(one_int("bins.count", None), one_float("bins.lo"),
                       one_float("bins.hi"))
        if bins.count < 1 or bins.hi <= bins.lo:
            raise ConfigError("bins must have count >= 1 and hi > lo")

    try:
        return ExperimentSpec(
            model=model,
            methods=methods,
            stepsizes=floats(need("stepsizes")),
            gammas=floats(raw.get("gamma", "1")),
            kBT=one_float("kBT", 1.0),
            t_total=one_float("t_total"),
            burn_in_fraction=one_float("burn_in_fraction", 0.1),
            replicas=one_int("replicas", 1),
            seed=one_int("seed", 0),
            bins=bins,
            stride=one_int("stride", 1),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunResult:
    """Outcome of one (method, dt, gamma) study cell, replicas merged."""

    model: str
    method: str
    dt: float
    gamma: float
    kBT: float
    t_total: float
    replicas: int
    seed: int
    error: float | None
    variance: float | None
    diverged: bool
    steps: int
    wall_s: float
    histogram: Histogram | None = None
    # per-replica checkpoint snapshots, populated by checkpointed studies
    checkpoints: list | None = None


def _replica_job(args):
    (model_name, method, dt, gamma, kBT, n_steps, burn_steps, stride,
     bins, seed, stream_id, checkpoint_steps) = args
    model = make_model(model_name)
    stream = NoiseStream(seed, stream_id)
    start = time.perf_counter()
    result = run_histogram_trajectory(model, method, dt, gamma, kBT, n_steps,
                                      burn_steps, stride, bins.histogram(),
                                      stream, checkpoint_steps)
    wall = time.perf_counter() - start
    return (result.histogram.counts, result.histogram.total_samples,
            result.steps_completed, result.diverged, wall, result.checkpoints)


def _map_jobs(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [_replica_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replica_job, jobs))


def default_workers() -> int:
    env = os.environ.get("SAMPLE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_study(spec: ExperimentSpec, reference: ReferenceDistribution | None = None,
              workers: int = 1, cache_dir=None,
              checkpoint_steps_for=None) -> list[RunResult]:
    """Run every cell of the study and measure errors against the reference.

    Replica histograms merge in replica order; a diverged replica flags the
    whole cell (its error is never silently compared). Returns one
    RunResult per cell, in deterministic cell order.
    """
    if reference is None:
        reference = build_reference(spec, cache_dir=cache_dir)
    bins = spec.bin_spec()
    cells = spec.cells()
    jobs = []
    for cell_idx, (method, dt, gamma) in enumerate(cells):
        n_steps = spec.steps_for(dt)
        burn = spec.burn_steps_for(dt)
        marks = checkpoint_steps_for(n_steps) if checkpoint_steps_for else None
        for rep in range(spec.replicas):
            jobs.append((spec.model, method, dt, gamma, spec.kBT, n_steps,
                         burn, spec.stride, bins, spec.seed,
                         cell_idx * spec.replicas + rep, marks))
    outputs = _map_jobs(jobs, workers)

    results = []
    for cell_idx, (method, dt, gamma) in enumerate(cells):
        cell_out = outputs[cell_idx * spec.replicas:(cell_idx + 1) * spec.replicas]
        merged = bins.histogram()
        freqs = []
        diverged = False
        steps = 0
        wall = 0.0
        for counts, total, steps_done, rep_diverged, rep_wall, _ in cell_out:
            merged = merged.merge(Histogram(merged.edges, counts, total))
            steps += steps_done
            wall += rep_wall
            diverged = diverged or rep_diverged
            if total > 0:
                freqs.append(counts / total)
        error = variance = None
        if not diverged and merged.total_samples > 0:
            error = l1_bin_error(merged, reference.probabilities)
            if len(freqs) >= 2:
                variance = ensemble_variance(np.array(freqs))
        results.append(RunResult(
            model=spec.model, method=method, dt=dt, gamma=gamma, kBT=spec.kBT,
            t_total=spec.t_total, replicas=spec.replicas, seed=spec.seed,
            error=error, variance=variance, diverged=diverged, steps=steps,
            wall_s=wall, histogram=merged))
        results[-1].checkpoints = [o[5] for o in cell_out]  # per-replica snapshots
    return results


def build_reference(spec: ExperimentSpec, cache_dir=None) -> ReferenceDistribution:
    """Reference distribution for a study: quadrature for 1D models,
    high-resolution simulation (stepsize <= smallest study stepsize / 3)
    for clusters."""
    model = make_model(spec.model)
    bins = spec.bin_spec()
    edges = bins.histogram().edges
    if model.dimension == 1:
        return quadrature_bin_probabilities(model, 1.0 / spec.kBT, edges)
    h_ref = min(spec.stepsizes) / 3.0
    return simulated_reference_rdf(
        model, spec.kBT, h_ref, spec.t_total, spec.replicas,
        spec.seed + REFERENCE_SEED_OFFSET, bins.histogram(),
        spec.burn_in_fraction, spec.stride, cache_dir=cache_dir)


def convergence_study(spec: ExperimentSpec,
                      reference: ReferenceDistribution | None = None,
                      workers: int = 1, cache_dir=None):
    """Run the study and fit a log-log convergence slope per (method, gamma).

    Diverged cells are skipped in the fits but kept in the results.
    Returns (results, slopes) with slopes[(method, gamma)] = fitted slope.
    """
    if len(spec.stepsizes) < 3:
        raise ConfigError("a convergence study needs at least 3 stepsizes")
    results = run_study(spec, reference=reference, workers=workers,
                        cache_dir=cache_dir)
    slopes = {}
    for method in spec.methods:
        for gamma in spec.gammas:
            pts = [(r.dt, r.error) for r in results
                   if r.method == method and r.gamma == gamma
                   and not r.diverged and r.error is not None and r.error > 0]
            if len(pts) >= 3:
                slope, _ = fit_loglog_slope([p[0] for p in pts],
                                            [p[1] for p in pts])
                slopes[(method, gamma)] = slope
    return results, slopes


def default_checkpoints(n_steps: int, n_checkpoints: int = 8) -> list[int]:
    """0 plus log-spaced cumulative step counts up to n_steps."""
    marks = np.unique(np.round(np.geomspace(
        max(1, n_steps // 2 ** (n_checkpoints - 1)), n_steps,
        n_checkpoints)).astype(int))
    return [0] + marks.tolist()


def gamma_sweep(spec: ExperimentSpec,
                reference: ReferenceDistribution | None = None,
                workers: int = 1, cache_dir=None, n_checkpoints: int = 8):
    """Error at sample-count checkpoints for each (method, gamma) at fixed dt.

    Returns rows (method, dt, gamma, samples, error); error is None at the
    empty-history checkpoint.
    """
    if len(spec.stepsizes) != 1:
        raise ConfigError("gamma sweep uses exactly one stepsize")
    if reference is None:
        reference = build_reference(spec, cache_dir=cache_dir)
    results = run_study(spec, reference=reference, workers=workers,
                        cache_dir=cache_dir,
                        checkpoint_steps_for=lambda n: default_checkpoints(
                            n, n_checkpoints))
    rows = []
    for r in results:
        per_replica = r.checkpoints
        n_marks = len(per_replica[0]) if per_replica and per_replica[0] else 0
        for mark in range(n_marks):
            total = sum(rep[mark][0] for rep in per_replica)
            if total == 0:
                rows.append((r.method, r.dt, r.gamma, 0, None))
                continue
            counts = sum(rep[mark][1] for rep in per_replica)
            freqs = counts / total
            err = float(np.mean(np.abs(freqs - reference.probabilities)))
            rows.append((r.method, r.dt, r.gamma, total, err))
    return rows


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(results: list[RunResult], path) -> None:
    """Write study results as CSV, one row per cell, deterministic order."""
    lines = [",".join(CSV_COLUMNS)]
    for r in results:
        row = (r.model, r.method, r.dt, r.gamma, r.kBT, r.t_total, r.replicas,
               r.seed, r.error, r.variance, r.diverged, r.steps,
               round(r.wall_s, 3))
        lines.append(",".join(_fmt(v) for v in row))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def emit_gamma_sweep_csv(rows, spec: ExperimentSpec, path) -> None:
    lines = ["model,method,dt,gamma,kBT,samples,error"]
    for method, dt, gamma, samples, error in rows:
        lines.append(",".join(_fmt(v) for v in
                              (spec.model, method, dt, gamma, spec.kBT,
                               samples, error)))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc
