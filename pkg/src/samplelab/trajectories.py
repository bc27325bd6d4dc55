"""Single-trajectory driver: integrate, discard burn-in, bin.

Chooses the compiled kernel path for the benchmark models and the six
named methods, and falls back to the generic one-step maps for arbitrary
splitting strings or custom models. Noise is consumed from the owning
NoiseStream in a fixed order (initial momenta, priming draw if the method
carries one, then one vector per step), so a (seed, stream_id) pair pins
the whole trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dynamics import (ConfigState, PhaseState, UnstableTrajectoryError,
                       is_brownian, make_stepper, ou_coefficients)
from .models import PotentialModel, hexagon_configuration
from .rng import NoiseStream
from .stats import Histogram, bin_samples, rdf_accumulate

CHUNK_STEPS = 1 << 19


@dataclass
class TrajectoryResult:
    histogram: Histogram
    steps_completed: int
    diverged: bool
    # (cumulative binned samples, counts snapshot) per requested checkpoint
    checkpoints: list | None = None


def initial_conditions(model: PotentialModel, method: str, kBT: float,
                       stream: NoiseStream) -> tuple[np.ndarray, np.ndarray | None]:
    """Start-of-run state: 1D starts at the origin, clusters at the hexagon;
    Langevin momenta are drawn from the canonical Gaussian."""
    if model.dimension == 1:
        x0 = np.zeros(1)
    else:
        x0 = hexagon_configuration()
    if is_brownian(method):
        return x0, None
    p0 = math.sqrt(kBT) * stream.normal_vector(model.dimension)
    return x0, p0


def run_histogram_trajectory(model: PotentialModel, method: str, dt: float,
                             gamma: float, kBT: float, n_steps: int,
                             burn_steps: int, stride: int, hist: Histogram,
                             stream: NoiseStream,
                             checkpoint_steps: list[int] | None = None,
                             ) -> TrajectoryResult:
    """Integrate n_steps, binning every ``stride`` steps after burn-in.

    1D models bin the position; clusters bin all pair distances.
    Checkpoints, if given, are cumulative step counts at which a frequency
    snapshot of the histogram so far is recorded.
    """
    if n_steps < 1:
        raise ValueError("need at least one step")
    if burn_steps >= n_steps:
        raise ValueError("burn-in must leave at least one sampled step")
    fast = (method in kernels.LANGEVIN_IDS or method in kernels.BROWNIAN_IDS) \
        and model.kind in ("oscillator", "morse", "lj")
    if fast:
        return _run_kernel(model, method, dt, gamma, kBT, n_steps, burn_steps,
                           stride, hist, stream, checkpoint_steps)
    return _run_generic(model, method, dt, gamma, kBT, n_steps, burn_steps,
                        stride, hist, stream, checkpoint_steps)


def _checkpoint_bounds(n_steps: int, checkpoint_steps: list[int] | None):
    if not checkpoint_steps:
        return []
    bad = [c for c in checkpoint_steps if c < 0 or c > n_steps]
    if bad:
        raise ValueError(f"checkpoints out of range: {bad}")
    return sorted(set(checkpoint_steps))


def _snapshot(hist: Histogram):
    return (hist.total_samples, hist.counts.copy())


def _run_kernel(model, method, dt, gamma, kBT, n_steps, burn_steps, stride,
                hist, stream, checkpoint_steps) -> TrajectoryResult:
    counts = hist.counts.copy()
    lo, hi = float(hist.edges[0]), float(hist.edges[-1])
    total = hist.total_samples
    dim = model.dimension
    marks = _checkpoint_bounds(n_steps, checkpoint_steps)
    snapshots = []

    x0, p0 = initial_conditions(model, method, kBT, stream)
    brownian = is_brownian(method)
    if brownian:
        mid = kernels.BROWNIAN_IDS[method]
        prev_r = stream.normal_vector(dim) if method == "baoab-limit" \
            else np.zeros(dim)
    else:
        mid = kernels.LANGEVIN_IDS[method]
        coeffs = ou_coefficients(gamma, dt, kBT)
        prev_r = stream.normal_vector(dim) if method == "bbk" else np.zeros(dim)

    if dim == 1:
        x = float(x0[0])
        p = float(p0[0]) if p0 is not None else 0.0
        g = float(model.gradient(np.array([x]))[0]) if not brownian else 0.0
        pr = float(prev_r[0])
    else:
        x = x0.copy()
        p = p0.copy() if p0 is not None else np.zeros(dim)
        g = model.gradient(x0) if not brownian else np.zeros(dim)
        pr = prev_r.copy()
        kind = kernels.MORSE if model.kind == "morse" else kernels.LJ
        par_a = getattr(model, "a", 0.0)
        par_eps = getattr(model, "eps", 0.0)
        rm = model.r_m

    done = 0
    diverged = False
    mark_iter = iter(marks)
    next_mark = next(mark_iter, None)
    while done < n_steps and not diverged:
        limit = n_steps if next_mark is None else min(n_steps, next_mark)
        if limit == done:
            tmp = Histogram(hist.edges, counts, total)
            snapshots.append(_snapshot(tmp))
            next_mark = next(mark_iter, None)
            continue
        chunk = min(CHUNK_STEPS, limit - done)
        if dim == 1:
            noise = stream.normal_vector(chunk)
            if brownian:
                x, pr, total, steps, diverged = kernels.brownian_osc_chunk(
                    mid, x, pr, dt, kBT, noise, counts, lo, hi,
                    done, burn_steps, stride, total)
            else:
                x, p, g, pr, total, steps, diverged = kernels.langevin_osc_chunk(
                    mid, x, p, g, pr, dt, gamma, kBT,
                    coeffs.c1, coeffs.c2, coeffs.c3, noise, counts, lo, hi,
                    done, burn_steps, stride, total)
        else:
            noise = stream.normal_block(chunk, dim)
            if brownian:
                total, steps, diverged = kernels.brownian_cluster_chunk(
                    mid, kind, x, pr, par_a, par_eps, rm, dt, kBT,
                    noise, counts, lo, hi, done, burn_steps, stride, total)
            else:
                total, steps, diverged = kernels.langevin_cluster_chunk(
                    mid, kind, x, p, g, pr, par_a, par_eps, rm,
                    dt, gamma, kBT, coeffs.c1, coeffs.c2, coeffs.c3,
                    noise, counts, lo, hi, done, burn_steps, stride, total)
        done += steps
    out = Histogram(hist.edges, counts, total)
    # flush any checkpoints at or past the stopping point
    while next_mark is not None:
        snapshots.append(_snapshot(out))
        next_mark = next(mark_iter, None)
    return TrajectoryResult(out, done, bool(diverged),
                            snapshots if marks else None)


def _run_generic(model, method, dt, gamma, kBT, n_steps, burn_steps, stride,
                 hist, stream, checkpoint_steps) -> TrajectoryResult:
    marks = _checkpoint_bounds(n_steps, checkpoint_steps)
    snapshots = []
    mark_set = set(marks)
    x0, p0 = initial_conditions(model, method, kBT, stream)
    masses = np.ones(model.dimension)
    if is_brownian(method):
        state = ConfigState(x0, masses)
    else:
        state = PhaseState(x0, p0, masses)
    step = make_stepper(method, model, dt, gamma, kBT)
    cluster = model.dimension > 1
    out = hist
    diverged = False
    done = 0
    for i in range(n_steps):
        if i in mark_set:
            snapshots.append(_snapshot(out))
        try:
            state = step(state, stream)
        except UnstableTrajectoryError:
            diverged = True
            done = i + 1
            break
        if i >= burn_steps and (i - burn_steps) % stride == 0:
            out = rdf_accumulate(out, state.x) if cluster \
                else bin_samples(out, state.x)
        done = i + 1
    if not diverged and n_steps in mark_set:
        snapshots.append(_snapshot(out))
    while diverged and len(snapshots) < len(marks):
        snapshots.append(_snapshot(out))
    return TrajectoryResult(out, done, diverged, snapshots if marks else None)
