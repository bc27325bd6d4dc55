"""Compiled trajectory kernels for the benchmark models.

The readable one-step maps in :mod:`samplelab.dynamics` are the contract;
these numba kernels are the throughput path the harness uses for long
runs. Each kernel consumes pre-drawn noise blocks in exactly the order the
generic steppers draw from a NoiseStream (one vector per step, priming
draws taken outside the kernel), so matched-seed trajectories agree; the
test suite asserts that equivalence.

Kernels assume unit masses (the studies set M = I); general masses stay in
the generic steppers. State updates happen in place, chunk by chunk, so
noise for arbitrarily long trajectories never has to fit in memory at
once.

Return convention: every chunk kernel returns ``(total_samples,
steps_done, diverged)`` and mutates its state and histogram arrays.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# method ids for the Langevin kernels
BAOAB, ABOBA, SPV, BBK = 0, 1, 2, 3
# method ids for the Brownian kernels
EULER_MARUYAMA, BAOAB_LIMIT = 0, 1
# cluster kinds
MORSE, LJ = 0, 1

DIVERGENCE_THRESHOLD = 1e100

LANGEVIN_IDS = {"baoab": BAOAB, "aboba": ABOBA, "spv": SPV, "bbk": BBK}
BROWNIAN_IDS = {"euler-maruyama": EULER_MARUYAMA, "baoab-limit": BAOAB_LIMIT}


@njit(cache=True)
def _osc_grad(x):
    return x * x * x + 5.0 * math.cos(1.0 + 5.0 * x)


@njit(cache=True)
def _bin_scalar(x, counts, lo, inv_width):
    # half-open bins [lo + k/inv_width, lo + (k+1)/inv_width)
    if lo <= x:
        k = int((x - lo) * inv_width)
        if k < counts.shape[0]:
            counts[k] += 1


@njit(cache=True)
def langevin_osc_chunk(method, x, p, g, prev_r, dt, gamma, kBT,
                       c1, c2, c3, noise, counts, lo, hi,
                       step0, burn_steps, stride, total):
    """Advance the 1D oscillator by len(noise) Langevin steps.

    ``g`` is the gradient at the incoming x (recomputed bitwise-identically
    at chunk boundaries). ``prev_r`` is BBK's carried draw; ignored by the
    other methods. Returns (x, p, g, prev_r, total, steps_done, diverged).
    """
    n = noise.shape[0]
    inv_width = counts.shape[0] / (hi - lo)
    half = dt / 2.0
    amp_bbk = math.sqrt(2.0 * dt * kBT * gamma)
    for i in range(n):
        r = noise[i]
        if method == BAOAB:
            p -= half * g
            x += half * p
            p = c1 * p + c3 * r
            x += half * p
            if abs(x) > DIVERGENCE_THRESHOLD:
                return x, p, g, prev_r, total, i, True
            g = _osc_grad(x)
            p -= half * g
        elif method == ABOBA:
            xh = x + half * p
            if abs(xh) > DIVERGENCE_THRESHOLD:
                return xh, p, g, prev_r, total, i, True
            gh = _osc_grad(xh)
            p -= half * gh
            p = c1 * p + c3 * r
            p -= half * gh
            x = xh + half * p
        elif method == SPV:
            xh = x + half * p
            if abs(xh) > DIVERGENCE_THRESHOLD:
                return xh, p, g, prev_r, total, i, True
            gh = _osc_grad(xh)
            p = c1 * p - c2 * gh + c3 * r
            x = xh + half * p
        else:  # BBK
            ph = (1.0 - dt * gamma / 2.0) * p - half * g + amp_bbk * prev_r / 2.0
            x += dt * ph
            if abs(x) > DIVERGENCE_THRESHOLD:
                return x, p, g, prev_r, total, i, True
            g = _osc_grad(x)
            p = (ph - half * g + amp_bbk * r / 2.0) / (1.0 + dt * gamma / 2.0)
            prev_r = r
        step = step0 + i
        if step >= burn_steps and (step - burn_steps) % stride == 0:
            _bin_scalar(x, counts, lo, inv_width)
            total += 1
        if abs(x) > DIVERGENCE_THRESHOLD:
            return x, p, g, prev_r, total, i + 1, True
    return x, p, g, prev_r, total, n, False


@njit(cache=True)
def brownian_osc_chunk(method, x, prev_r, h, kBT, noise, counts, lo, hi,
                       step0, burn_steps, stride, total):
    """Advance the 1D oscillator by len(noise) Brownian steps.

    ``prev_r`` is the limit method's carried draw (primed by the caller);
    ignored by Euler-Maruyama. Returns (x, prev_r, total, steps_done,
    diverged).
    """
    n = noise.shape[0]
    inv_width = counts.shape[0] / (hi - lo)
    amp_em = math.sqrt(2.0 * kBT * h)
    amp_lim = math.sqrt(kBT * h / 2.0)
    for i in range(n):
        g = _osc_grad(x)
        r = noise[i]
        if method == EULER_MARUYAMA:
            x = x - h * g + amp_em * r
        else:
            x = x - h * g + amp_lim * (prev_r + r)
            prev_r = r
        if abs(x) > DIVERGENCE_THRESHOLD:
            return x, prev_r, total, i + 1, True
        step = step0 + i
        if step >= burn_steps and (step - burn_steps) % stride == 0:
            _bin_scalar(x, counts, lo, inv_width)
            total += 1
    return x, prev_r, total, n, False


@njit(cache=True)
def _cluster_grad(kind, x, par_a, par_eps, rm, g):
    """Gradient of the 7-atom cluster potential into g; True if degenerate."""
    for k in range(g.shape[0]):
        g[k] = 0.0
    for i in range(7):
        for j in range(i + 1, 7):
            dx = x[2 * i] - x[2 * j]
            dy = x[2 * i + 1] - x[2 * j + 1]
            r = math.sqrt(dx * dx + dy * dy)
            if r < 1e-12:
                return True
            if kind == MORSE:
                e = math.exp(-par_a * (r - rm))
                dphi = 2.0 * par_a * e * (1.0 - e)
            else:
                s3 = (rm / r) ** 3
                s6 = s3 * s3
                dphi = -12.0 * par_eps * (s6 * s6 - s6) / r
            fac = dphi / r
            g[2 * i] += fac * dx
            g[2 * i + 1] += fac * dy
            g[2 * j] -= fac * dx
            g[2 * j + 1] -= fac * dy
    if kind == LJ:
        for k in range(g.shape[0]):
            g[k] += x[k] / 4.0
    return False


@njit(cache=True)
def _bin_pair_distances(x, counts, lo, inv_width):
    nb = counts.shape[0]
    binned = 0
    for i in range(7):
        for j in range(i + 1, 7):
            dx = x[2 * i] - x[2 * j]
            dy = x[2 * i + 1] - x[2 * j + 1]
            r = math.sqrt(dx * dx + dy * dy)
            if lo <= r:
                k = int((r - lo) * inv_width)
                if k < nb:
                    counts[k] += 1
            binned += 1
    return binned


@njit(cache=True)
def brownian_cluster_chunk(method, kind, x, prev_r, par_a, par_eps, rm,
                           h, kBT, noise, counts, lo, hi,
                           step0, burn_steps, stride, total):
    """Advance a 7-atom cluster by noise.shape[0] Brownian steps.

    Bins all 21 pair distances every ``stride`` steps after burn-in.
    Returns (total, steps_done, diverged); x and prev_r update in place.
    """
    n = noise.shape[0]
    dim = x.shape[0]
    inv_width = counts.shape[0] / (hi - lo)
    amp_em = math.sqrt(2.0 * kBT * h)
    amp_lim = math.sqrt(kBT * h / 2.0)
    g = np.empty(dim)
    for i in range(n):
        degenerate = _cluster_grad(kind, x, par_a, par_eps, rm, g)
        if degenerate:
            return total, i, True
        if method == EULER_MARUYAMA:
            for k in range(dim):
                x[k] = x[k] - h * g[k] + amp_em * noise[i, k]
        else:
            for k in range(dim):
                x[k] = x[k] - h * g[k] + amp_lim * (prev_r[k] + noise[i, k])
                prev_r[k] = noise[i, k]
        for k in range(dim):
            if abs(x[k]) > DIVERGENCE_THRESHOLD:
                return total, i + 1, True
        step = step0 + i
        if step >= burn_steps and (step - burn_steps) % stride == 0:
            total += _bin_pair_distances(x, counts, lo, inv_width)
    return total, n, False


@njit(cache=True)
def langevin_cluster_chunk(method, kind, x, p, g, prev_r, par_a, par_eps, rm,
                           dt, gamma, kBT, c1, c2, c3, noise, counts, lo, hi,
                           step0, burn_steps, stride, total):
    """Advance a 7-atom cluster by noise.shape[0] Langevin steps.

    Same method ids as langevin_osc_chunk. ``g`` must hold the gradient at
    the incoming x. Returns (total, steps_done, diverged); x, p, g, prev_r
    update in place.
    """
    n = noise.shape[0]
    dim = x.shape[0]
    inv_width = counts.shape[0] / (hi - lo)
    half = dt / 2.0
    amp_bbk = math.sqrt(2.0 * dt * kBT * gamma)
    gh = np.empty(dim)
    for i in range(n):
        if method == BAOAB:
            for k in range(dim):
                p[k] -= half * g[k]
                x[k] += half * p[k]
                p[k] = c1 * p[k] + c3 * noise[i, k]
                x[k] += half * p[k]
            degenerate = _cluster_grad(kind, x, par_a, par_eps, rm, g)
            if degenerate:
                return total, i, True
            for k in range(dim):
                p[k] -= half * g[k]
        elif method == ABOBA:
            for k in range(dim):
                x[k] += half * p[k]
            degenerate = _cluster_grad(kind, x, par_a, par_eps, rm, gh)
            if degenerate:
                return total, i, True
            for k in range(dim):
                ph = p[k] - half * gh[k]
                ph = c1 * ph + c3 * noise[i, k]
                p[k] = ph - half * gh[k]
                x[k] += half * p[k]
        elif method == SPV:
            for k in range(dim):
                x[k] += half * p[k]
            degenerate = _cluster_grad(kind, x, par_a, par_eps, rm, gh)
            if degenerate:
                return total, i, True
            for k in range(dim):
                p[k] = c1 * p[k] - c2 * gh[k] + c3 * noise[i, k]
                x[k] += half * p[k]
        else:  # BBK
            for k in range(dim):
                ph = (1.0 - dt * gamma / 2.0) * p[k] - half * g[k] \
                    + amp_bbk * prev_r[k] / 2.0
                x[k] += dt * ph
                p[k] = ph
            degenerate = _cluster_grad(kind, x, par_a, par_eps, rm, g)
            if degenerate:
                return total, i, True
            for k in range(dim):
                p[k] = (p[k] - half * g[k] + amp_bbk * noise[i, k] / 2.0) \
                    / (1.0 + dt * gamma / 2.0)
                prev_r[k] = noise[i, k]
        for k in range(dim):
            if abs(x[k]) > DIVERGENCE_THRESHOLD:
                return total, i + 1, True
        step = step0 + i
        if step >= burn_steps and (step - burn_steps) % stride == 0:
            total += _bin_pair_distances(x, counts, lo, inv_width)
    return total, n, False
