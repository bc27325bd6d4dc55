"""Trajectory driver: compiled fast path vs generic maps, burn-in
arithmetic, checkpoints, divergence handling."""

import math

import numpy as np
import pytest

from samplelab.models import hexagon_configuration, make_model
from samplelab.rng import NoiseStream
from samplelab.stats import Histogram
from samplelab.trajectories import initial_conditions, run_histogram_trajectory

LANGEVIN = ["baoab", "aboba", "spv", "bbk"]
BROWNIAN = ["euler-maruyama", "baoab-limit"]


class _GenericOnly:
    """Delegating wrapper whose kind disables the compiled fast path."""

    def __init__(self, inner):
        self._inner = inner
        self.kind = "wrapped-" + inner.kind

    @property
    def dimension(self):
        return self._inner.dimension

    @property
    def force_evals(self):
        return self._inner.force_evals

    def energy(self, x):
        return self._inner.energy(x)

    def gradient(self, x):
        return self._inner.gradient(x)

    def tower(self, x):
        return self._inner.tower(x)


def _run(model, method, dt, gamma, kBT, n_steps, hist, seed, **kw):
    return run_histogram_trajectory(model, method, dt, gamma, kBT, n_steps,
                                    kw.pop("burn_steps", 0),
                                    kw.pop("stride", 1), hist,
                                    NoiseStream(seed, 0), **kw)


class TestKernelGenericEquivalence:
    @pytest.mark.parametrize("method", LANGEVIN)
    def test_oscillator_langevin(self, method):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        fast = _run(make_model("oscillator"), method, 0.1, 2.0, 1.0,
                    20_000, hist, seed=101)
        slow = _run(_GenericOnly(make_model("oscillator")), method, 0.1, 2.0,
                    1.0, 20_000, hist, seed=101)
        assert np.array_equal(fast.histogram.counts, slow.histogram.counts)
        assert fast.histogram.total_samples == slow.histogram.total_samples

    @pytest.mark.parametrize("method", BROWNIAN)
    def test_oscillator_brownian(self, method):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        fast = _run(make_model("oscillator"), method, 0.01, 0.0, 1.0,
                    20_000, hist, seed=102)
        slow = _run(_GenericOnly(make_model("oscillator")), method, 0.01, 0.0,
                    1.0, 20_000, hist, seed=102)
        assert np.array_equal(fast.histogram.counts, slow.histogram.counts)

    @pytest.mark.parametrize("model_name,method,dt,gamma", [
        ("morse", "baoab", 0.01, 1.0),
        ("morse", "bbk", 0.01, 1.0),
        ("lj", "aboba", 0.005, 1.0),
        ("morse", "euler-maruyama", 0.005, 0.0),
        ("lj", "baoab-limit", 0.005, 0.0),
        ("morse", "spv", 0.01, 1.0),
    ])
    def test_clusters(self, model_name, method, dt, gamma):
        lo, hi = (0.5, 2.5) if model_name == "morse" else (0.5, 3.5)
        hist = Histogram.equal_bins(20, lo, hi)
        fast = _run(make_model(model_name), method, dt, gamma, 0.1,
                    3_000, hist, seed=103)
        slow = _run(_GenericOnly(make_model(model_name)), method, dt, gamma,
                    0.1, 3_000, hist, seed=103)
        assert np.array_equal(fast.histogram.counts, slow.histogram.counts)
        assert fast.histogram.total_samples == slow.histogram.total_samples


class TestInitialConditions:
    def test_1d_starts_at_origin(self, oscillator):
        x0, p0 = initial_conditions(oscillator, "baoab", 1.0,
                                    NoiseStream(0, 0))
        assert np.array_equal(x0, np.zeros(1))
        assert p0.shape == (1,)

    def test_cluster_starts_at_hexagon(self, morse):
        x0, _ = initial_conditions(morse, "baoab", 1.0, NoiseStream(0, 0))
        assert np.array_equal(x0, hexagon_configuration())

    def test_brownian_has_no_momentum(self, oscillator):
        _, p0 = initial_conditions(oscillator, "euler-maruyama", 1.0,
                                   NoiseStream(0, 0))
        assert p0 is None

    def test_langevin_momentum_is_scaled_draw(self, morse):
        kBT = 0.25
        _, p0 = initial_conditions(morse, "baoab", kBT, NoiseStream(8, 2))
        expected = math.sqrt(kBT) * NoiseStream(8, 2).normal_vector(14)
        assert np.array_equal(p0, expected)


class TestBurnInAndStride:
    def test_sample_count_arithmetic(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "baoab", 0.1, 1.0, 1.0, 100, hist, seed=1,
                 burn_steps=10)
        assert r.steps_completed == 100
        assert r.histogram.total_samples == 90

    @pytest.mark.parametrize("stride,expected", [(1, 90), (3, 30), (7, 13)])
    def test_stride_thins_samples(self, oscillator, stride, expected):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "baoab", 0.1, 1.0, 1.0, 100, hist, seed=1,
                 burn_steps=10, stride=stride)
        assert r.histogram.total_samples == expected

    def test_stride_consistency_between_paths(self):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        fast = _run(make_model("oscillator"), "aboba", 0.1, 1.0, 1.0, 5_000,
                    hist, seed=9, burn_steps=500, stride=4)
        slow = _run(_GenericOnly(make_model("oscillator")), "aboba", 0.1, 1.0,
                    1.0, 5_000, hist, seed=9, burn_steps=500, stride=4)
        assert np.array_equal(fast.histogram.counts, slow.histogram.counts)

    def test_cluster_bins_pair_distances(self, morse):
        hist = Histogram.equal_bins(20, 0.5, 2.5)
        r = _run(morse, "baoab", 0.01, 1.0, 0.1, 50, hist, seed=2)
        assert r.histogram.total_samples == 50 * 21

    def test_rejects_burn_in_consuming_everything(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        with pytest.raises(ValueError):
            _run(oscillator, "baoab", 0.1, 1.0, 1.0, 10, hist, seed=1,
                 burn_steps=10)


class TestCheckpoints:
    def test_snapshots_are_cumulative(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "baoab", 0.1, 1.0, 1.0, 1_000, hist, seed=5,
                 checkpoint_steps=[100, 500, 1_000])
        totals = [t for t, _ in r.checkpoints]
        assert totals == [100, 500, 1_000]
        counts_100, counts_1000 = r.checkpoints[0][1], r.checkpoints[2][1]
        assert counts_100.sum() <= counts_1000.sum()
        assert np.array_equal(counts_1000, r.histogram.counts)

    def test_checkpoints_match_across_paths(self):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        marks = [1_000, 2_500, 5_000]
        fast = _run(make_model("oscillator"), "baoab", 0.1, 1.0, 1.0, 5_000,
                    hist, seed=6, checkpoint_steps=marks)
        slow = _run(_GenericOnly(make_model("oscillator")), "baoab", 0.1, 1.0,
                    1.0, 5_000, hist, seed=6, checkpoint_steps=marks)
        for (ta, ca), (tb, cb) in zip(fast.checkpoints, slow.checkpoints):
            assert ta == tb
            assert np.array_equal(ca, cb)

    def test_no_checkpoints_means_none(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "baoab", 0.1, 1.0, 1.0, 100, hist, seed=1)
        assert r.checkpoints is None

    def test_out_of_range_checkpoint_rejected(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        with pytest.raises(ValueError):
            _run(oscillator, "baoab", 0.1, 1.0, 1.0, 100, hist, seed=1,
                 checkpoint_steps=[200])


class TestDivergence:
    def test_unstable_run_is_reported(self, oscillator):
        # the cubic force makes the explicit update blow up at this stepsize
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "euler-maruyama", 5.0, 0.0, 1.0, 10_000, hist,
                 seed=3)
        assert r.diverged
        assert r.steps_completed < 10_000

    def test_divergence_agrees_across_paths(self):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        fast = _run(make_model("oscillator"), "euler-maruyama", 5.0, 0.0, 1.0,
                    10_000, hist, seed=3)
        slow = _run(_GenericOnly(make_model("oscillator")), "euler-maruyama",
                    5.0, 0.0, 1.0, 10_000, hist, seed=3)
        assert fast.diverged and slow.diverged

    def test_stable_run_not_flagged(self, oscillator):
        hist = Histogram.equal_bins(20, -3.5, 3.5)
        r = _run(oscillator, "baoab", 0.1, 1.0, 1.0, 1_000, hist, seed=4)
        assert not r.diverged
        assert r.steps_completed == 1_000
