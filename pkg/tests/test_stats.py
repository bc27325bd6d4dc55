"""Histograms, error metrics, autocovariance, slope fits."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samplelab.stats import (EmptyHistogramError, Histogram, bin_samples,
                             ensemble_variance, fit_loglog_slope,
                             l1_bin_error, lag_autocovariance, pair_distances,
                             rdf_accumulate)


class TestHistogram:
    def test_equal_bins_edges(self):
        h = Histogram.equal_bins(4, 0.0, 1.0)
        assert np.allclose(h.edges, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert h.n_bins == 4

    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError):
            Histogram(np.array([0.0, 0.0, 1.0]))
        with pytest.raises(ValueError):
            Histogram(np.array([1.0]))

    def test_half_open_bins(self):
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0),
                        [0.0, 0.5, 0.25])
        # 0.5 sits exactly on an interior edge and belongs to the right bin
        assert list(h.counts) == [2, 1]

    def test_right_edge_excluded(self):
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0), [1.0])
        assert h.counts.sum() == 0
        assert h.total_samples == 1

    def test_out_of_range_counts_toward_total_only(self):
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0),
                        [-5.0, 0.1, 7.0])
        assert h.counts.sum() == 1
        assert h.total_samples == 3
        assert np.allclose(h.frequencies(), [1 / 3, 0.0])

    def test_empty_frequencies_raise(self):
        with pytest.raises(EmptyHistogramError):
            Histogram.equal_bins(2, 0.0, 1.0).frequencies()

    def test_merge_adds_counts_and_totals(self):
        base = Histogram.equal_bins(2, 0.0, 1.0)
        a = bin_samples(base, [0.1, 0.2])
        b = bin_samples(base, [0.7, 5.0])
        m = a.merge(b)
        assert list(m.counts) == [2, 1]
        assert m.total_samples == 4

    def test_merge_rejects_different_edges(self):
        with pytest.raises(ValueError):
            Histogram.equal_bins(2, 0.0, 1.0).merge(
                Histogram.equal_bins(2, 0.0, 2.0))

    @given(st.lists(st.lists(st.floats(-2, 2), min_size=1, max_size=30),
                    min_size=2, max_size=4))
    @settings(max_examples=50, deadline=None)
    def test_merge_order_invariance(self, batches):
        # merging per-batch histograms in any order == binning everything
        base = Histogram.equal_bins(5, -1.0, 1.0)
        parts = [bin_samples(base, b) for b in batches]
        fwd = parts[0]
        for p in parts[1:]:
            fwd = fwd.merge(p)
        rev = parts[-1]
        for p in reversed(parts[:-1]):
            rev = rev.merge(p)
        flat = bin_samples(base, [v for b in batches for v in b])
        for h in (fwd, rev):
            assert np.array_equal(h.counts, flat.counts)
            assert h.total_samples == flat.total_samples

    def test_text_round_trip(self):
        h = bin_samples(Histogram.equal_bins(3, -1.0, 2.0),
                        [-0.5, 0.3, 0.4, 1.9, 99.0])
        text = h.to_text(meta={"method": "baoab", "dt": "0.1"})
        back, meta = Histogram.from_text(text)
        assert np.array_equal(back.edges, h.edges)
        assert np.array_equal(back.counts, h.counts)
        assert back.total_samples == h.total_samples
        assert meta == {"method": "baoab", "dt": "0.1"}


class TestErrorMetrics:
    def test_l1_hand_example(self):
        # frequencies (0.5, 0.5) vs exact (1, 0): mean |diff| = 0.5
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0), [0.1, 0.9])
        assert l1_bin_error(h, [1.0, 0.0]) == pytest.approx(0.5)

    def test_l1_zero_on_match(self):
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0), [0.1, 0.9])
        assert l1_bin_error(h, [0.5, 0.5]) == 0.0

    def test_l1_is_mean_not_sum(self):
        h = bin_samples(Histogram.equal_bins(4, 0.0, 1.0),
                        [0.1, 0.3, 0.6, 0.9])
        exact = np.array([0.5, 0.0, 0.25, 0.25])
        expected = np.mean(np.abs(np.array([0.25] * 4) - exact))
        assert l1_bin_error(h, exact) == pytest.approx(expected)

    def test_l1_rejects_length_mismatch(self):
        h = bin_samples(Histogram.equal_bins(2, 0.0, 1.0), [0.1])
        with pytest.raises(ValueError):
            l1_bin_error(h, [1.0, 0.0, 0.0])

    def test_ensemble_variance_hand_example(self):
        # two runs, one bin apart by 0.2 -> deviations +-0.1 -> mean sq 0.01
        freqs = np.array([[0.6, 0.4], [0.4, 0.6]])
        assert ensemble_variance(freqs) == pytest.approx(0.01)

    def test_ensemble_variance_zero_for_identical_runs(self):
        freqs = np.tile([0.3, 0.7], (3, 1))
        assert ensemble_variance(freqs) == pytest.approx(0.0, abs=1e-30)

    def test_ensemble_variance_needs_two_runs(self):
        with pytest.raises(ValueError):
            ensemble_variance(np.array([[0.5, 0.5]]))


class TestAutocovariance:
    def test_known_ma1_series(self):
        # Z_n = (R_n + R_{n+1})/sqrt(2): cov 1 at lag 0, 1/2 at lag 1, 0 after
        r = np.random.default_rng(7).standard_normal(2_000_001)
        z = (r[:-1] + r[1:]) / np.sqrt(2.0)
        assert lag_autocovariance(z, 0) == pytest.approx(1.0, abs=0.01)
        assert lag_autocovariance(z, 1) == pytest.approx(0.5, abs=0.01)
        assert abs(lag_autocovariance(z, 2)) < 0.01

    def test_deterministic_example(self):
        # alternating +-1 has variance 1 and lag-1 autocovariance -1
        series = np.tile([1.0, -1.0], 50)
        assert lag_autocovariance(series, 0) == pytest.approx(1.0)
        assert lag_autocovariance(series, 1) == pytest.approx(-1.0)

    def test_rejects_bad_lag(self):
        with pytest.raises(ValueError):
            lag_autocovariance([1.0, 2.0, 3.0], -1)
        with pytest.raises(ValueError):
            lag_autocovariance([1.0, 2.0], 1)


class TestSlopeFit:
    def test_exact_quadratic(self):
        dts = np.array([0.1, 0.2, 0.4])
        slope, intercept = fit_loglog_slope(dts, 3.0 * dts ** 2)
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert intercept == pytest.approx(np.log(3.0), abs=1e-12)

    def test_exact_quartic(self):
        dts = np.array([0.1, 0.15, 0.2, 0.3])
        slope, _ = fit_loglog_slope(dts, 0.5 * dts ** 4)
        assert slope == pytest.approx(4.0, abs=1e-12)

    def test_rejects_short_or_nonpositive(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([0.1, 0.2], [1.0, 2.0])
        with pytest.raises(ValueError):
            fit_loglog_slope([0.1, 0.2, 0.3], [1.0, 0.0, 2.0])


class TestPairDistances:
    def test_unit_square(self):
        x = np.array([0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
        d = np.sort(pair_distances(x))
        expected = np.sort([1, 1, 1, 1, np.sqrt(2), np.sqrt(2)])
        assert np.allclose(d, expected)

    def test_seven_atom_count(self):
        from samplelab.models import hexagon_configuration
        assert len(pair_distances(hexagon_configuration())) == 21

    def test_rdf_accumulate_counts_every_pair(self):
        from samplelab.models import hexagon_configuration
        h = rdf_accumulate(Histogram.equal_bins(20, 0.5, 2.5),
                           hexagon_configuration())
        assert h.total_samples == 21
        assert h.counts.sum() == 21  # all hexagon distances are in range

    def test_permutation_invariance(self, rng):
        x = rng.normal(size=14)
        a = np.sort(pair_distances(x))
        perm = rng.permutation(7)
        b = np.sort(pair_distances(x.reshape(-1, 2)[perm].reshape(-1)))
        assert np.allclose(a, b)
