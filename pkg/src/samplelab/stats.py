"""Histograms and the error metrics of the benchmark studies.

Bins are half-open [e_i, e_{i+1}); samples outside the edge range count
toward total_samples but land in no bin, so in-range frequencies measure
the mass each bin holds under the full density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EmptyHistogramError(ValueError):
    """Frequencies requested from a histogram with no samples."""


@dataclass
class Histogram:
    """Bin edges plus integer counts; the source of all error metrics."""

    edges: np.ndarray
    counts: np.ndarray = None
    total_samples: int = 0

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if self.edges.ndim != 1 or len(self.edges) < 2:
            raise ValueError("edges must be a 1D array of at least 2 values")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if self.counts is None:
            self.counts = np.zeros(len(self.edges) - 1, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if len(self.counts) != len(self.edges) - 1:
                raise ValueError("counts length must be len(edges) - 1")

    @classmethod
    def equal_bins(cls, count: int, lo: float, hi: float) -> "Histogram":
        return cls(np.linspace(lo, hi, count + 1))

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def frequencies(self) -> np.ndarray:
        if self.total_samples == 0:
            raise EmptyHistogramError("histogram holds no samples")
        return self.counts / self.total_samples

    def merge(self, other: "Histogram") -> "Histogram":
        """Add counts and totals of a histogram with identical edges."""
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram(self.edges, self.counts + other.counts,
                         self.total_samples + other.total_samples)

    def to_text(self, meta: dict | None = None) -> str:
        """Serialize in the histogram file format (# headers + index/count rows)."""
        lines = ["# edges: " + " ".join(repr(float(e)) for e in self.edges),
                 f"# total: {self.total_samples}"]
        for key, value in (meta or {}).items():
            lines.append(f"# meta: {key}={value}")
        for i, c in enumerate(self.counts):
            lines.append(f"{i} {c}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple["Histogram", dict]:
        edges = None
        total = 0
        meta = {}
        rows = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("# edges:"):
                edges = np.array([float(v) for v in line[len("# edges:"):].split()])
            elif line.startswith("# total:"):
                total = int(line[len("# total:"):].strip())
            elif line.startswith("# meta:"):
                key, _, value = line[len("# meta:"):].strip().partition("=")
                meta[key] = value
            elif not line.startswith("#"):
                idx, count = line.split()
                rows[int(idx)] = int(count)
        if edges is None:
            raise ValueError("missing '# edges:' header")
        counts = np.zeros(len(edges) - 1, dtype=np.int64)
        for idx, count in rows.items():
            counts[idx] = count
        return cls(edges, counts, total), meta


def bin_samples(h: Histogram, values) -> Histogram:
    """Bin values into h (new histogram); out-of-range values only raise the total."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    idx = np.searchsorted(h.edges, values, side="right") - 1
    in_range = (idx >= 0) & (idx < h.n_bins) & (values < h.edges[-1])
    counts = h.counts + np.bincount(idx[in_range], minlength=h.n_bins).astype(np.int64)
    return Histogram(h.edges, counts, h.total_samples + len(values))


def pair_distances(x) -> np.ndarray:
    """All n(n-1)/2 interatomic distances of a flat planar configuration."""
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    n = len(x)
    i, j = np.triu_indices(n, k=1)
    d = x[i] - x[j]
    return np.hypot(d[:, 0], d[:, 1])


def rdf_accumulate(h: Histogram, x) -> Histogram:
    """Bin every pair distance of a cluster snapshot into h."""
    return bin_samples(h, pair_distances(x))


def l1_bin_error(observed: Histogram, exact) -> float:
    """Mean absolute per-bin difference between observed and exact frequencies."""
    exact = np.asarray(exact, dtype=float)
    freqs = observed.frequencies()
    if len(exact) != len(freqs):
        raise ValueError("exact probabilities must match the bin count")
    return float(np.mean(np.abs(freqs - exact)))


def ensemble_variance(freqs) -> float:
    """Mean squared deviation of per-run bin frequencies from the run mean.

    freqs is an N x M matrix (N runs, M bins); requires N >= 2.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 2 or freqs.shape[0] < 2:
        raise ValueError("need an N x M matrix with N >= 2 runs")
    dev = freqs - freqs.mean(axis=0, keepdims=True)
    return float(np.mean(dev ** 2))


def lag_autocovariance(series, k: int) -> float:
    """Empirical lag-k autocovariance of a series, mean removed."""
    series = np.asarray(series, dtype=float)
    if k < 0:
        raise ValueError("lag must be nonnegative")
    if len(series) <= k + 1:
        raise ValueError("series too short for this lag")
    centered = series - series.mean()
    n = len(series)
    return float(np.dot(centered[: n - k], centered[k:]) / (n - k))


def fit_loglog_slope(stepsizes, errors) -> tuple[float, float]:
    """Least-squares slope and intercept of log(error) against log(stepsize)."""
    stepsizes = np.asarray(stepsizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(stepsizes) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if np.any(stepsizes <= 0) or np.any(errors <= 0):
        raise ValueError("stepsizes and errors must be positive")
    slope, intercept = np.polyfit(np.log(stepsizes), np.log(errors), 1)
    return float(slope), float(intercept)
