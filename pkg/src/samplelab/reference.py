"""Ground-truth configurational distributions.

1D models get quadrature-exact bin probabilities of the Gibbs density
exp(-beta U)/Z. Clusters get a high-resolution simulated radial
distribution reference, cached on disk keyed by a hash of its parameters.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .models import PotentialModel
from .rng import NoiseStream
from .stats import Histogram

QUAD_ABS_TOL = 1e-12
TAIL_MASS_LIMIT = 1e-12


class QuadratureError(RuntimeError):
    """Requested quadrature tolerance not met."""


class TailBoundError(RuntimeError):
    """Density mass beyond the quadrature domain is not provably negligible."""


@dataclass
class ReferenceDistribution:
    """Exact (or high-resolution simulated) per-bin probabilities."""

    edges: np.ndarray
    probabilities: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if np.any(self.probabilities < 0):
            raise ValueError("probabilities must be nonnegative")

    def to_text(self) -> str:
        lines = ["# edges: " + " ".join(repr(float(e)) for e in self.edges)]
        for key, value in self.meta.items():
            lines.append(f"# meta: {key}={value}")
        for i, p in enumerate(self.probabilities):
            lines.append(f"{i} {float(p)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ReferenceDistribution":
        edges = None
        meta = {}
        rows = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("# edges:"):
                edges = np.array([float(v) for v in line[len("# edges:"):].split()])
            elif line.startswith("# meta:"):
                key, _, value = line[len("# meta:"):].strip().partition("=")
                meta[key] = value
            elif not line.startswith("#"):
                idx, p = line.split()
                rows[int(idx)] = float(p)
        if edges is None:
            raise ValueError("missing '# edges:' header")
        probs = np.zeros(len(edges) - 1)
        for idx, p in rows.items():
            probs[idx] = p
        return cls(edges, probs, meta)


def quartic_tail_mass_bound(beta: float, half_width: float) -> float:
    """Upper bound on the Gibbs mass outside [-L, L] for potentials with
    U(x) >= x^4/4 - 1, using x^4/4 >= (L^3/4) |x| there (needs L >= 1)."""
    if half_width < 1.0:
        raise ValueError("bound requires half_width >= 1")
    L = half_width
    rate = beta * L ** 3 / 4.0
    return 2.0 * math.exp(beta) * math.exp(-beta * L ** 4 / 4.0) / rate


def quadrature_bin_probabilities(model: PotentialModel, beta: float, edges,
                                 domain: tuple[float, float] = (-6.0, 6.0),
                                 tail_mass_bound: float | None = None,
                                 ) -> ReferenceDistribution:
    """Exact bin probabilities of exp(-beta U)/Z via adaptive quadrature.

    The normalizer integrates over ``domain``; ``tail_mass_bound`` must
    certify that mass outside the domain is below 1e-12. For the 1D
    oscillator the quartic growth bound is applied automatically.
    """
    if model.dimension != 1:
        raise ValueError("quadrature references are 1D only")
    if beta <= 0:
        raise ValueError("beta must be positive")
    edges = np.asarray(edges, dtype=float)
    lo, hi = domain
    if lo > edges[0] or hi < edges[-1]:
        raise ValueError("domain must contain the bin range")

    if tail_mass_bound is None and model.kind == "oscillator":
        tail_mass_bound = quartic_tail_mass_bound(beta, min(-lo, hi))
    if tail_mass_bound is None:
        raise TailBoundError("no tail mass bound available for this model")
    if tail_mass_bound >= TAIL_MASS_LIMIT:
        raise TailBoundError(
            f"tail mass bound {tail_mass_bound:.3e} exceeds {TAIL_MASS_LIMIT}")

    def density(x):
        return math.exp(-beta * model.energy(x))

    def integral(a, b):
        value, err = quad(density, a, b, epsabs=QUAD_ABS_TOL, limit=500)
        if err > 10 * QUAD_ABS_TOL and err > 1e-10 * abs(value):
            raise QuadratureError(f"quadrature error {err:.3e} on [{a}, {b}]")
        return value

    bin_ints = np.array([integral(a, b) for a, b in zip(edges[:-1], edges[1:])])
    z = integral(lo, edges[0]) + bin_ints.sum() + integral(edges[-1], hi)
    meta = {"kind": "quadrature", "beta": beta, "domain": f"[{lo},{hi}]",
            "abs_tol": QUAD_ABS_TOL, "tail_mass_bound": tail_mass_bound,
            "model": model.kind}
    return ReferenceDistribution(edges, bin_ints / z, meta)


def gibbs_position_sampler(model: PotentialModel, beta: float,
                           half_width: float = 6.0, grid_points: int = 20001):
    """Inverse-CDF sampler of the 1D Gibbs density on [-L, L].

    Returns a callable mapping U(0,1) draws to positions.
    """
    xs = np.linspace(-half_width, half_width, grid_points)
    logw = -beta * np.array([model.energy(x) for x in xs])
    w = np.exp(logw - logw.max())
    cdf = np.concatenate([[0.0], np.cumsum((w[1:] + w[:-1]) / 2.0 * np.diff(xs))])
    cdf /= cdf[-1]

    def sample(uniforms):
        return np.interp(uniforms, cdf, xs)

    return sample


DEFAULT_RDF_RANGE = {"morse": (0.5, 2.5), "lj": (0.5, 3.5)}


def _reference_cache_key(model, kBT, h_ref, t_total, replicas, seed, bins,
                         burn_in_fraction, stride) -> str:
    blob = repr((model.kind, kBT, h_ref, t_total, replicas, seed,
                 tuple(np.asarray(bins.edges).tolist()), burn_in_fraction,
                 stride)).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def simulated_reference_rdf(model: PotentialModel, kBT: float, h_ref: float,
                            t_total: float, replicas: int, seed: int,
                            bins: Histogram | None = None,
                            burn_in_fraction: float = 0.1, stride: int = 1,
                            cache_dir: str | Path | None = None,
                            ) -> ReferenceDistribution:
    """High-resolution G(r) reference for a cluster model.

    Runs the colored-noise BAOAB limit method (the most accurate scheme of
    the family, in its overdamped form) at stepsize h_ref, merging
    ``replicas`` independently seeded trajectories. Results are cached on
    disk when cache_dir is given.
    """
    from .trajectories import run_histogram_trajectory  # avoid import cycle

    if model.dimension == 1:
        raise ValueError("simulated references are for cluster models")
    if bins is None:
        lo, hi = DEFAULT_RDF_RANGE[model.kind]
        bins = Histogram.equal_bins(20, lo, hi)

    cache_path = None
    if cache_dir is not None:
        key = _reference_cache_key(model, kBT, h_ref, t_total, replicas, seed,
                                   bins, burn_in_fraction, stride)
        cache_path = Path(cache_dir) / f"reference_{model.kind}_{key}.txt"
        if cache_path.exists():
            return ReferenceDistribution.from_text(cache_path.read_text())

    n_steps = round(t_total / h_ref)
    burn_steps = int(n_steps * burn_in_fraction)
    merged = bins
    for rep in range(replicas):
        stream = NoiseStream(seed, rep)
        result = run_histogram_trajectory(model, "baoab-limit", h_ref, 0.0,
                                          kBT, n_steps, burn_steps, stride,
                                          bins, stream)
        if result.diverged:
            raise RuntimeError(
                f"reference trajectory diverged at h_ref={h_ref}")
        merged = merged.merge(result.histogram)

    meta = {"kind": "simulated", "integrator": "baoab-limit", "model": model.kind,
            "kBT": kBT, "h_ref": h_ref, "t_total": t_total, "replicas": replicas,
            "seed": seed, "burn_in_fraction": burn_in_fraction, "stride": stride,
            "total_samples": merged.total_samples}
    out = ReferenceDistribution(merged.edges, merged.frequencies(), meta)
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_text(out.to_text())
    return out
