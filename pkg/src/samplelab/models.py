"""Benchmark potential energy models.

Three systems sit behind one evaluation interface: a 1D anharmonic
oscillator (with the full derivative tower needed by the theory module)
and two 7-atom planar clusters, one bound by Morse pairs and one by
Lennard-Jones pairs with a weak radial restraint.

Cluster configurations are flat 14-vectors, atom-major:
(x0, y0, x1, y1, ..., x6, y6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_CLUSTER_ATOMS = 7
CLUSTER_DIM = 2 * N_CLUSTER_ATOMS

# Pair distances below this are treated as a degenerate configuration
# rather than letting NaN/inf propagate into trajectories.
MIN_PAIR_DISTANCE = 1e-12


class DegenerateConfigurationError(ValueError):
    """Two atoms closer than MIN_PAIR_DISTANCE."""


@dataclass(frozen=True)
class DerivativeTower1D:
    """Value of a 1D potential and its first four derivatives at a point."""

    u: float
    u1: float
    u2: float
    u3: float
    u4: float


class PotentialModel:
    """Common interface: energy and gradient of a configuration.

    ``force_evals`` counts fresh gradient evaluations; integrators are
    expected to need exactly one per step in steady state, and tests
    assert on this counter.
    """

    dimension: int
    kind: str

    def __init__(self):
        self.force_evals = 0

    def energy(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError


class Oscillator1D(PotentialModel):
    """U(x) = x^4/4 + sin(1 + 5x), the 1D benchmark potential."""

    dimension = 1
    kind = "oscillator"

    def energy(self, x) -> float:
        x = float(np.asarray(x).reshape(()))
        return x ** 4 / 4.0 + math.sin(1.0 + 5.0 * x)

    def gradient(self, x) -> np.ndarray:
        self.force_evals += 1
        xv = float(np.asarray(x).reshape(()))
        # xv*xv*xv overflows to inf instead of raising, unlike xv**3
        return np.array([xv * xv * xv + 5.0 * math.cos(1.0 + 5.0 * xv)])

    def tower(self, x: float) -> DerivativeTower1D:
        """U and its first four derivatives, all in closed form."""
        x = float(x)
        s = math.sin(1.0 + 5.0 * x)
        c = math.cos(1.0 + 5.0 * x)
        return DerivativeTower1D(
            u=x ** 4 / 4.0 + s,
            u1=x ** 3 + 5.0 * c,
            u2=3.0 * x ** 2 - 25.0 * s,
            u3=6.0 * x - 125.0 * c,
            u4=6.0 + 625.0 * s,
        )


def morse_pair(r: float, a: float = 2.0, r_m: float = 1.0) -> tuple[float, float]:
    """Morse pair energy and its r-derivative: (1 - exp(-a(r - r_m)))^2."""
    e = math.exp(-a * (r - r_m))
    phi = (1.0 - e) ** 2
    dphi = 2.0 * a * e * (1.0 - e)
    return phi, dphi


def lj_pair(r: float, eps: float = 1.0, r_m: float = 1.0) -> tuple[float, float]:
    """Lennard-Jones pair energy eps((r_m/r)^12 - 2(r_m/r)^6) and derivative.

    Singular at r = 0; callers guard with MIN_PAIR_DISTANCE.
    """
    s6 = (r_m / r) ** 6
    phi = eps * (s6 * s6 - 2.0 * s6)
    dphi = -12.0 * eps * (s6 * s6 - s6) / r
    return phi, dphi


# Precomputed (i, j) index pairs for the 21 cluster pair terms.
PAIR_INDICES = [(i, j) for i in range(N_CLUSTER_ATOMS) for j in range(i + 1, N_CLUSTER_ATOMS)]


class _Cluster(PotentialModel):
    dimension = CLUSTER_DIM
    has_restraint = False

    def pair(self, r: float) -> tuple[float, float]:
        raise NotImplementedError

    def energy_force(self, x) -> tuple[float, np.ndarray]:
        """Total energy and force (-gradient) of a 7-atom configuration."""
        x = np.asarray(x, dtype=float)
        if x.shape != (CLUSTER_DIM,):
            raise ValueError(f"expected flat {CLUSTER_DIM}-vector, got shape {x.shape}")
        u = 0.0
        f = np.zeros(CLUSTER_DIM)
        for i, j in PAIR_INDICES:
            dx = x[2 * i] - x[2 * j]
            dy = x[2 * i + 1] - x[2 * j + 1]
            r = math.hypot(dx, dy)
            if r < MIN_PAIR_DISTANCE:
                raise DegenerateConfigurationError(
                    f"atoms {i} and {j} at distance {r:.3e}"
                )
            phi, dphi = self.pair(r)
            u += phi
            fac = -dphi / r
            f[2 * i] += fac * dx
            f[2 * i + 1] += fac * dy
            f[2 * j] -= fac * dx
            f[2 * j + 1] -= fac * dy
        if self.has_restraint:
            u += float(np.dot(x, x)) / 8.0
            f -= x / 4.0
        return u, f

    def energy(self, x) -> float:
        u, _ = self.energy_force(x)
        return u

    def gradient(self, x) -> np.ndarray:
        self.force_evals += 1
        _, f = self.energy_force(x)
        return -f


class MorseCluster(_Cluster):
    """Seven planar atoms with Morse pair interactions (no restraint)."""

    kind = "morse"

    def __init__(self, a: float = 2.0, r_m: float = 1.0):
        super().__init__()
        self.a = a
        self.r_m = r_m

    def pair(self, r: float) -> tuple[float, float]:
        return morse_pair(r, self.a, self.r_m)


class LJCluster(_Cluster):
    """Seven planar Lennard-Jones atoms with a harmonic radial restraint.

    The restraint sum(r_k^2)/8 keeps atoms from being ejected; it is the
    only difference from the Morse cluster besides the pair law.
    """

    kind = "lj"
    has_restraint = True

    def __init__(self, eps: float = 1.0, r_m: float = 1.0):
        super().__init__()
        self.eps = eps
        self.r_m = r_m

    def pair(self, r: float) -> tuple[float, float]:
        return lj_pair(r, self.eps, self.r_m)


def hexagon_configuration() -> np.ndarray:
    """Initial cluster geometry: one atom at the origin, six on a unit hexagon."""
    x = np.zeros(CLUSTER_DIM)
    for k in range(1, 7):
        ang = (k - 1) * math.pi / 3.0
        x[2 * k] = math.cos(ang)
        x[2 * k + 1] = math.sin(ang)
    return x


def make_model(name: str) -> PotentialModel:
    """Instantiate a benchmark model by its config-file identifier."""
    if name == "oscillator":
        return Oscillator1D()
    if name == "morse":
        return MorseCluster()
    if name == "lj":
        return LJCluster()
    raise ValueError(f"unknown model {name!r} (expected oscillator, morse or lj)")
