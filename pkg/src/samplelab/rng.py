"""Deterministic, splittable streams of standard normal variates.

Each trajectory owns one NoiseStream. Streams are backed by the Philox
counter-based generator keyed by (seed, stream_id), so distinct stream ids
give provably non-overlapping substreams and replicas can run in parallel
without coordination.

Normal variates come from numpy's ziggurat transform. The method is fixed:
drawing n variates one at a time yields the same sequence as drawing a
vector of n at once, which the trajectory-equivalence tests rely on.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox


class NoiseStream:
    """Single-owner stream of N(0, 1) draws.

    ``counter`` counts variates handed out (one unit per scalar draw,
    uniform or normal), not raw generator words.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.counter = 0
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = Generator(Philox(key=key))

    def next_normal(self) -> float:
        self.counter += 1
        return float(self._gen.standard_normal())

    def normal_vector(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        self.counter += n
        return self._gen.standard_normal(n)

    def normal_block(self, steps: int, dim: int) -> np.ndarray:
        """(steps, dim) block of draws; row i holds step i's vector.

        Consumes exactly the draws of ``steps`` successive
        normal_vector(dim) calls, in the same order.
        """
        self.counter += steps * dim
        return self._gen.standard_normal((steps, dim))

    def uniform_vector(self, n: int) -> np.ndarray:
        """n draws from U(0, 1); used for inverse-CDF position sampling."""
        if n < 1:
            raise ValueError("n must be >= 1")
        self.counter += n
        return self._gen.random(n)

    def __repr__(self) -> str:
        return (
            f"NoiseStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"counter={self.counter})"
        )
