"""Stochastic-dynamics sampling laboratory.

Langevin and Brownian dynamics integrators (splitting-based and classical),
exact and simulated reference distributions, and a benchmarking harness for
measuring the bias of each method's invariant configurational distribution.
"""

__version__ = "0.1.0"
