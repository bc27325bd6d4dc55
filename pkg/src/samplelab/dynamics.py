"""One-step maps for Langevin and Brownian dynamics integrators.

Provides the elementary A (free drift), B (force kick) and O
(Ornstein-Uhlenbeck) flows, a splitting-string composer over {A, B, O},
hand-coded steppers for BAOAB, ABOBA, SPV and BBK, and the two Brownian
schemes: Euler-Maruyama and the colored-noise BAOAB limit method.

Gradients are cached on the state so a full integrator step costs exactly
one fresh force evaluation in steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import PotentialModel
from .rng import NoiseStream

# Any coordinate beyond this is reported as an unstable trajectory.
# Instability at large stepsizes is data, not a crash.
DIVERGENCE_THRESHOLD = 1e100

METHOD_NAMES = ("baoab", "aboba", "spv", "bbk", "euler-maruyama", "baoab-limit")


class UnstableTrajectoryError(RuntimeError):
    """Trajectory left the representable region (unstable at this stepsize)."""


@dataclass
class PhaseState:
    """Positions, momenta and per-coordinate masses of the sampled system.

    ``grad`` caches the potential gradient at ``x``; any flow that moves x
    drops the cache, so reuse across substeps and steps is automatic.
    """

    x: np.ndarray
    p: np.ndarray
    masses: np.ndarray
    grad: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float))
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=float))


@dataclass
class ConfigState:
    """Configuration-only state for Brownian (overdamped) dynamics."""

    x: np.ndarray
    masses: np.ndarray
    grad: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=float))


@dataclass(frozen=True)
class OUCoefficients:
    """Exact Ornstein-Uhlenbeck solve constants for one substep.

    c1 = exp(-gamma dt), c2 = (1 - c1)/gamma, c3 = sqrt(kBT (1 - c1^2)).
    c1 underflows to exactly 0 for gamma*dt beyond ~745, which is the
    intended high-friction limit behaviour.
    """

    c1: float
    c2: float
    c3: float


def ou_coefficients(gamma: float, dt: float, kBT: float) -> OUCoefficients:
    if gamma <= 0 or dt <= 0 or kBT <= 0:
        raise ValueError("gamma, dt and kBT must all be positive")
    c1 = math.exp(-gamma * dt)
    c2 = (1.0 - c1) / gamma
    c3 = math.sqrt(kBT * (1.0 - c1 * c1))
    return OUCoefficients(c1=c1, c2=c2, c3=c3)


def _check_stable(x: np.ndarray) -> None:
    if not np.all(np.abs(x) < DIVERGENCE_THRESHOLD):
        raise UnstableTrajectoryError("coordinate magnitude exceeded 1e100")


def _gradient(state, model: PotentialModel) -> np.ndarray:
    if state.grad is None:
        state.grad = model.gradient(state.x)
    return state.grad


def a_flow(s: PhaseState, t: float) -> PhaseState:
    """Exact free drift: x += t * p / m. Invalidates the gradient cache."""
    return PhaseState(s.x + t * (s.p / s.masses), s.p, s.masses, grad=None)


def b_flow(s: PhaseState, t: float, model: PotentialModel) -> PhaseState:
    """Exact force kick: p -= t * grad U(x). Keeps the gradient cache."""
    g = _gradient(s, model)
    return PhaseState(s.x, s.p - t * g, s.masses, grad=g)


def o_flow(s: PhaseState, coeffs: OUCoefficients, stream: NoiseStream) -> PhaseState:
    """Exact OU solve: p <- c1 p + c3 sqrt(m) R with a fresh normal vector."""
    r = stream.normal_vector(len(s.p))
    p = coeffs.c1 * s.p + coeffs.c3 * np.sqrt(s.masses) * r
    return PhaseState(s.x, p, s.masses, grad=s.grad)


@dataclass(frozen=True)
class SplittingScheme:
    """A validated splitting string over {A, B, O} plus its parameters.

    Each occurrence of a letter runs for dt divided by that letter's
    occurrence count, so "BAOAB" means B(dt/2) A(dt/2) O(dt) A(dt/2) B(dt/2).
    """

    letters: str
    dt: float
    gamma: float
    kBT: float

    def __post_init__(self):
        if not self.letters:
            raise ValueError("splitting string must be nonempty")
        bad = set(self.letters) - set("ABO")
        if bad:
            raise ValueError(f"splitting string may only contain A, B, O; got {bad}")
        if self.dt <= 0 or self.gamma <= 0 or self.kBT <= 0:
            raise ValueError("dt, gamma and kBT must all be positive")

    def durations(self) -> dict[str, float]:
        return {c: self.dt / self.letters.count(c) for c in set(self.letters)}


def compose_splitting(scheme: SplittingScheme, model: PotentialModel):
    """Compile a splitting string into a one-step map.

    Returns step(state, stream) -> state applying the letters left to
    right. The gradient cache on the state makes repeated B substeps at an
    unchanged position (and the closing/opening B pair of consecutive
    symmetric steps) cost one fresh force evaluation.
    """
    durations = scheme.durations()
    o_coeffs = ou_coefficients(scheme.gamma, durations.get("O", scheme.dt), scheme.kBT)
    letters = scheme.letters

    def step(s: PhaseState, stream: NoiseStream) -> PhaseState:
        for c in letters:
            if c == "A":
                s = a_flow(s, durations["A"])
                _check_stable(s.x)
            elif c == "B":
                s = b_flow(s, durations["B"], model)
            else:
                s = o_flow(s, o_coeffs, stream)
        _check_stable(s.x)
        return s

    return step


@dataclass(frozen=True)
class LangevinParams:
    """Shared parameters of the phase-space one-step maps."""

    dt: float
    gamma: float
    kBT: float

    def ou(self) -> OUCoefficients:
        return ou_coefficients(self.gamma, self.dt, self.kBT)


class BAOABStep:
    """BAOAB: half kick, half drift, OU solve, half drift, half kick."""

    def __init__(self, model: PotentialModel, params: LangevinParams):
        self.model = model
        self.dt = params.dt
        self.kBT = params.kBT
        self.coeffs = params.ou()

    def __call__(self, s: PhaseState, stream: NoiseStream) -> PhaseState:
        dt, c = self.dt, self.coeffs
        g = _gradient(s, self.model)
        p = s.p - (dt / 2.0) * g
        x = s.x + (dt / 2.0) * (p / s.masses)
        p = c.c1 * p + c.c3 * np.sqrt(s.masses) * stream.normal_vector(len(p))
        x = x + (dt / 2.0) * (p / s.masses)
        _check_stable(x)
        out = PhaseState(x, p, s.masses)
        g1 = _gradient(out, self.model)
        out.p = p - (dt / 2.0) * g1
        return out


class ABOBAStep:
    """ABOBA: half drift, half kick, OU solve, half kick, half drift."""

    def __init__(self, model: PotentialModel, params: LangevinParams):
        self.model = model
        self.dt = params.dt
        self.coeffs = params.ou()

    def __call__(self, s: PhaseState, stream: NoiseStream) -> PhaseState:
        dt, c = self.dt, self.coeffs
        xh = s.x + (dt / 2.0) * (s.p / s.masses)
        _check_stable(xh)
        mid = PhaseState(xh, s.p, s.masses)
        g = _gradient(mid, self.model)
        p = s.p - (dt / 2.0) * g
        p = c.c1 * p + c.c3 * np.sqrt(s.masses) * stream.normal_vector(len(p))
        p = p - (dt / 2.0) * g
        x = xh + (dt / 2.0) * (p / s.masses)
        out = PhaseState(x, p, s.masses)
        _check_stable(out.x)
        return out


class SPVStep:
    """Stochastic Position Verlet: half drift, damped kick with c2 on the
    force, half drift."""

    def __init__(self, model: PotentialModel, params: LangevinParams):
        self.model = model
        self.dt = params.dt
        self.coeffs = params.ou()

    def __call__(self, s: PhaseState, stream: NoiseStream) -> PhaseState:
        dt, c = self.dt, self.coeffs
        xh = s.x + (dt / 2.0) * (s.p / s.masses)
        _check_stable(xh)
        mid = PhaseState(xh, s.p, s.masses)
        g = _gradient(mid, self.model)
        p = c.c1 * s.p - c.c2 * g + c.c3 * np.sqrt(s.masses) * stream.normal_vector(len(s.p))
        x = xh + (dt / 2.0) * (p / s.masses)
        out = PhaseState(x, p, s.masses)
        _check_stable(out.x)
        return out


class BBKStep:
    """Brunger-Brooks-Karplus with two half-strength noise injections.

    Each half kick adds sqrt(2 dt kBT gamma) M^{1/2} R / 2, the amplitude
    that balances the (1 -+ dt gamma / 2) friction factors so the
    free-particle momentum variance tends to kBT as dt -> 0. The draw used
    in the first half of step n+1 is the same one used in the second half
    of step n, so steady state costs one fresh draw per step. The first
    step draws its opening noise on demand (priming).
    """

    def __init__(self, model: PotentialModel, params: LangevinParams):
        self.model = model
        self.dt = params.dt
        self.gamma = params.gamma
        self.kBT = params.kBT
        self._prev_r: np.ndarray | None = None

    def __call__(self, s: PhaseState, stream: NoiseStream) -> PhaseState:
        dt, gamma = self.dt, self.gamma
        if self._prev_r is None:
            self._prev_r = stream.normal_vector(len(s.p))
        amp = math.sqrt(2.0 * dt * self.kBT * gamma)
        sqm = np.sqrt(s.masses)
        g = _gradient(s, self.model)
        ph = (1.0 - dt * gamma / 2.0) * s.p - (dt / 2.0) * g + amp * sqm * self._prev_r / 2.0
        x = s.x + dt * (ph / s.masses)
        _check_stable(x)
        out = PhaseState(x, ph, s.masses)
        g1 = _gradient(out, self.model)
        r_new = stream.normal_vector(len(s.p))
        out.p = (ph - (dt / 2.0) * g1 + amp * sqm * r_new / 2.0) / (1.0 + dt * gamma / 2.0)
        self._prev_r = r_new
        _check_stable(out.x)
        return out


class EulerMaruyamaStep:
    """Euler-Maruyama for Brownian dynamics, fresh white noise each step."""

    def __init__(self, model: PotentialModel, h: float, kBT: float):
        if h <= 0:
            raise ValueError("h must be positive")
        self.model = model
        self.h = h
        self.kBT = kBT

    def __call__(self, s: ConfigState, stream: NoiseStream) -> ConfigState:
        h = self.h
        g = _gradient(s, self.model)
        r = stream.normal_vector(len(s.x))
        x = s.x - h * (g / s.masses) + math.sqrt(2.0 * self.kBT * h) * r / np.sqrt(s.masses)
        out = ConfigState(x, s.masses)
        _check_stable(out.x)
        return out


@dataclass
class ColoredNoiseCache:
    """Carries the Gaussian draw shared between consecutive limit-method steps."""

    previous_r: np.ndarray | None = None

    @property
    def primed(self) -> bool:
        return self.previous_r is not None

    def prime(self, stream: NoiseStream, n: int) -> None:
        self.previous_r = stream.normal_vector(n)


class BAOABLimitStep:
    """High-friction limit of BAOAB: Euler-Maruyama drift driven by the
    average of consecutive Gaussian draws (colored noise)."""

    def __init__(self, model: PotentialModel, h: float, kBT: float,
                 cache: ColoredNoiseCache | None = None):
        if h <= 0:
            raise ValueError("h must be positive")
        self.model = model
        self.h = h
        self.kBT = kBT
        self.cache = cache if cache is not None else ColoredNoiseCache()

    def __call__(self, s: ConfigState, stream: NoiseStream) -> ConfigState:
        h = self.h
        if not self.cache.primed:
            self.cache.prime(stream, len(s.x))
        g = _gradient(s, self.model)
        r_new = stream.normal_vector(len(s.x))
        noise = self.cache.previous_r + r_new
        x = (s.x - h * (g / s.masses)
             + math.sqrt(self.kBT * h / 2.0) * noise / np.sqrt(s.masses))
        self.cache.previous_r = r_new
        out = ConfigState(x, s.masses)
        _check_stable(out.x)
        return out


def make_stepper(method: str, model: PotentialModel, dt: float, gamma: float,
                 kBT: float):
    """Build a one-step map from a harness method name.

    Accepts baoab, aboba, spv, bbk, euler-maruyama, baoab-limit, and
    split:<LETTERS> for arbitrary A/B/O compositions. Phase-space methods
    step PhaseState; Brownian methods step ConfigState with dt read as h.
    """
    if method == "baoab":
        return BAOABStep(model, LangevinParams(dt, gamma, kBT))
    if method == "aboba":
        return ABOBAStep(model, LangevinParams(dt, gamma, kBT))
    if method == "spv":
        return SPVStep(model, LangevinParams(dt, gamma, kBT))
    if method == "bbk":
        return BBKStep(model, LangevinParams(dt, gamma, kBT))
    if method == "euler-maruyama":
        return EulerMaruyamaStep(model, dt, kBT)
    if method == "baoab-limit":
        return BAOABLimitStep(model, dt, kBT)
    if method.startswith("split:"):
        return compose_splitting(SplittingScheme(method[6:], dt, gamma, kBT), model)
    raise ValueError(f"unknown method {method!r}")


def is_brownian(method: str) -> bool:
    return method in ("euler-maruyama", "baoab-limit")
