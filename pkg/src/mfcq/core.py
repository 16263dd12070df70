"""Shared domain types: model constants, law summaries, policies, schedules, RNG streams.

Everything here is an immutable value object; the stochastic-approximation and
simulation modules build on these without shared mutable state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Example",
    "ModelConstants",
    "GaussianSummary",
    "LogMeanSummary",
    "MixtureSummary",
    "LqPolicy",
    "NlqPolicy",
    "PolicyParams",
    "MeasureSummary",
    "SchedulePiece",
    "Schedule",
    "TimeGrid",
    "StreamPurpose",
    "ConfigurationError",
    "DivergenceError",
    "CertificateError",
    "StabilityError",
    "PositivityError",
    "SingularParameterError",
    "schedule_eval",
    "psi_to_policy",
    "phi_to_policy",
    "rng_stream",
]


class ConfigurationError(ValueError):
    """Invalid configuration (bad schedule coverage, inconsistent grid, ...)."""


class DivergenceError(RuntimeError):
    """A learning iterate became non-finite.  Carries the episode index."""

    def __init__(self, message: str, episode: Optional[int] = None):
        super().__init__(message)
        self.episode = episode


class CertificateError(ValueError):
    """A contraction-certificate hypothesis fails; the message names the inequality."""


class StabilityError(RuntimeError):
    """A policy-conditioned linear system is singular (policy not admissible)."""


class PositivityError(RuntimeError):
    """A quantity that must stay positive (e.g. an empirical mean) crossed zero."""


class SingularParameterError(ValueError):
    """A parameter vector hit a singular point of the parameter-to-policy map."""


class Example(enum.Enum):
    """Which benchmark problem a set of constants describes."""

    LQ_FINITE = "lq"
    NLQ_FINITE = "nlq"


@dataclass(frozen=True)
class ModelConstants:
    """Model primitives of one benchmark problem.

    ``lam`` (risk aversion) is only meaningful for the LQ example; ``sigma``
    must be positive there because it enters denominators of the closed forms.
    """

    example: Example
    b: float
    sigma: float
    sigma_o: float
    beta: float
    gamma: float
    T: float
    lam: float = 0.0

    def __post_init__(self):
        if self.sigma_o <= 0.0:
            raise ValueError("sigma_o must be > 0")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")
        if self.T <= 0.0:
            raise ValueError("T must be > 0")
        if self.example is Example.LQ_FINITE:
            if self.lam <= 0.0:
                raise ValueError("lam must be > 0 for the LQ example")
            if self.sigma <= 0.0:
                raise ValueError("sigma must be > 0 for the LQ example")

    @property
    def sig2_total(self) -> float:
        """sigma^2 + sigma_o^2, the total instantaneous variance loading."""
        return self.sigma**2 + self.sigma_o**2


@dataclass(frozen=True)
class GaussianSummary:
    """Gaussian surrogate of a conditional law: mean and variance."""

    mean: float
    var: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.var)):
            raise ValueError("summary fields must be finite")
        if self.var < 0.0:
            raise ValueError("var must be >= 0")


@dataclass(frozen=True)
class LogMeanSummary:
    """Log of the conditional mean; the underlying mean exp(logmean) is positive."""

    logmean: float

    def __post_init__(self):
        if not np.isfinite(self.logmean):
            raise ValueError("logmean must be finite")


@dataclass(frozen=True)
class MixtureSummary:
    """Finite mixture of Gaussian summaries with nonnegative weights summing to 1."""

    components: Tuple[Tuple[float, GaussianSummary], ...]

    def __post_init__(self):
        if len(self.components) == 0:
            raise ValueError("mixture must be nonempty")
        weights = np.array([w for w, _ in self.components])
        if np.any(weights < 0.0):
            raise ValueError("mixture weights must be >= 0")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")

    @property
    def mean(self) -> float:
        return float(sum(w * c.mean for w, c in self.components))

    @property
    def second_central_moment(self) -> float:
        """Second moment about the mixture mean (law of total variance)."""
        m = self.mean
        return float(sum(w * (c.var + (c.mean - m) ** 2) for w, c in self.components))


@dataclass(frozen=True)
class LqPolicy:
    """Gaussian feedback policy of the LQ example.

    Mean -a3*(x - mean(mu)) - a4*exp(-a2*(t - T)); variance
    gamma*exp(-a1 - a2*(t - T)), strictly positive by construction.
    """

    a1: float
    a2: float
    a3: float
    a4: float

    def variance(self, constants: ModelConstants, t):
        return constants.gamma * np.exp(-self.a1 - self.a2 * (np.asarray(t) - constants.T))

    def mean_shift(self, constants: ModelConstants, t):
        """State-independent part of the policy mean, -a4*exp(-a2*(t-T))."""
        return -self.a4 * np.exp(-self.a2 * (np.asarray(t) - constants.T))

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4])


@dataclass(frozen=True)
class NlqPolicy:
    """Exponential policy of the non-LQ example, rate lambda(t) > 0."""

    c1: float
    c2: float

    def rate(self, constants: ModelConstants, t):
        # reciprocal of the mean: numerically stable form of the published
        # (e^{c1+beta(t-T)}/gamma)(-e^{c2} + sqrt(...)) expression
        return 1.0 / self.mean(constants, t)

    def mean(self, constants: ModelConstants, t):
        """1/rate(t) in closed form: exp(c2) + sqrt(exp(2 c2) + gamma e^{-c1-beta(t-T)})."""
        t = np.asarray(t)
        return np.exp(self.c2) + np.sqrt(
            np.exp(2 * self.c2) + constants.gamma * np.exp(-self.c1 - constants.beta * (t - constants.T))
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2])


PolicyParams = Union[LqPolicy, NlqPolicy]
MeasureSummary = Union[GaussianSummary, LogMeanSummary, MixtureSummary]


@dataclass(frozen=True)
class SchedulePiece:
    """One piece of a piecewise power-law schedule, active for n <= n_upper."""

    n_upper: Optional[int]  # None means +infinity
    c: np.ndarray
    e: np.ndarray
    e_inner: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "c", np.atleast_1d(np.asarray(self.c, dtype=float)))
        object.__setattr__(self, "e", np.atleast_1d(np.asarray(self.e, dtype=float)))
        if self.e_inner is not None:
            object.__setattr__(self, "e_inner", np.atleast_1d(np.asarray(self.e_inner, dtype=float)))
        if np.any(self.c < 0.0):
            raise ConfigurationError("schedule coefficients must be >= 0")
        if np.any(self.e < 0.0):
            raise ConfigurationError("schedule exponents must be >= 0")
        if self.c.shape != self.e.shape:
            raise ConfigurationError("c and e must have matching shapes")
        if self.e_inner is not None and self.e_inner.shape != self.c.shape:
            raise ConfigurationError("e_inner must match c in shape")


@dataclass(frozen=True)
class Schedule:
    """Piecewise learning-rate schedule c_i / (n^{e_i} * l^{e_inner,i})."""

    pieces: Tuple[SchedulePiece, ...]

    def __post_init__(self):
        if len(self.pieces) == 0:
            raise ConfigurationError("schedule needs at least one piece")
        uppers = [p.n_upper for p in self.pieces]
        for a, b in zip(uppers, uppers[1:]):
            if a is None:
                raise ConfigurationError("only the last piece may be unbounded")
            if b is not None and b <= a:
                raise ConfigurationError("piece bounds must be strictly increasing")

    @staticmethod
    def power(c, e, e_inner=None) -> "Schedule":
        """Single-piece schedule c / (n^e * l^{e_inner})."""
        return Schedule((SchedulePiece(None, np.asarray(c, dtype=float), np.asarray(e, dtype=float),
                                       None if e_inner is None else np.asarray(e_inner, dtype=float)),))

    @staticmethod
    def constant(c) -> "Schedule":
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return Schedule((SchedulePiece(None, c, np.zeros_like(c)),))

    def piece_for(self, n: int) -> SchedulePiece:
        for p in self.pieces:
            if p.n_upper is None or n <= p.n_upper:
                return p
        raise ConfigurationError(f"no schedule piece covers episode {n}")

    def __call__(self, n: int, l: Optional[int] = None) -> np.ndarray:
        return schedule_eval(self, n, l)


def schedule_eval(sched: Schedule, n: int, l: Optional[int] = None) -> np.ndarray:
    """Evaluate a schedule at episode n (and inner index l when the piece has one)."""
    if n < 1:
        raise ValueError(f"episode index must be >= 1, got {n}")
    piece = sched.piece_for(n)
    rate = piece.c / np.power(float(n), piece.e)
    if piece.e_inner is not None:
        if l is None or l < 1:
            raise ValueError("inner index l >= 1 required by this schedule piece")
        rate = rate / np.power(float(l), piece.e_inner)
    return rate


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt, k = 0..steps, spanning [0, steps*dt]."""

    dt: float
    steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def horizon(self) -> float:
        return self.dt * self.steps

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def matches_horizon(self, T: float, tol: float = 1e-12) -> bool:
        return abs(self.horizon - T) <= tol


class StreamPurpose(enum.IntEnum):
    """Purpose tag keying independent random streams."""

    INIT = 1       # per-episode initial summary
    ENV = 2        # common-noise increments of one rollout
    TEST = 3       # test-policy parameter draws
    PARTICLE = 4   # idiosyncratic noise and action draws of the particle oracle
    EVAL = 5       # policy-evaluation rollouts
    GRID = 6       # grid-refinement study
    ACTOR = 7      # actor-side randomization


def rng_stream(master_seed: int, episode: int, role: int, purpose: StreamPurpose) -> np.random.Generator:
    """Collision-free counter-based stream keyed by (seed, episode, role, purpose).

    Philox is used so identical inputs give identical streams on every platform
    and under any parallel execution order.  The key packs (purpose, episode,
    role) injectively for episode < 2**32 and role < 2**16.
    """
    if not (0 <= episode < 2**32):
        raise ValueError("episode must fit in 32 bits")
    if not (0 <= role < 2**16):
        raise ValueError("role must fit in 16 bits")
    key = (int(purpose) << 48) | (int(episode) << 16) | int(role)
    bitgen = np.random.Philox(key=np.array([master_seed & (2**64 - 1), key], dtype=np.uint64))
    return np.random.Generator(bitgen)


def psi_to_policy(example: Example, psi: np.ndarray) -> PolicyParams:
    """Map a critic parameter vector onto its canonical policy.

    LQ: (a1, a2, a3, a4) = (psi1, psi2, psi3, psi4/psi5); NLQ: (c1, c2) = (psi1, psi2).
    """
    psi = np.asarray(psi, dtype=float)
    if example is Example.LQ_FINITE:
        if psi.shape != (5,):
            raise ValueError(f"LQ psi must have 5 components, got shape {psi.shape}")
        if psi[4] == 0.0:
            raise SingularParameterError("psi5 = 0: policy mean shift a4 = psi4/psi5 is undefined")
        return LqPolicy(psi[0], psi[1], psi[2], psi[3] / psi[4])
    if psi.shape != (3,):
        raise ValueError(f"NLQ psi must have 3 components, got shape {psi.shape}")
    return NlqPolicy(psi[0], psi[1])


def phi_to_policy(example: Example, phi: np.ndarray) -> PolicyParams:
    """Actor parameters are already in canonical policy form (4 for LQ, 2 for NLQ)."""
    phi = np.asarray(phi, dtype=float)
    if example is Example.LQ_FINITE:
        if phi.shape != (4,):
            raise ValueError(f"LQ phi must have 4 components, got shape {phi.shape}")
        return LqPolicy(*phi)
    if phi.shape != (2,):
        raise ValueError(f"NLQ phi must have 2 components, got shape {phi.shape}")
    return NlqPolicy(*phi)
