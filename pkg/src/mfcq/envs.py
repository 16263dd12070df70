"""Environment simulators: conditional-law summary steps, rollouts, and a particle oracle.

The summary simulators evolve the finite-dimensional law surrogate (mean/variance
for the LQ example, log-mean for the non-LQ one) with one common-noise draw per
grid step.  The particle oracle simulates N interacting particles with a shared
common-noise increment and is used only for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    DivergenceError,
    Example,
    GaussianSummary,
    LogMeanSummary,
    LqPolicy,
    MeasureSummary,
    ModelConstants,
    NlqPolicy,
    PolicyParams,
    PositivityError,
    TimeGrid,
)

__all__ = [
    "StepOutcome",
    "EpisodeLog",
    "lq_step",
    "nlq_step",
    "terminal_reward",
    "draw_initial_summary",
    "rollout",
    "lq_rollout_paths",
    "nlq_rollout_paths",
    "particle_sim",
]


@dataclass(frozen=True)
class StepOutcome:
    """Next law summary plus the aggregated running reward at t_k (0 in both examples)."""

    next: MeasureSummary
    reward: float
    clamped: bool = False


@dataclass(frozen=True)
class EpisodeLog:
    """One rollout: grid, behavior policy, and the per-grid-point records.

    ``means``/``vars`` hold the Gaussian-summary path (LQ); ``logmeans`` the
    log-mean path (NLQ).  Exactly one pair is populated.  ``rewards[k]`` is the
    aggregated running reward observed at t_k, k = 0..steps-1.
    """

    grid: TimeGrid
    behavior: PolicyParams
    rewards: np.ndarray
    means: Optional[np.ndarray] = None
    vars: Optional[np.ndarray] = None
    logmeans: Optional[np.ndarray] = None
    clamp_count: int = 0

    def __post_init__(self):
        n = self.grid.steps + 1
        if self.rewards.shape != (self.grid.steps,):
            raise ValueError("rewards must have one entry per step")
        if self.means is not None:
            if self.means.shape != (n,) or self.vars is None or self.vars.shape != (n,):
                raise ValueError("means/vars must cover all grid points")
        elif self.logmeans is None or self.logmeans.shape != (n,):
            raise ValueError("logmeans must cover all grid points")

    def summary_at(self, k: int) -> MeasureSummary:
        if self.means is not None:
            return GaussianSummary(float(self.means[k]), float(self.vars[k]))
        return LogMeanSummary(float(self.logmeans[k]))


def _lq_step_arrays(mean, var, a1, a2, a3, a4, t, dt, dw, c: ModelConstants):
    """Vectorized LQ summary update; returns (mean', var', clamped mask)."""
    ea = np.exp(-a2 * (t - c.T))
    sdt = np.sqrt(dt)
    mean_next = mean - a4 * ea * (c.b * dt + c.sigma_o * sdt * dw)
    drift = (
        (-2.0 * c.b * a3 + c.sigma**2 * a3**2 + c.sigma_o**2 * a3**2) * var
        + c.sigma**2 * a4**2 * ea**2
        + c.sig2_total * c.gamma * np.exp(-a1 - a2 * (t - c.T))
    )
    var_next = var + drift * dt - 2.0 * c.sigma_o * a3 * var * sdt * dw
    clamped = var_next < 0.0
    var_next = np.where(clamped, 0.0, var_next)
    return mean_next, var_next, clamped


def _nlq_step_arrays(logmean, c1, c2, t, dt, dw, c: ModelConstants):
    """Vectorized non-LQ log-mean update using the policy mean h̄(t) = 1/rate(t)."""
    hbar = np.exp(c2) + np.sqrt(np.exp(2.0 * c2) + c.gamma * np.exp(-c1 - c.beta * (t - c.T)))
    drift = c.b * hbar - 0.5 * c.sigma_o**2 * hbar**2
    return logmean + drift * dt + c.sigma_o * hbar * np.sqrt(dt) * dw


def lq_step(
    state: GaussianSummary,
    t: float,
    policy: LqPolicy,
    dt: float,
    common_draw: float,
    constants: ModelConstants,
) -> StepOutcome:
    """One Euler step of the LQ conditional (mean, variance) under a Gaussian policy."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    mean, var, clamped = _lq_step_arrays(
        state.mean, state.var, policy.a1, policy.a2, policy.a3, policy.a4, t, dt, common_draw, constants
    )
    if not (np.isfinite(mean) and np.isfinite(var)):
        raise DivergenceError(f"non-finite summary after LQ step at t={t}")
    return StepOutcome(GaussianSummary(float(mean), float(var)), 0.0, bool(clamped))


def nlq_step(
    state: LogMeanSummary,
    t: float,
    policy: NlqPolicy,
    dt: float,
    common_draw: float,
    constants: ModelConstants,
) -> StepOutcome:
    """One Euler step of the non-LQ conditional log-mean under an exponential policy."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    lm = _nlq_step_arrays(state.logmean, policy.c1, policy.c2, t, dt, common_draw, constants)
    if not np.isfinite(lm):
        raise DivergenceError(f"non-finite log-mean after step at t={t}")
    return StepOutcome(LogMeanSummary(float(lm)), 0.0)


def terminal_reward(constants: ModelConstants, state: MeasureSummary) -> float:
    """Aggregated terminal reward: mean - lam*var (LQ) or logmean (NLQ)."""
    if constants.example is Example.LQ_FINITE:
        if not isinstance(state, GaussianSummary):
            raise ValueError("LQ terminal reward needs a GaussianSummary")
        return state.mean - constants.lam * state.var
    if not isinstance(state, LogMeanSummary):
        raise ValueError("NLQ terminal reward needs a LogMeanSummary")
    return state.logmean


def draw_initial_summary(constants: ModelConstants, rng: np.random.Generator) -> MeasureSummary:
    """Initial law summary: LQ mean ~ N(0,1), var ~ U[0,1]; NLQ logmean ~ N(0,1)."""
    if constants.example is Example.LQ_FINITE:
        return GaussianSummary(float(rng.standard_normal()), float(rng.uniform(0.0, 1.0)))
    return LogMeanSummary(float(rng.standard_normal()))


def lq_rollout_paths(
    constants: ModelConstants,
    grid: TimeGrid,
    a_params: np.ndarray,
    mean0: np.ndarray,
    var0: np.ndarray,
    draws: np.ndarray,
):
    """Propagate M LQ summary rollouts at once.

    a_params: (4, M) canonical policy parameters; draws: (steps, M) standard
    normals.  Returns means, vars of shape (steps+1, M) and the clamp count.
    """
    steps = grid.steps
    m = a_params.shape[1]
    means = np.empty((steps + 1, m))
    vars_ = np.empty((steps + 1, m))
    means[0] = mean0
    vars_[0] = var0
    a1, a2, a3, a4 = a_params
    clamp = 0
    for k in range(steps):
        t = k * grid.dt
        mean, var, clamped = _lq_step_arrays(means[k], vars_[k], a1, a2, a3, a4, t, grid.dt, draws[k], constants)
        means[k + 1] = mean
        vars_[k + 1] = var
        clamp += int(np.count_nonzero(clamped))
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(vars_))):
        raise DivergenceError("non-finite summary path in LQ rollout")
    return means, vars_, clamp


def nlq_rollout_paths(
    constants: ModelConstants,
    grid: TimeGrid,
    c_params: np.ndarray,
    logmean0: np.ndarray,
    draws: np.ndarray,
):
    """Propagate M non-LQ log-mean rollouts at once (c_params: (2, M), draws: (steps, M))."""
    steps = grid.steps
    lms = np.empty((steps + 1, c_params.shape[1]))
    lms[0] = logmean0
    c1, c2 = c_params
    for k in range(steps):
        lms[k + 1] = _nlq_step_arrays(lms[k], c1, c2, k * grid.dt, grid.dt, draws[k], constants)
    if not np.all(np.isfinite(lms)):
        raise DivergenceError("non-finite log-mean path in rollout")
    return lms


def rollout(
    constants: ModelConstants,
    grid: TimeGrid,
    behavior: PolicyParams,
    init: MeasureSummary,
    stream: np.random.Generator,
    common_draws: Optional[np.ndarray] = None,
) -> EpisodeLog:
    """Roll one episode out on the summary simulator, one common draw per step."""
    draws = stream.standard_normal(grid.steps) if common_draws is None else np.asarray(common_draws)
    if draws.shape != (grid.steps,):
        raise ValueError("common_draws must have one entry per step")
    rewards = np.zeros(grid.steps)
    if constants.example is Example.LQ_FINITE:
        if not isinstance(behavior, LqPolicy) or not isinstance(init, GaussianSummary):
            raise ValueError("LQ rollout needs an LqPolicy and a GaussianSummary")
        means, vars_, clamp = lq_rollout_paths(
            constants, grid, behavior.as_array()[:, None], np.array([init.mean]), np.array([init.var]), draws[:, None]
        )
        return EpisodeLog(grid, behavior, rewards, means=means[:, 0], vars=vars_[:, 0], clamp_count=clamp)
    if not isinstance(behavior, NlqPolicy) or not isinstance(init, LogMeanSummary):
        raise ValueError("NLQ rollout needs an NlqPolicy and a LogMeanSummary")
    lms = nlq_rollout_paths(constants, grid, behavior.as_array()[:, None], np.array([init.logmean]), draws[:, None])
    return EpisodeLog(grid, behavior, rewards, logmeans=lms[:, 0])


def particle_sim(
    constants: ModelConstants,
    grid: TimeGrid,
    behavior: PolicyParams,
    n_particles: int,
    stream: np.random.Generator,
    init: MeasureSummary,
    common_draws: Optional[np.ndarray] = None,
    return_spread: bool = False,
):
    """N-particle oracle sharing one common-noise increment per step.

    Actions are drawn per particle from the behavior policy at (t_k, X_i,
    empirical mean); idiosyncratic noises are independent.  Returns the
    per-step empirical summaries (length steps+1).  Passing ``common_draws``
    couples the oracle to a summary rollout driven by the same noise;
    ``return_spread`` additionally returns per-step (std, fourth central
    moment) arrays for delta-method error bars.
    """
    if n_particles < 2:
        raise ValueError("need at least 2 particles")
    if common_draws is None:
        common_draws = stream.standard_normal(grid.steps)
    common_draws = np.asarray(common_draws)
    sdt = np.sqrt(grid.dt)
    out = []
    stds = np.zeros(grid.steps + 1)
    m4s = np.zeros(grid.steps + 1)

    def record_moments(k, x):
        centered = x - x.mean()
        stds[k] = centered.std()
        m4s[k] = float(np.mean(centered**4))

    if constants.example is Example.LQ_FINITE:
        assert isinstance(behavior, LqPolicy) and isinstance(init, GaussianSummary)
        x = init.mean + np.sqrt(init.var) * stream.standard_normal(n_particles)
        out.append(GaussianSummary(float(x.mean()), float(x.var())))
        record_moments(0, x)
        for k in range(grid.steps):
            t = k * grid.dt
            mu_bar = x.mean()
            act_mean = -behavior.a3 * (x - mu_bar) + behavior.mean_shift(constants, t)
            a = act_mean + np.sqrt(behavior.variance(constants, t)) * stream.standard_normal(n_particles)
            xi = stream.standard_normal(n_particles)
            x = x + a * (constants.b * grid.dt + constants.sigma * sdt * xi + constants.sigma_o * sdt * common_draws[k])
            out.append(GaussianSummary(float(x.mean()), float(x.var())))
            record_moments(k + 1, x)
        return (out, stds, m4s) if return_spread else out
    assert isinstance(behavior, NlqPolicy) and isinstance(init, LogMeanSummary)
    # The non-LQ interaction runs through the mean only, so a point-mass cloud
    # at exp(logmean) is a valid initial law with the configured mean.
    x = np.full(n_particles, np.exp(init.logmean))
    out.append(LogMeanSummary(float(init.logmean)))
    for k in range(grid.steps):
        t = k * grid.dt
        mu_bar = x.mean()
        if mu_bar <= 0.0:
            raise PositivityError(f"empirical mean non-positive at t={t}; refine dt")
        rate = behavior.rate(constants, t)
        a = stream.exponential(scale=1.0 / rate, size=n_particles)
        xi = stream.standard_normal(n_particles)
        x = x + a * mu_bar * (
            constants.b * grid.dt + constants.sigma * sdt * xi + constants.sigma_o * sdt * common_draws[k]
        )
        mu_next = x.mean()
        if mu_next <= 0.0:
            raise PositivityError(f"empirical mean non-positive at t={t + grid.dt}; refine dt")
        out.append(LogMeanSummary(float(np.log(mu_next))))
        record_moments(k + 1, x)
    return (out, stds, m4s) if return_spread else out
