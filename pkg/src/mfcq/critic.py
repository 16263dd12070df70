"""Policy evaluation: test-policy sampling, discrete TD residuals, batched critic updates.

The update rule is the sample form of the averaged martingale-orthogonality
condition: for each test policy m and grid step k,

    G_k^m = J(t_{k+1}) - J(t_k) + (r_k - beta*J(t_k) - q0(t_k, behavior_m)) * dt,

and the parameter directions are discounted sums of gradient * G with a fixed
(m-major, k-minor) reduction order so results are reproducible under any
parallel episode generation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    ConfigurationError,
    DivergenceError,
    Example,
    ModelConstants,
    TimeGrid,
)
from .envs import EpisodeLog
from .funcs import (
    FormulaVariant,
    lq_q0,
    lq_q0_grad,
    lq_value,
    lq_value_grad,
    nlq_policy_mean,
    nlq_q0,
    nlq_q0_grad,
    nlq_value,
    nlq_value_grad,
)

__all__ = ["TestSampleMode", "CriticBatch", "sample_test_params", "td_residual",
           "critic_g_values", "critic_direction", "critic_update"]


class TestSampleMode(enum.Enum):
    PERTURB = "perturb"   # base * (1 + u), u ~ U[p, q]
    LITERAL = "literal"   # base * u, scaling the whole policy toward zero

    __test__ = False      # keep pytest from collecting the enum


def sample_test_params(base: np.ndarray, p_n: float, q_n: float,
                       stream: np.random.Generator,
                       mode: TestSampleMode = TestSampleMode.PERTURB) -> np.ndarray:
    """Draw one test-policy parameter vector around ``base``."""
    if p_n > q_n:
        raise ConfigurationError(f"p(n)={p_n} exceeds q(n)={q_n}")
    base = np.asarray(base, dtype=float)
    u = stream.uniform(p_n, q_n, size=base.shape)
    if mode is TestSampleMode.PERTURB:
        return base * (1.0 + u)
    return base * u


@dataclass(frozen=True)
class CriticBatch:
    """M stacked episode logs sharing one grid; columns are test policies.

    ``behaviors`` holds the canonical policy parameters, shape (4, M) for the
    LQ example and (2, M) for the non-LQ one.  State paths are (steps+1, M).
    """

    example: Example
    grid: TimeGrid
    behaviors: np.ndarray
    rewards: np.ndarray
    means: Optional[np.ndarray] = None
    vars: Optional[np.ndarray] = None
    logmeans: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n_policies < 1:
            raise ValueError("batch needs at least one episode")
        n = self.grid.steps + 1
        paths = self.means if self.example is Example.LQ_FINITE else self.logmeans
        if paths is None or paths.shape != (n, self.n_policies):
            raise ValueError("state paths must be (steps+1, M)")
        if self.rewards.shape != (self.grid.steps, self.n_policies):
            raise ValueError("rewards must be (steps, M)")

    @property
    def n_policies(self) -> int:
        return self.behaviors.shape[1]

    @staticmethod
    def from_episodes(example: Example, episodes: Sequence[EpisodeLog]) -> "CriticBatch":
        if len(episodes) == 0:
            raise ValueError("batch needs at least one episode")
        grid = episodes[0].grid
        if any(ep.grid != grid for ep in episodes):
            raise ValueError("episodes must share one grid")
        behaviors = np.stack([ep.behavior.as_array() for ep in episodes], axis=1)
        rewards = np.stack([ep.rewards for ep in episodes], axis=1)
        if example is Example.LQ_FINITE:
            means = np.stack([ep.means for ep in episodes], axis=1)
            vars_ = np.stack([ep.vars for ep in episodes], axis=1)
            return CriticBatch(example, grid, behaviors, rewards, means=means, vars=vars_)
        logmeans = np.stack([ep.logmeans for ep in episodes], axis=1)
        return CriticBatch(example, grid, behaviors, rewards, logmeans=logmeans)


def critic_g_values(theta: np.ndarray, psi: np.ndarray, batch: CriticBatch,
                    constants: ModelConstants,
                    variant: FormulaVariant = FormulaVariant.AUDITED) -> np.ndarray:
    """TD residuals G of shape (steps, M) for every grid step and test policy."""
    t_all = batch.grid.times()[:, None]
    t_k = t_all[:-1]
    dt = batch.grid.dt
    if batch.example is Example.LQ_FINITE:
        j = lq_value(theta, t_all, batch.means, batch.vars, constants)
        q0 = lq_q0(psi, t_k, batch.means[:-1], batch.vars[:-1], batch.behaviors, constants, variant)
    else:
        j = nlq_value(theta, np.broadcast_to(t_all, batch.logmeans.shape), batch.logmeans, constants, variant)
        hbar = nlq_policy_mean(batch.behaviors[0], batch.behaviors[1], t_k, constants)
        q0 = nlq_q0(psi, t_k, hbar, constants, variant)
    return j[1:] - j[:-1] + (batch.rewards - constants.beta * j[:-1] - q0) * dt


def td_residual(theta: np.ndarray, psi: np.ndarray, episode: EpisodeLog, k: int,
                constants: ModelConstants,
                variant: FormulaVariant = FormulaVariant.AUDITED) -> float:
    """Single-step TD residual G_{t_k} of one episode."""
    if not (0 <= k < episode.grid.steps):
        raise IndexError(f"step index {k} outside 0..{episode.grid.steps - 1}")
    batch = CriticBatch.from_episodes(constants.example, [episode])
    return float(critic_g_values(theta, psi, batch, constants, variant)[k, 0])


def critic_direction(theta: np.ndarray, psi: np.ndarray, batch: CriticBatch,
                     constants: ModelConstants,
                     variant: FormulaVariant = FormulaVariant.AUDITED) -> Tuple[np.ndarray, np.ndarray]:
    """Raw update directions (before learning rates): discounted gradient-weighted G sums."""
    g = critic_g_values(theta, psi, batch, constants, variant)
    t_k = batch.grid.times()[:-1][:, None]
    disc = np.exp(-constants.beta * t_k)
    if batch.example is Example.LQ_FINITE:
        grad_j = lq_value_grad(theta, t_k, batch.means[:-1], batch.vars[:-1], constants)
        grad_q = lq_q0_grad(psi, t_k, batch.means[:-1], batch.vars[:-1], batch.behaviors, constants, variant)
    else:
        grad_j = nlq_value_grad(theta, np.broadcast_to(t_k, g.shape), batch.logmeans[:-1], constants, variant)
        hbar = nlq_policy_mean(batch.behaviors[0], batch.behaviors[1], t_k, constants)
        grad_q = nlq_q0_grad(psi, t_k, hbar, constants, variant)
    w = disc * g
    m = batch.n_policies
    d_theta = np.einsum("pkm,km->p", np.broadcast_to(grad_j, (grad_j.shape[0],) + g.shape), w) / m
    d_psi = np.einsum("pkm,km->p", np.broadcast_to(grad_q, (grad_q.shape[0],) + g.shape), w) / m
    return d_theta, d_psi


def critic_update(theta: np.ndarray, psi: np.ndarray, batch: CriticBatch,
                  alpha_theta: np.ndarray, alpha_psi: np.ndarray,
                  constants: ModelConstants,
                  variant: FormulaVariant = FormulaVariant.AUDITED,
                  episode: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """One batched critic step: parameters plus rate-scaled update directions."""
    d_theta, d_psi = critic_direction(theta, psi, batch, constants, variant)
    theta_next = np.asarray(theta, dtype=float) + np.asarray(alpha_theta) * d_theta
    psi_next = np.asarray(psi, dtype=float) + np.asarray(alpha_psi) * d_psi
    if not (np.all(np.isfinite(theta_next)) and np.all(np.isfinite(psi_next))):
        raise DivergenceError("critic update produced non-finite parameters", episode=episode)
    return theta_next, psi_next
