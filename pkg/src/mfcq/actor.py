"""Policy improvement: occupation-measure mixtures, closed-form policy gradients, inner SGA.

The actor gradient is the ascent gradient of the discounted objective

    sum_k e^{-beta t_k} ( w_o * q_gamma(t_k, mu_hat_k, pi_phi)
                          - (w_c/2) * q_gamma(t_k, mu_hat_k, pi_phi)^2 ),

with all state/action integrals evaluated in closed form (Gaussian moments for
the LQ family, exponential moments for the non-LQ one).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .core import (
    DivergenceError,
    Example,
    GaussianSummary,
    LogMeanSummary,
    MeasureSummary,
    MixtureSummary,
    ModelConstants,
    Schedule,
)
from .funcs import FormulaVariant, lq_entropy, lq_q0, nlq_policy_mean, nlq_q0

__all__ = ["ActorConfig", "MixturePath", "mixture", "actor_gradient",
           "actor_objective", "actor_inner_loop"]


@dataclass(frozen=True)
class ActorConfig:
    """Inner-iteration count, exploration-mixing schedule, loss weights and rates.

    ``w_o``/``w_c`` give the weights of the final (consistency-weighted) step
    as functions of the episode index; the L-1 preceding inner iterations
    always run pure optimality ascent (w_o=1, w_c=0).
    """

    inner_iters: int
    rho: Schedule
    w_o: Schedule
    w_c: Schedule
    alpha_phi: Schedule

    def __post_init__(self):
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")


@dataclass(frozen=True)
class MixturePath:
    """Per-grid-point moments of the occupation-measure mixture.

    For the LQ family the functionals need (mean, second central moment); the
    non-LQ family is insensitive to the law, so only the grid matters there.
    """

    t: np.ndarray
    mean: np.ndarray
    second_moment: Optional[np.ndarray] = None


def mixture(mu_pi: MeasureSummary, mu_h: MeasureSummary, rho: float) -> MeasureSummary:
    """Two-component occupation mixture (1-rho)*mu_pi + rho*mu_h."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho must lie in [0, 1]")
    if isinstance(mu_pi, GaussianSummary) and isinstance(mu_h, GaussianSummary):
        return MixtureSummary(((1.0 - rho, mu_pi), (rho, mu_h)))
    if isinstance(mu_pi, LogMeanSummary) and isinstance(mu_h, LogMeanSummary):
        # the non-LQ law enters all functionals through its mean only
        mean = (1.0 - rho) * np.exp(mu_pi.logmean) + rho * np.exp(mu_h.logmean)
        return LogMeanSummary(float(np.log(mean)))
    raise ValueError("mixture components must have matching summary types")


def _lq_kernels(psi: np.ndarray, phi: np.ndarray, t: np.ndarray, vr: np.ndarray,
                constants: ModelConstants) -> np.ndarray:
    """Closed-form Gibbs score integrals for the LQ Gaussian policy, shape (4, K).

    These are simultaneously the gradient of q_gamma(t, mu, pi^phi) in phi,
    which the finite-difference oracle in the tests pins down.
    """
    g = constants.gamma
    p1, p2, p3, p4, p5 = psi
    f1, f2, f3, f4 = phi
    tau = np.asarray(t) - constants.T
    lead = np.exp(p1 + p2 * tau)
    v = g * np.exp(-f1 - f2 * tau)
    e_phi = np.exp(-f2 * tau)
    g4 = f4 * e_phi
    kappa = p4 * np.exp(-p2 * tau) - p5 * g4
    k1 = 0.5 * lead * v - 0.5 * g
    k2 = tau * (-lead * g4 * p5 * kappa + 0.5 * lead * v - 0.5 * g)
    k3 = lead * (p3 - f3) * np.asarray(vr)
    k4 = e_phi * lead * p5 * kappa
    return np.stack([k1 * np.ones_like(tau), k2, k3, k4 * np.ones_like(tau)])


def _lq_qgamma(psi: np.ndarray, phi: np.ndarray, t: np.ndarray, vr: np.ndarray,
               constants: ModelConstants, variant: FormulaVariant) -> np.ndarray:
    q0 = lq_q0(psi, t, 0.0, vr, phi, constants, variant)
    return q0 + constants.gamma * lq_entropy(phi[0], phi[1], t, constants)


def _nlq_kernels(psi: np.ndarray, phi: np.ndarray, t: np.ndarray,
                 constants: ModelConstants) -> np.ndarray:
    """Closed-form score integrals for the exponential policy, shape (2, K)."""
    g = constants.gamma
    f1, f2 = phi
    tau = np.asarray(t) - constants.T
    w = np.sqrt(np.exp(2.0 * f2) + g * np.exp(-f1 - constants.beta * tau))
    lam = (np.exp(f1 + constants.beta * tau) / g) * (w - np.exp(f2))
    hbar = np.exp(f2) + w
    kappa1 = np.exp(psi[0] + constants.beta * tau) * (2.0 * np.exp(psi[1]) - hbar) + g * lam
    dlam1 = lam - 0.5 / w
    dlam2 = -np.exp(f2) * lam / w
    scale = -kappa1 / lam**2
    return np.stack([dlam1 * scale, dlam2 * scale])


def _nlq_qgamma(psi: np.ndarray, phi: np.ndarray, t: np.ndarray,
                constants: ModelConstants, variant: FormulaVariant) -> np.ndarray:
    hbar = nlq_policy_mean(phi[0], phi[1], t, constants)
    return nlq_q0(psi, t, hbar, constants, variant) + constants.gamma * (1.0 + np.log(hbar))


def _kernels_and_q(example: Example, psi, phi, path: MixturePath,
                   constants: ModelConstants, variant: FormulaVariant):
    if example is Example.LQ_FINITE:
        if path.second_moment is None:
            raise ValueError("LQ mixture path needs second central moments")
        return (_lq_kernels(psi, phi, path.t, path.second_moment, constants),
                _lq_qgamma(psi, phi, path.t, path.second_moment, constants, variant))
    return (_nlq_kernels(psi, phi, path.t, constants),
            _nlq_qgamma(psi, phi, path.t, constants, variant))


def actor_gradient(example: Example, psi: np.ndarray, phi: np.ndarray, path: MixturePath,
                   w_o: float, w_c: float, constants: ModelConstants,
                   variant: FormulaVariant = FormulaVariant.AUDITED) -> np.ndarray:
    """Ascent gradient of the weighted (optimality, consistency) actor objective."""
    kernels, qg = _kernels_and_q(example, psi, phi, path, constants, variant)
    disc = np.exp(-constants.beta * path.t)
    grad = np.einsum("pk,k->p", kernels, disc * (w_o - w_c * qg))
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite actor gradient")
    return grad


def actor_objective(example: Example, psi: np.ndarray, phi: np.ndarray, path: MixturePath,
                    w_o: float, w_c: float, constants: ModelConstants,
                    variant: FormulaVariant = FormulaVariant.AUDITED) -> float:
    """Sampled objective sum_k e^{-beta t_k}(w_o q_gamma - (w_c/2) q_gamma^2)."""
    _, qg = _kernels_and_q(example, psi, phi, path, constants, variant)
    disc = np.exp(-constants.beta * path.t)
    return float(np.sum(disc * (w_o * qg - 0.5 * w_c * qg**2)))


def actor_inner_loop(example: Example, psi: np.ndarray, phi0: np.ndarray, path: MixturePath,
                     config: ActorConfig, n: int,
                     constants: ModelConstants,
                     variant: FormulaVariant = FormulaVariant.AUDITED,
                     stream: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, List[float]]:
    """L-1 optimality SGA steps followed by one consistency-weighted step.

    ``stream`` is accepted for interface parity but unused: every integral is
    closed-form, so the inner loop is deterministic given the mixture path.
    Returns the final phi and the optimality-objective trace (one entry per
    iterate, including the start).
    """
    phi = np.asarray(phi0, dtype=float).copy()
    trace = [actor_objective(example, psi, phi, path, 1.0, 0.0, constants, variant)]
    for l in range(1, config.inner_iters):
        rate = config.alpha_phi(n, l)
        phi = phi + rate * actor_gradient(example, psi, phi, path, 1.0, 0.0, constants, variant)
        if not np.all(np.isfinite(phi)):
            raise DivergenceError(f"actor iterate diverged at inner step {l}", episode=n)
        trace.append(actor_objective(example, psi, phi, path, 1.0, 0.0, constants, variant))
    w_o = float(config.w_o(n)[0])
    w_c = float(config.w_c(n)[0])
    rate = config.alpha_phi(n, config.inner_iters)
    phi = phi + rate * actor_gradient(example, psi, phi, path, w_o, w_c, constants, variant)
    if not np.all(np.isfinite(phi)):
        raise DivergenceError("actor iterate diverged at the consistency step", episode=n)
    trace.append(actor_objective(example, psi, phi, path, 1.0, 0.0, constants, variant))
    return phi, trace
